#include "robreg/bench.hpp"

#include "robreg/errors.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <tuple>

namespace robreg {

std::string_view to_string(RunStatus status) {
  switch (status) {
    case RunStatus::ok: return "ok";
    case RunStatus::phase_failure: return "phase-failure";
    case RunStatus::boost_failure: return "boost-failure";
    case RunStatus::diverged: return "diverged";
  }
  return "ok";
}

RunStatus parse_status(std::string_view name) {
  for (auto s : {RunStatus::ok, RunStatus::phase_failure, RunStatus::boost_failure, RunStatus::diverged})
    if (to_string(s) == name) return s;
  throw InvalidArgument("unknown status " + std::string(name));
}

std::string_view to_string(ReportFormat format) { return format == ReportFormat::csv ? "csv" : "json-lines"; }

ReportFormat parse_format(std::string_view name) {
  if (name == "csv") return ReportFormat::csv;
  if (name == "json-lines" || name == "jsonl") return ReportFormat::json_lines;
  throw InvalidArgument("unknown report format " + std::string(name));
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t cell, std::uint64_t seed_index) {
  auto mix = [](std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  };
  return mix(mix(base ^ mix(cell)) + seed_index);
}

double quantile(std::vector<double> values, double q) {
  if (values.empty()) return std::numeric_limits<double>::quiet_NaN();
  if (!(q >= 0.0 && q <= 1.0)) throw InvalidArgument("quantile level must lie in [0, 1]");
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return values[lo] + frac * (values[hi] - values[lo]);
}

std::vector<SummaryRow> summarize(const std::vector<ReportRow>& rows) {
  using Key = std::tuple<std::string, double, double, std::string>;
  std::vector<Key> order;
  std::vector<std::vector<double>> errors;
  for (const auto& r : rows) {
    const Key key{r.algorithm, r.epsilon, r.kappa, r.adversary};
    auto it = std::find(order.begin(), order.end(), key);
    std::size_t idx = static_cast<std::size_t>(it - order.begin());
    if (it == order.end()) {
      order.push_back(key);
      errors.emplace_back();
    }
    if (r.status == "ok" && std::isfinite(r.error)) errors[idx].push_back(r.error);
  }
  std::vector<SummaryRow> out;
  for (std::size_t i = 0; i < order.size(); ++i) {
    SummaryRow s;
    std::tie(s.algorithm, s.epsilon, s.kappa, s.adversary) = order[i];
    s.ok = static_cast<int>(errors[i].size());
    s.median = quantile(errors[i], 0.5);
    s.iqr = quantile(errors[i], 0.75) - quantile(errors[i], 0.25);
    out.push_back(s);
  }
  return out;
}

namespace {

constexpr const char* kCsvHeader =
    "algorithm,epsilon,kappa,adversary,seed,metric,error,oracle_calls,erm_calls,wall_ms,status";
constexpr const char* kSummaryHeader = "# summary: algorithm,epsilon,kappa,adversary,ok,median,iqr";

std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string json_number(double v) { return std::isfinite(v) ? fmt(v) : "null"; }

std::string json_string(const std::string& s) { return nlohmann::json(s).dump(); }

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, sep)) out.push_back(cell);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

double parse_real(const std::string& s) {
  if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  std::size_t used = 0;
  const double v = std::stod(s, &used);
  if (used != s.size()) throw InvalidArgument("malformed number " + s);
  return v;
}

long long parse_count(const std::string& s) {
  std::size_t used = 0;
  const long long v = std::stoll(s, &used);
  if (used != s.size()) throw InvalidArgument("malformed integer " + s);
  return v;
}

double json_real(const nlohmann::json& j) {
  return j.is_null() ? std::numeric_limits<double>::quiet_NaN() : j.get<double>();
}

}  // namespace

void emit_report(const ExperimentReport& report, ReportFormat format, std::ostream& out) {
  if (report.rows.empty()) throw InvalidArgument("refusing to emit an empty report");
  const std::vector<SummaryRow> summary = report.summary.empty() ? summarize(report.rows) : report.summary;
  if (format == ReportFormat::csv) {
    out << kCsvHeader << '\n';
    for (const auto& r : report.rows) {
      out << r.algorithm << ',' << fmt(r.epsilon) << ',' << fmt(r.kappa) << ',' << r.adversary << ',' << r.seed << ','
          << r.metric << ',' << fmt(r.error) << ',' << r.oracle_calls << ',' << r.erm_calls << ',' << fmt(r.wall_ms)
          << ',' << r.status << '\n';
    }
    out << kSummaryHeader << '\n';
    for (const auto& s : summary) {
      out << "# " << s.algorithm << ',' << fmt(s.epsilon) << ',' << fmt(s.kappa) << ',' << s.adversary << ',' << s.ok
          << ',' << fmt(s.median) << ',' << fmt(s.iqr) << '\n';
    }
  } else {
    for (const auto& r : report.rows) {
      out << "{\"kind\":\"row\",\"algorithm\":" << json_string(r.algorithm) << ",\"epsilon\":" << json_number(r.epsilon)
          << ",\"kappa\":" << json_number(r.kappa) << ",\"adversary\":" << json_string(r.adversary)
          << ",\"seed\":" << r.seed << ",\"metric\":" << json_string(r.metric) << ",\"error\":" << json_number(r.error)
          << ",\"oracle_calls\":" << r.oracle_calls << ",\"erm_calls\":" << r.erm_calls
          << ",\"wall_ms\":" << json_number(r.wall_ms) << ",\"status\":" << json_string(r.status) << "}\n";
    }
    for (const auto& s : summary) {
      out << "{\"kind\":\"summary\",\"algorithm\":" << json_string(s.algorithm)
          << ",\"epsilon\":" << json_number(s.epsilon) << ",\"kappa\":" << json_number(s.kappa)
          << ",\"adversary\":" << json_string(s.adversary) << ",\"ok\":" << s.ok
          << ",\"median\":" << json_number(s.median) << ",\"iqr\":" << json_number(s.iqr) << "}\n";
    }
  }
}

void emit_report(const ExperimentReport& report, ReportFormat format, const std::filesystem::path& path) {
  if (report.rows.empty()) throw InvalidArgument("refusing to emit an empty report");
  std::ostringstream buffer;
  emit_report(report, format, buffer);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << buffer.str();
  out.flush();
  if (!out) throw IoError("write failed for " + path.string());
}

ExperimentReport parse_report(std::istream& in, ReportFormat format) {
  ExperimentReport report;
  std::string line;
  int line_no = 0;
  try {
    if (format == ReportFormat::csv) {
      bool in_summary = false;
      while (std::getline(in, line)) {
        ++line_no;
        if (line_no == 1) {
          if (line != kCsvHeader) throw InvalidArgument("unexpected report header");
          continue;
        }
        if (line == kSummaryHeader) {
          in_summary = true;
          continue;
        }
        if (in_summary) {
          if (line.rfind("# ", 0) != 0) throw InvalidArgument("summary rows must start with '# '");
          const auto f = split(line.substr(2), ',');
          if (f.size() != 7) throw InvalidArgument("summary row needs 7 fields");
          SummaryRow s{f[0], parse_real(f[1]), parse_real(f[2]), f[3], static_cast<int>(parse_count(f[4])),
                       parse_real(f[5]), parse_real(f[6])};
          report.summary.push_back(s);
          continue;
        }
        const auto f = split(line, ',');
        if (f.size() != 11) throw InvalidArgument("report row needs 11 fields");
        ReportRow r{f[0], parse_real(f[1]), parse_real(f[2]), f[3], static_cast<int>(parse_count(f[4])), f[5],
                    parse_real(f[6]), parse_count(f[7]), parse_count(f[8]), parse_real(f[9]), f[10]};
        report.rows.push_back(r);
      }
    } else {
      while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const auto j = nlohmann::json::parse(line);
        const std::string kind = j.at("kind").get<std::string>();
        if (kind == "row") {
          ReportRow r{j.at("algorithm").get<std::string>(), json_real(j.at("epsilon")), json_real(j.at("kappa")),
                      j.at("adversary").get<std::string>(), j.at("seed").get<int>(), j.at("metric").get<std::string>(),
                      json_real(j.at("error")), j.at("oracle_calls").get<long long>(),
                      j.at("erm_calls").get<long long>(), json_real(j.at("wall_ms")), j.at("status").get<std::string>()};
          report.rows.push_back(r);
        } else if (kind == "summary") {
          SummaryRow s{j.at("algorithm").get<std::string>(), json_real(j.at("epsilon")), json_real(j.at("kappa")),
                       j.at("adversary").get<std::string>(), j.at("ok").get<int>(), json_real(j.at("median")),
                       json_real(j.at("iqr"))};
          report.summary.push_back(s);
        } else {
          throw InvalidArgument("unknown record kind " + kind);
        }
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument("report line " + std::to_string(line_no) + ": " + e.what());
  } catch (const std::logic_error& e) {
    throw InvalidArgument("report line " + std::to_string(line_no) + ": " + e.what());
  }
  return report;
}

}  // namespace robreg
