#include "robreg/errors.hpp"
#include "robreg/generate.hpp"
#include "robreg/io.hpp"
#include "robreg/types.hpp"

#include "json.hpp"

#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <utility>

namespace robreg {

std::string_view to_string(LinkKind kind) {
  switch (kind) {
    case LinkKind::squared: return "squared";
    case LinkKind::logistic: return "logistic";
    case LinkKind::hinge: return "hinge";
  }
  return "unknown";
}

LinkKind parse_link(std::string_view name) {
  for (LinkKind k : {LinkKind::squared, LinkKind::logistic, LinkKind::hinge}) {
    if (to_string(k) == name) return k;
  }
  throw InvalidArgument("unknown link: " + std::string(name));
}

namespace {

struct ConstantField {
  const char* name;
  double Constants::*field;
};

const ConstantField kConstantFields[] = {
    {"C_est", &Constants::est},
    {"C_ub", &Constants::ub},
    {"C_lp", &Constants::lp},
    {"C_id", &Constants::id},
    {"C_ng", &Constants::ng},
    {"C_env", &Constants::env},
    {"C_boost", &Constants::boost_radius},
    {"c_loop", &Constants::loop},
    {"c_alpha", &Constants::alpha},
    {"C_T", &Constants::filter_rounds},
    {"c_dir", &Constants::directions},
    {"c_T", &Constants::accel_iters},
    {"C_lp_accel", &Constants::accel_floor},
    {"c_moreau", &Constants::moreau_steps},
    {"eps_kappa_warn", &Constants::eps_kappa_warn},
};

}  // namespace

bool Constants::set(std::string_view name, double value) {
  for (const auto& f : kConstantFields) {
    if (name == f.name) {
      this->*f.field = value;
      return true;
    }
  }
  return false;
}

std::optional<double> Constants::get(std::string_view name) const {
  for (const auto& f : kConstantFields) {
    if (name == f.name) return this->*f.field;
  }
  return std::nullopt;
}

const std::vector<std::string>& Constants::names() {
  static const std::vector<std::string> all = [] {
    std::vector<std::string> out;
    for (const auto& f : kConstantFields) out.emplace_back(f.name);
    return out;
  }();
  return all;
}

void ProblemSpec::validate() const {
  auto finite = [](double v) { return std::isfinite(v); };
  if (!finite(L) || !finite(mu) || !finite(sigma) || !finite(epsilon)) {
    throw InvalidArgument("problem parameters must be finite");
  }
  if (!(mu > 0.0) || !(mu <= L)) throw InvalidArgument("need 0 < mu <= L");
  if (sigma < 0.0) throw InvalidArgument("sigma must be nonnegative");
  if (epsilon < 0.0 || epsilon >= 0.5) throw InvalidArgument("epsilon must lie in [0, 1/2)");
  if (lambda_env && !(*lambda_env > 0.0 && finite(*lambda_env))) {
    throw InvalidArgument("lambda_env must be positive and finite");
  }
  for (const auto& name : Constants::names()) {
    const double v = *constants.get(name);
    if (!finite(v) || v < 0.0) throw InvalidArgument("constant " + name + " must be finite and nonnegative");
  }
}

Dataset::Dataset(Mat covariates, Vec labels, std::optional<GroundTruth> gt)
    : X(std::move(covariates)), y(std::move(labels)), truth(std::move(gt)) {
  if (X.rows() != y.size()) throw InvalidArgument("covariate and label counts differ");
  if (X.rows() < 1) throw InvalidArgument("dataset must be nonempty");
  if (!X.allFinite() || !y.allFinite()) throw InvalidArgument("dataset entries must be finite");
}

Dataset Dataset::from_samples(const std::vector<Sample>& samples) {
  if (samples.empty()) throw InvalidArgument("dataset must be nonempty");
  const Index d = samples.front().x.size();
  Mat X(static_cast<Index>(samples.size()), d);
  Vec y(static_cast<Index>(samples.size()));
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (samples[i].x.size() != d) throw InvalidArgument("samples disagree on dimension");
    X.row(static_cast<Index>(i)) = samples[i].x.transpose();
    y(static_cast<Index>(i)) = samples[i].y;
  }
  return Dataset(std::move(X), std::move(y));
}

Dataset Dataset::subset(const std::vector<Index>& idx) const {
  Mat Xs(static_cast<Index>(idx.size()), d());
  Vec ys(static_cast<Index>(idx.size()));
  std::optional<GroundTruth> gt;
  if (truth) {
    gt = *truth;
    gt->good.clear();
    gt->bad.clear();
  }
  std::vector<bool> bad(static_cast<std::size_t>(n()), false);
  if (truth) {
    for (Index i : truth->bad) bad[static_cast<std::size_t>(i)] = true;
  }
  for (std::size_t k = 0; k < idx.size(); ++k) {
    const Index i = idx[k];
    if (i < 0 || i >= n()) throw InvalidArgument("subset index out of range");
    Xs.row(static_cast<Index>(k)) = X.row(i);
    ys(static_cast<Index>(k)) = y(i);
    if (gt) (bad[static_cast<std::size_t>(i)] ? gt->bad : gt->good).push_back(static_cast<Index>(k));
  }
  return Dataset(std::move(Xs), std::move(ys), std::move(gt));
}

Vec uniform_weights(Index n) { return Vec::Constant(n, 1.0 / static_cast<double>(n)); }

void check_weights(const Vec& w) {
  const double cap = 1.0 / static_cast<double>(w.size());
  const double slack = 1e-12 * cap;
  if (!w.allFinite()) throw InvalidArgument("weights must be finite");
  if (w.size() > 0 && (w.minCoeff() < 0.0 || w.maxCoeff() > cap + slack)) {
    throw InvalidArgument("weights must lie in [0, 1/n]");
  }
  if (w.sum() > 1.0 + 1e-12) throw InvalidArgument("weights must sum to at most 1");
}

// ---------------------------------------------------------------------------
// CSV and JSON sidecar

namespace {

std::string format_real(double v) {
  std::ostringstream s;
  s.precision(17);
  s << v;
  return s.str();
}

std::vector<std::string> split_commas(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_real(const std::string& cell, std::size_t row) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(cell, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != cell.size()) {
    throw InvalidArgument("row " + std::to_string(row) + ": not a number: '" + cell + "'");
  }
  return v;
}

}  // namespace

void write_dataset_csv(const Dataset& data, std::ostream& out) {
  out << "y";
  for (Index j = 0; j < data.d(); ++j) out << ",x" << (j + 1);
  out << '\n';
  for (Index i = 0; i < data.n(); ++i) {
    out << format_real(data.y(i));
    for (Index j = 0; j < data.d(); ++j) out << ',' << format_real(data.X(i, j));
    out << '\n';
  }
}

Dataset read_dataset_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw InvalidArgument("empty dataset file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto header = split_commas(line);
  if (header.size() < 2 || header[0] != "y") throw InvalidArgument("header must be y,x1,...,xd");
  for (std::size_t j = 1; j < header.size(); ++j) {
    if (header[j] != "x" + std::to_string(j)) throw InvalidArgument("header must be y,x1,...,xd");
  }
  const std::size_t d = header.size() - 1;
  std::vector<Sample> samples;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto cells = split_commas(line);
    if (cells.size() != d + 1) throw InvalidArgument("row " + std::to_string(row) + ": wrong column count");
    Sample s{Vec(static_cast<Index>(d)), parse_real(cells[0], row)};
    for (std::size_t j = 0; j < d; ++j) s.x(static_cast<Index>(j)) = parse_real(cells[j + 1], row);
    samples.push_back(std::move(s));
  }
  return Dataset::from_samples(samples);
}

void write_truth_json(const GroundTruth& truth, const ProblemSpec& spec, std::ostream& out) {
  nlohmann::json j;
  j["theta_star"] = std::vector<double>(truth.theta_star.data(), truth.theta_star.data() + truth.theta_star.size());
  j["spectrum"] = std::vector<double>(truth.spectrum.data(), truth.spectrum.data() + truth.spectrum.size());
  j["rotation_seed"] = truth.rotation_seed;
  j["corrupted"] = truth.bad;
  j["sigma"] = truth.sigma;
  j["L"] = spec.L;
  j["mu"] = spec.mu;
  j["epsilon"] = spec.epsilon;
  j["link"] = std::string(to_string(spec.link));
  out << j.dump(2) << '\n';
}

GroundTruth read_truth_json(std::istream& in, Index n, ProblemSpec* spec) {
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument(std::string("truth file is not valid JSON: ") + e.what());
  }
  GroundTruth t;
  try {
    const auto theta = j.at("theta_star").get<std::vector<double>>();
    const auto spectrum = j.at("spectrum").get<std::vector<double>>();
    if (theta.size() != spectrum.size()) throw InvalidArgument("truth dimensions disagree");
    t.theta_star = Eigen::Map<const Vec>(theta.data(), static_cast<Index>(theta.size()));
    t.spectrum = Eigen::Map<const Vec>(spectrum.data(), static_cast<Index>(spectrum.size()));
    t.rotation_seed = j.at("rotation_seed").get<std::uint64_t>();
    t.bad = j.at("corrupted").get<std::vector<Index>>();
    t.sigma = j.at("sigma").get<double>();
    if (spec) {
      spec->L = j.at("L").get<double>();
      spec->mu = j.at("mu").get<double>();
      spec->sigma = t.sigma;
      spec->epsilon = j.at("epsilon").get<double>();
      spec->link = parse_link(j.at("link").get<std::string>());
    }
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument(std::string("truth file is missing fields: ") + e.what());
  }
  t.sigma_star = covariance_from(t.spectrum, random_rotation(t.theta_star.size(), t.rotation_seed));
  std::vector<bool> bad(static_cast<std::size_t>(n), false);
  for (Index i : t.bad) {
    if (i < 0 || i >= n) throw InvalidArgument("corrupted index out of range");
    bad[static_cast<std::size_t>(i)] = true;
  }
  for (Index i = 0; i < n; ++i) {
    if (!bad[static_cast<std::size_t>(i)]) t.good.push_back(i);
  }
  return t;
}

void save_dataset(const Dataset& data, const std::filesystem::path& csv_path) {
  std::ofstream out(csv_path);
  if (!out) throw IoError("cannot write " + csv_path.string());
  write_dataset_csv(data, out);
  if (!out) throw IoError("write failed for " + csv_path.string());
}

Dataset load_dataset(const std::filesystem::path& csv_path) {
  std::ifstream in(csv_path);
  if (!in) throw IoError("cannot read " + csv_path.string());
  return read_dataset_csv(in);
}

}  // namespace robreg
