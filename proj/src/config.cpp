#include "robreg/bench.hpp"

#include "robreg/errors.hpp"

#include <toml.hpp>

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

namespace robreg {

namespace {

int line_of(const toml::node& node) { return static_cast<int>(node.source().begin.line); }

double as_real(const toml::node& node, std::string_view key) {
  const auto v = node.value<double>();
  if (!v || !std::isfinite(*v)) throw ConfigError(std::string(key) + " must be a finite number", line_of(node));
  return *v;
}

std::int64_t as_integer(const toml::node& node, std::string_view key) {
  const auto v = node.as_integer();
  if (!v) throw ConfigError(std::string(key) + " must be an integer", line_of(node));
  return v->get();
}

std::string as_text(const toml::node& node, std::string_view key) {
  const auto v = node.value<std::string>();
  if (!v) throw ConfigError(std::string(key) + " must be a string", line_of(node));
  return *v;
}

bool as_bool(const toml::node& node, std::string_view key) {
  const auto v = node.value<bool>();
  if (!v) throw ConfigError(std::string(key) + " must be true or false", line_of(node));
  return *v;
}

std::int64_t integer_at_least(const toml::node& node, std::string_view key, std::int64_t min) {
  const auto v = as_integer(node, key);
  if (v < min || v > (std::int64_t{1} << 40)) {
    throw ConfigError(std::string(key) + " must be at least " + std::to_string(min), line_of(node));
  }
  return v;
}

template <typename Pred>
double checked(const toml::node& node, std::string_view key, Pred ok, const char* requirement) {
  const double v = as_real(node, key);
  if (!ok(v)) throw ConfigError(std::string(key) + " " + requirement, line_of(node));
  return v;
}

const toml::array& as_list(const toml::node& node, std::string_view key) {
  const auto* arr = node.as_array();
  if (!arr) throw ConfigError(std::string(key) + " must be a list", line_of(node));
  if (arr->empty()) throw ConfigError(std::string(key) + " must not be empty", line_of(node));
  return *arr;
}

template <typename Parse>
auto parse_named(const toml::node& node, std::string_view key, Parse parse) {
  const std::string name = as_text(node, key);
  try {
    return parse(name);
  } catch (const InvalidArgument& e) {
    throw ConfigError(e.what(), line_of(node));
  }
}

void parse_problem(const toml::table& section, ExperimentConfig& cfg) {
  for (auto&& [key, node] : section) {
    const std::string k(key.str());
    if (k == "d") {
      cfg.d = static_cast<Index>(integer_at_least(node, k, 1));
    } else if (k == "n") {
      cfg.n = static_cast<Index>(integer_at_least(node, k, 2));
    } else if (k == "L") {
      cfg.L = checked(node, k, [](double v) { return v > 0.0; }, "must be positive");
    } else if (k == "sigma") {
      cfg.sigma = checked(node, k, [](double v) { return v >= 0.0; }, "must be nonnegative");
    } else if (k == "delta") {
      cfg.settings.delta = checked(node, k, [](double v) { return v > 0.0 && v < 1.0; }, "must lie in (0, 1)");
    } else if (k == "lambda_env") {
      cfg.settings.lambda_env = checked(node, k, [](double v) { return v > 0.0; }, "must be positive");
    } else if (k == "signal") {
      cfg.settings.signal = as_real(node, k);
    } else if (k == "reference_n") {
      cfg.settings.reference_n = static_cast<Index>(integer_at_least(node, k, 1));
    } else if (k == "model") {
      cfg.settings.naive_model = parse_named(node, k, parse_model);
    } else {
      throw ConfigError("unknown key problem." + k, line_of(node));
    }
  }
}

void parse_sweep(const toml::table& section, ExperimentConfig& cfg) {
  for (auto&& [key, node] : section) {
    const std::string k(key.str());
    if (k == "epsilon" || k == "kappa") {
      auto& out = k == "epsilon" ? cfg.epsilons : cfg.kappas;
      out.clear();
      for (const auto& item : as_list(node, k)) {
        if (k == "epsilon") {
          out.push_back(checked(item, k, [](double v) { return v >= 0.0 && v < 0.5; }, "must lie in [0, 1/2)"));
        } else {
          out.push_back(checked(item, k, [](double v) { return v >= 1.0; }, "must be at least 1"));
        }
      }
    } else if (k == "adversary") {
      cfg.adversaries.clear();
      for (const auto& item : as_list(node, k)) cfg.adversaries.push_back(parse_named(item, k, parse_adversary));
    } else if (k == "algorithm") {
      cfg.algorithms.clear();
      for (const auto& item : as_list(node, k)) cfg.algorithms.push_back(parse_named(item, k, parse_algorithm));
    } else if (k == "seeds") {
      const auto v = as_integer(node, k);
      if (v < 1 || v > std::numeric_limits<int>::max()) throw ConfigError("seeds must be at least 1", line_of(node));
      cfg.seeds = static_cast<int>(v);
    } else if (k == "base_seed") {
      const auto v = as_integer(node, k);
      if (v < 0) throw ConfigError("base_seed must be nonnegative", line_of(node));
      cfg.base_seed = static_cast<std::uint64_t>(v);
    } else {
      throw ConfigError("unknown key sweep." + k, line_of(node));
    }
  }
}

void parse_adversary_section(const toml::table& section, ExperimentConfig& cfg) {
  auto& a = cfg.adversary_overrides;
  for (auto&& [key, node] : section) {
    const std::string k(key.str());
    if (k == "gross_share") {
      a.gross_share = as_real(node, k);
    } else if (k == "gross_norm") {
      a.gross_norm = as_real(node, k);
    } else if (k == "gross_shift") {
      a.gross_shift = as_real(node, k);
    } else if (k == "shadow_base") {
      a.shadow_base = as_real(node, k);
    } else if (k == "shadow_ratio") {
      a.shadow_ratio = as_real(node, k);
    } else if (k == "shadow_levels") {
      a.shadow_levels = static_cast<int>(integer_at_least(node, k, 0));
    } else if (k == "shift") {
      a.shift = as_real(node, k);
    } else {
      throw ConfigError("unknown key adversary." + k, line_of(node));
    }
  }
}

void parse_constants(const toml::table& section, ExperimentConfig& cfg) {
  for (auto&& [key, node] : section) {
    const std::string k(key.str());
    const double v = as_real(node, k);
    if (v < 0.0) throw ConfigError("constant " + k + " must be nonnegative", line_of(node));
    if (!cfg.constants.set(k, v)) throw ConfigError("unknown constant " + k, line_of(node));
  }
}

void parse_tolerances(const toml::table& section, ExperimentConfig& cfg) {
  for (auto&& [key, node] : section) {
    const std::string k(key.str());
    cfg.tolerances[k] = as_real(node, k);
  }
}

void parse_output(const toml::table& section, ExperimentConfig& cfg) {
  for (auto&& [key, node] : section) {
    const std::string k(key.str());
    if (k == "path") {
      cfg.output_path = as_text(node, k);
    } else if (k == "format") {
      cfg.format = parse_named(node, k, parse_format);
    } else if (k == "threads") {
      const auto v = as_integer(node, k);
      if (v < 1 || v > 1024) throw ConfigError("threads must lie in [1, 1024]", line_of(node));
      cfg.threads = static_cast<int>(v);
    } else if (k == "timing") {
      cfg.settings.timing = as_bool(node, k);
    } else if (k == "trace") {
      cfg.settings.trace = as_bool(node, k);
    } else {
      throw ConfigError("unknown key output." + k, line_of(node));
    }
  }
}

}  // namespace

void ExperimentConfig::validate() const {
  if (d < 1) throw ConfigError("d must be at least 1", 0);
  if (n < 2) throw ConfigError("n must be at least 2", 0);
  if (!(L > 0.0)) throw ConfigError("L must be positive", 0);
  if (!(sigma >= 0.0)) throw ConfigError("sigma must be nonnegative", 0);
  if (epsilons.empty()) throw ConfigError("sweep.epsilon must not be empty", 0);
  if (kappas.empty()) throw ConfigError("sweep.kappa must not be empty", 0);
  if (adversaries.empty()) throw ConfigError("sweep.adversary must not be empty", 0);
  if (algorithms.empty()) throw ConfigError("sweep.algorithm must not be empty", 0);
  if (seeds < 1) throw ConfigError("seeds must be at least 1", 0);
  for (double e : epsilons)
    if (!(e >= 0.0 && e < 0.5)) throw ConfigError("every epsilon must lie in [0, 1/2)", 0);
  for (double k : kappas)
    if (!(k >= 1.0)) throw ConfigError("every kappa must be at least 1", 0);
  if (!(settings.delta > 0.0 && settings.delta < 1.0)) throw ConfigError("delta must lie in (0, 1)", 0);
  if (!(settings.lambda_env > 0.0)) throw ConfigError("lambda_env must be positive", 0);
  if (settings.reference_n < 1) throw ConfigError("reference_n must be positive", 0);
  if (threads < 1) throw ConfigError("threads must be at least 1", 0);
}

ExperimentConfig parse_config(std::string_view text) {
  toml::table root;
  try {
    root = toml::parse(text);
  } catch (const toml::parse_error& e) {
    throw ConfigError(std::string(e.description()), static_cast<int>(e.source().begin.line));
  }
  ExperimentConfig cfg;
  for (auto&& [key, node] : root) {
    const std::string k(key.str());
    const auto* section = node.as_table();
    if (!section) throw ConfigError("top-level key " + k + " must be a section", line_of(node));
    if (k == "problem") {
      parse_problem(*section, cfg);
    } else if (k == "sweep") {
      parse_sweep(*section, cfg);
    } else if (k == "adversary") {
      parse_adversary_section(*section, cfg);
    } else if (k == "constants") {
      parse_constants(*section, cfg);
    } else if (k == "tolerances") {
      parse_tolerances(*section, cfg);
    } else if (k == "output") {
      parse_output(*section, cfg);
    } else {
      throw ConfigError("unknown section [" + k + "]", line_of(node));
    }
  }
  // Missing sweep lists are reported against the sweep header when present.
  const int sweep_line = root.contains("sweep") ? line_of(*root.get("sweep")) : 0;
  if (cfg.epsilons.empty()) throw ConfigError("sweep.epsilon is required", sweep_line);
  if (cfg.kappas.empty()) throw ConfigError("sweep.kappa is required", sweep_line);
  if (cfg.adversaries.empty()) throw ConfigError("sweep.adversary is required", sweep_line);
  if (cfg.algorithms.empty()) throw ConfigError("sweep.algorithm is required", sweep_line);
  cfg.validate();
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_config(buffer.str());
}

}  // namespace robreg
