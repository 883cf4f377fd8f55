#include "robreg/bench.hpp"
#include "robreg/errors.hpp"
#include "robreg/generate.hpp"
#include "robreg/io.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitCellFailed = 3;

struct RunArgs {
  std::string config;
  std::string out;
  int threads = 0;
  bool trace = false;
};

struct GenArgs {
  std::string model = "linreg";
  int d = 10;
  int n = 2000;
  double eps = 0.05;
  double kappa = 4.0;
  double L = 1.0;
  double sigma = 1.0;
  std::string adversary = "leverage";
  std::uint64_t seed = 0;
  std::string out;
  std::string truth_out;
};

struct SolveArgs {
  std::string algo;
  std::string data;
  std::string truth;
  double L = 1.0;
  double mu = 0.25;
  double sigma = 1.0;
  double eps = 0.05;
  double delta = 0.1;
  double lambda = 0.5;
  std::uint64_t seed = 0;
  std::vector<std::string> constants;
};

int do_run(const RunArgs& args) {
  robreg::ExperimentConfig cfg;
  try {
    cfg = robreg::load_config(args.config);
  } catch (const robreg::ConfigError& e) {
    std::cerr << args.config << ": " << e.what() << '\n';
    return kExitConfig;
  } catch (const robreg::IoError& e) {
    std::cerr << e.what() << '\n';
    return kExitConfig;
  }
  if (!args.out.empty()) cfg.output_path = args.out;
  if (args.threads > 0) cfg.threads = args.threads;
  if (args.trace) cfg.settings.trace = true;

  const robreg::ExperimentReport report = robreg::run_experiment(cfg);
  robreg::emit_report(report, cfg.format, cfg.output_path);
  if (cfg.settings.trace) {
    const std::string trace_path = cfg.output_path.string() + ".trace.csv";
    std::ofstream trace(trace_path, std::ios::binary);
    if (!trace) throw robreg::IoError("cannot write " + trace_path);
    for (const auto& line : report.trace) trace << line << '\n';
  }
  int failed = 0;
  for (const auto& row : report.rows)
    if (row.status != "ok") ++failed;
  std::cerr << report.rows.size() << " rows written to " << cfg.output_path.string();
  if (failed > 0) std::cerr << ", " << failed << " failed";
  std::cerr << '\n';
  return failed > 0 ? kExitCellFailed : kExitOk;
}

int do_gen(const GenArgs& args) {
  robreg::ProblemSpec spec;
  spec.L = args.L;
  spec.mu = args.L / args.kappa;
  spec.sigma = args.sigma;
  spec.epsilon = args.eps;
  const robreg::Model model = robreg::parse_model(args.model);
  spec.link = robreg::link_for(model);
  spec.validate();
  robreg::GeneratorOptions options;
  options.d = args.d;
  const robreg::AdversarySpec adversary = robreg::default_adversary(robreg::parse_adversary(args.adversary));
  const robreg::Dataset data = robreg::generate_instance(spec, model, args.n, adversary, args.seed, options);
  robreg::save_dataset(data, args.out);
  const std::string truth_path = args.truth_out.empty() ? args.out + ".truth.json" : args.truth_out;
  std::ofstream truth(truth_path, std::ios::binary);
  if (!truth) throw robreg::IoError("cannot write " + truth_path);
  robreg::write_truth_json(*data.truth, spec, truth);
  return kExitOk;
}

int do_solve(const SolveArgs& args) {
  robreg::Dataset data = robreg::load_dataset(args.data);
  robreg::ProblemSpec spec;
  spec.L = args.L;
  spec.mu = args.mu;
  spec.sigma = args.sigma;
  spec.epsilon = args.eps;
  for (const auto& assignment : args.constants) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos) throw robreg::InvalidArgument("expected NAME=VALUE, got " + assignment);
    if (!spec.constants.set(assignment.substr(0, eq), std::stod(assignment.substr(eq + 1)))) {
      throw robreg::InvalidArgument("unknown constant " + assignment.substr(0, eq));
    }
  }
  std::optional<robreg::Model> model;
  if (!args.truth.empty()) {
    std::ifstream in(args.truth);
    if (!in) throw robreg::IoError("cannot read " + args.truth);
    data.truth = robreg::read_truth_json(in, data.n(), &spec);
  }
  const robreg::Algorithm algorithm = robreg::parse_algorithm(args.algo);
  robreg::RunSettings settings;
  settings.delta = args.delta;
  settings.lambda_env = args.lambda;
  if (algorithm == robreg::Algorithm::naive_erm) {
    settings.naive_model = spec.link == robreg::LinkKind::logistic ? robreg::Model::glm_smooth
                           : spec.link == robreg::LinkKind::hinge  ? robreg::Model::glm_lipschitz
                                                                   : robreg::Model::linreg;
  }
  model = robreg::model_for(algorithm, settings);
  spec.link = robreg::link_for(*model);

  const robreg::AlgorithmOutcome outcome = robreg::run_algorithm(algorithm, data, spec, settings, args.seed);
  std::cout << "status," << robreg::to_string(outcome.status) << '\n';
  std::cout << "theta";
  for (robreg::Index j = 0; j < outcome.theta.size(); ++j) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", outcome.theta(j));
    std::cout << ',' << buf;
  }
  std::cout << '\n';
  std::cout << "oracle_calls," << outcome.oracle_calls << "\nerm_calls," << outcome.erm_calls << '\n';
  if (data.truth) {
    const auto err = robreg::measure_error(outcome.theta, *data.truth, *model, spec, settings, args.seed);
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", err.value);
    std::cout << err.metric << ',' << buf << '\n';
  }
  for (const auto& w : outcome.warnings) std::cerr << "warning: " << w << '\n';
  if (!outcome.message.empty()) std::cerr << outcome.message << '\n';
  return outcome.status == robreg::RunStatus::ok ? kExitOk : kExitCellFailed;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Robust regression under strong contamination: experiments, generation and single solves"};
  app.require_subcommand(1);

  RunArgs run_args;
  auto* run = app.add_subcommand("run", "Run a sweep described by a config file");
  run->add_option("--config", run_args.config, "TOML config path")->required();
  run->add_option("--out", run_args.out, "Report path, overriding the config");
  run->add_option("--threads", run_args.threads, "Worker threads, overriding the config")->check(CLI::Range(1, 1024));
  run->add_flag("--trace", run_args.trace, "Write a per-iteration trace next to the report");

  GenArgs gen_args;
  auto* gen = app.add_subcommand("gen", "Generate one corrupted instance as CSV plus a truth sidecar");
  gen->add_option("--model", gen_args.model, "linreg, linreg-weak, glm-smooth or glm-lipschitz");
  gen->add_option("--d", gen_args.d)->check(CLI::PositiveNumber);
  gen->add_option("--n", gen_args.n)->check(CLI::PositiveNumber);
  gen->add_option("--eps", gen_args.eps);
  gen->add_option("--kappa", gen_args.kappa);
  gen->add_option("--L", gen_args.L);
  gen->add_option("--sigma", gen_args.sigma);
  gen->add_option("--adversary", gen_args.adversary, "none, leverage, gradient-alignment or label-flip");
  gen->add_option("--seed", gen_args.seed);
  gen->add_option("--out", gen_args.out, "Dataset CSV path")->required();
  gen->add_option("--truth-out", gen_args.truth_out, "Truth JSON path (default <out>.truth.json)");

  SolveArgs solve_args;
  auto* solve = app.add_subcommand("solve", "Run one algorithm on a dataset CSV");
  solve->add_option("--algo", solve_args.algo, "Algorithm name")->required();
  solve->add_option("--data", solve_args.data, "Dataset CSV path")->required();
  solve->add_option("--truth", solve_args.truth, "Truth JSON; supplies problem parameters and enables error output");
  solve->add_option("--L", solve_args.L);
  solve->add_option("--mu", solve_args.mu);
  solve->add_option("--sigma", solve_args.sigma);
  solve->add_option("--eps", solve_args.eps);
  solve->add_option("--delta", solve_args.delta);
  solve->add_option("--lambda", solve_args.lambda);
  solve->add_option("--seed", solve_args.seed);
  solve->add_option("--set", solve_args.constants, "Override a constant, NAME=VALUE; repeatable");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }
  try {
    if (run->parsed()) return do_run(run_args);
    if (gen->parsed()) return do_gen(gen_args);
    return do_solve(solve_args);
  } catch (const robreg::InvalidArgument& e) {
    std::cerr << "invalid argument: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
