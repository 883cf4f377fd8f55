#include "robreg/bench.hpp"

#include "robreg/accel.hpp"
#include "robreg/erm.hpp"
#include "robreg/errors.hpp"
#include "robreg/metrics.hpp"
#include "robreg/moreau.hpp"
#include "robreg/noisy_gradient.hpp"
#include "robreg/sever.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <memory>
#include <thread>

namespace robreg {

std::string_view to_string(Algorithm algorithm) {
  switch (algorithm) {
    case Algorithm::fast_regression: return "fast-regression";
    case Algorithm::robust_accel_linreg: return "robust-accel-linreg";
    case Algorithm::robust_accel_glm: return "robust-accel-glm";
    case Algorithm::moreau_glm: return "moreau-glm";
    case Algorithm::naive_erm: return "naive-erm";
  }
  return "naive-erm";
}

Algorithm parse_algorithm(std::string_view name) {
  for (auto a : {Algorithm::fast_regression, Algorithm::robust_accel_linreg, Algorithm::robust_accel_glm,
                 Algorithm::moreau_glm, Algorithm::naive_erm})
    if (to_string(a) == name) return a;
  throw InvalidArgument("unknown algorithm: " + std::string(name));
}

Model model_for(Algorithm algorithm, const RunSettings& settings) {
  switch (algorithm) {
    case Algorithm::fast_regression:
    case Algorithm::robust_accel_linreg: return Model::linreg;
    case Algorithm::robust_accel_glm: return Model::glm_smooth;
    case Algorithm::moreau_glm: return Model::glm_lipschitz;
    case Algorithm::naive_erm: return settings.naive_model;
  }
  return Model::linreg;
}

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string trace_line(std::string_view stage, int phase, int step, double value, double error) {
  return std::string(stage) + ',' + std::to_string(phase) + ',' + std::to_string(step) + ',' + fmt(value) + ',' +
         fmt(error);
}

ErmResult solve_glm(const Dataset& data, LinkKind link, double ridge) {
  ErmRequest req;
  req.w = uniform_weights(data.n());
  req.link = link;
  req.ridge = ridge;
  req.gamma = 1e-10;
  return erm_solve(data, req);
}

Vec run_accel(const Vec& theta0, double R0, const NgOracle& oracle, const ProblemSpec& spec, double delta,
              const RunSettings& settings, AlgorithmOutcome& out) {
  AccelStats stats;
  AccelOptions options;
  if (settings.trace) {
    options.trace = [&out](const AccelTraceRow& row) {
      out.trace.push_back(trace_line("accel", row.round, row.t, row.gradient_norm, row.error));
    };
  }
  Vec theta = robust_accel(theta0, R0, oracle, spec, delta, &stats, options);
  out.oracle_calls = stats.oracle_calls;
  out.warnings = stats.warnings;
  return theta;
}

}  // namespace

AlgorithmOutcome run_algorithm(Algorithm algorithm, const Dataset& data, const ProblemSpec& spec,
                               const RunSettings& settings, std::uint64_t seed) {
  spec.validate();
  AlgorithmOutcome out;
  auto shared = std::make_shared<const Dataset>(data);
  const Vec zero = Vec::Zero(data.d());
  try {
    switch (algorithm) {
      case Algorithm::fast_regression: {
        SeverRun run(seed);
        if (settings.trace) {
          run.trace = [&out](const SeverTraceRow& row) {
            out.trace.push_back(trace_line("sever", row.phase, row.round, row.decrease, row.error));
          };
          if (data.truth) run.truth = &*data.truth;
        }
        ProblemSpec linear = spec;
        linear.link = LinkKind::squared;
        try {
          out.theta = fast_regression(data, std::nullopt, std::nullopt, default_erm(), linear, settings.delta, run).theta;
        } catch (...) {
          out.oracle_calls = run.stats.filter_calls;
          out.erm_calls = run.stats.erm_calls;
          throw;
        }
        out.oracle_calls = run.stats.filter_calls;
        out.erm_calls = run.stats.erm_calls;
        out.warnings = run.stats.warnings;
        break;
      }
      case Algorithm::robust_accel_linreg: {
        ProblemSpec linear = spec;
        linear.link = LinkKind::squared;
        const NgOracle oracle = make_linreg_oracle(shared, linear, settings.delta, seed);
        out.theta = run_accel(zero, settings.signal / std::sqrt(spec.mu), oracle, linear, settings.delta, settings, out);
        break;
      }
      case Algorithm::robust_accel_glm: {
        ProblemSpec glm = spec;
        glm.link = LinkKind::logistic;
        const NgOracle oracle = make_glm_oracle(shared, glm, settings.delta, seed);
        out.theta = run_accel(zero, std::sqrt(spec.L) / spec.mu, oracle, glm, settings.delta, settings, out);
        break;
      }
      case Algorithm::moreau_glm: {
        ProblemSpec inner_spec = spec;
        inner_spec.link = LinkKind::hinge;
        inner_spec.mu = 0.0;
        auto calls = std::make_shared<long long>(0);
        NgOracle counted = make_glm_oracle(shared, inner_spec, settings.delta, seed);
        counted.query = [base = counted.query, calls](const Vec& theta, std::optional<double> R) {
          ++*calls;
          return base(theta, R);
        };
        ProblemSpec hinge = spec;
        hinge.link = LinkKind::hinge;
        EnvelopeSpec env{settings.lambda_env, spec.mu, counted};
        const NgOracle oracle = make_moreau_oracle(env, hinge, settings.delta);
        const ProblemSpec outer = envelope_problem(hinge, settings.lambda_env);
        out.theta = run_accel(zero, std::sqrt(spec.L) / spec.mu, oracle, outer, settings.delta, settings, out);
        out.oracle_calls = *calls;
        break;
      }
      case Algorithm::naive_erm: {
        const LinkKind link = spec.link;
        const double ridge = link == LinkKind::squared ? 0.0 : spec.mu;
        out.theta = solve_glm(data, link, ridge).theta;
        out.erm_calls = 1;
        break;
      }
    }
    if (!out.theta.allFinite()) {
      out.status = RunStatus::diverged;
      out.message = "estimate is not finite";
    }
  } catch (const BoostFailure& e) {
    out.status = RunStatus::boost_failure;
    out.message = e.what();
  } catch (const PhaseFailure& e) {
    out.status = RunStatus::phase_failure;
    out.message = e.what();
  } catch (const FilterFailure& e) {
    out.status = RunStatus::phase_failure;
    out.message = e.what();
  } catch (const InvalidArgument&) {
    throw;
  } catch (const std::exception& e) {
    out.status = RunStatus::diverged;
    out.message = e.what();
  }
  if (out.status != RunStatus::ok) out.theta = Vec::Constant(data.d(), std::numeric_limits<double>::quiet_NaN());
  return out;
}

ErrorMeasure measure_error(const Vec& theta, const GroundTruth& truth, Model model, const ProblemSpec& spec,
                           const RunSettings& settings, std::uint64_t seed) {
  if (model == Model::linreg || model == Model::linreg_weak) return {"mahalanobis", mahalanobis_error(theta, truth)};
  if (!theta.allFinite()) return {"l2", std::numeric_limits<double>::quiet_NaN()};
  Rng rng(seed);
  const Dataset reference = sample_clean(truth, model, settings.reference_n, rng);
  Vec target;
  if (model == Model::glm_smooth) {
    target = solve_glm(reference, LinkKind::logistic, spec.mu).theta;
  } else {
    // The envelope objective plus ridge mu is minimized at p / (1 + lambda mu), where p minimizes
    // the hinge risk with ridge mu / (1 + lambda mu).
    const double shrink = 1.0 + settings.lambda_env * spec.mu;
    target = solve_glm(reference, LinkKind::hinge, spec.mu / shrink).theta / shrink;
  }
  return {"l2", (theta - target).norm()};
}

ExperimentReport run_experiment(const ExperimentConfig& config) {
  config.validate();
  struct Task {
    std::size_t alg, eps, kap, adv;
    int seed;
  };
  std::vector<Task> tasks;
  for (std::size_t a = 0; a < config.algorithms.size(); ++a)
    for (std::size_t e = 0; e < config.epsilons.size(); ++e)
      for (std::size_t k = 0; k < config.kappas.size(); ++k)
        for (std::size_t v = 0; v < config.adversaries.size(); ++v)
          for (int s = 0; s < config.seeds; ++s) tasks.push_back({a, e, k, v, s});

  std::vector<ReportRow> rows(tasks.size());
  std::vector<std::vector<std::string>> traces(tasks.size());

  auto run_task = [&](std::size_t t) {
    const Task& task = tasks[t];
    const Algorithm algorithm = config.algorithms[task.alg];
    const Model model = model_for(algorithm, config.settings);
    const std::uint64_t instance_cell =
        (task.eps * config.kappas.size() + task.kap) * config.adversaries.size() + task.adv;
    const std::uint64_t instance_seed = derive_seed(config.base_seed, instance_cell, static_cast<std::uint64_t>(task.seed));
    const std::uint64_t run_seed = derive_seed(instance_seed, task.alg + 1, 0);

    ProblemSpec spec;
    spec.L = config.L;
    spec.mu = config.L / config.kappas[task.kap];
    spec.sigma = config.sigma;
    spec.epsilon = config.epsilons[task.eps];
    spec.link = link_for(model);
    spec.constants = config.constants;
    spec.lambda_env = config.settings.lambda_env;

    AdversarySpec adversary = config.adversary_overrides;
    adversary.kind = config.adversaries[task.adv];
    GeneratorOptions gen;
    gen.d = config.d;
    gen.signal = config.settings.signal;

    ReportRow& row = rows[t];
    row.algorithm = std::string(to_string(algorithm));
    row.epsilon = spec.epsilon;
    row.kappa = config.kappas[task.kap];
    row.adversary = std::string(to_string(adversary.kind));
    row.seed = task.seed;
    row.metric = (model == Model::linreg || model == Model::linreg_weak) ? "mahalanobis" : "l2";

    const Dataset data = generate_instance(spec, model, config.n, adversary, instance_seed, gen);
    const auto start = std::chrono::steady_clock::now();
    const AlgorithmOutcome outcome = run_algorithm(algorithm, data, spec, config.settings, run_seed);
    const auto stop = std::chrono::steady_clock::now();
    if (config.settings.timing) row.wall_ms = std::chrono::duration<double, std::milli>(stop - start).count();
    row.oracle_calls = outcome.oracle_calls;
    row.erm_calls = outcome.erm_calls;
    row.status = std::string(to_string(outcome.status));
    row.error = measure_error(outcome.theta, *data.truth, model, spec, config.settings,
                              derive_seed(instance_seed, 0, 1))
                    .value;
    if (config.settings.trace) {
      const std::string prefix = row.algorithm + ',' + fmt(row.epsilon) + ',' + fmt(row.kappa) + ',' + row.adversary +
                                 ',' + std::to_string(row.seed) + ',';
      for (const auto& line : outcome.trace) traces[t].push_back(prefix + line);
    }
  };

  const int threads = std::max(1, std::min<int>(config.threads, static_cast<int>(tasks.size())));
  if (threads == 1) {
    for (std::size_t t = 0; t < tasks.size(); ++t) run_task(t);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(threads));
    std::vector<std::thread> pool;
    for (int w = 0; w < threads; ++w) {
      pool.emplace_back([&, w] {
        try {
          for (std::size_t t = next++; t < tasks.size(); t = next++) run_task(t);
        } catch (...) {
          errors[static_cast<std::size_t>(w)] = std::current_exception();
          next = tasks.size();
        }
      });
    }
    for (auto& th : pool) th.join();
    for (auto& e : errors)
      if (e) std::rethrow_exception(e);
  }

  ExperimentReport report;
  report.rows = std::move(rows);
  report.summary = summarize(report.rows);
  if (config.settings.trace) {
    report.trace.push_back("algorithm,epsilon,kappa,adversary,seed,stage,phase,step,value,error");
    for (auto& lines : traces)
      for (auto& line : lines) report.trace.push_back(std::move(line));
  }
  return report;
}

}  // namespace robreg
