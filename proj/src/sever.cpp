#include "robreg/sever.hpp"

#include "robreg/errors.hpp"
#include "robreg/links.hpp"
#include "robreg/metrics.hpp"

#include <cmath>
#include <limits>

namespace robreg {

ErmOracle default_erm() { return [](const Dataset& d, const ErmRequest& r) { return erm_solve(d, r); }; }

double identifiability_bound(const Dataset& data, const Vec& w, const Vec& theta, const ProblemSpec& spec,
                             const Mat& sigma_star, Rng& rng) {
  if (sigma_star.rows() != data.d() || sigma_star.cols() != data.d()) {
    throw InvalidArgument("covariance has the wrong shape");
  }
  Eigen::LLT<Mat> chol(sigma_star);
  if (chol.info() != Eigen::Success) throw InvalidArgument("covariance is singular");
  const double mass = w.sum();
  if (!(mass > 0.0)) throw InvalidArgument("weights carry no mass");

  const Mat G = sample_gradients(data, theta, LinkKind::squared);
  const Vec normalized = w / mass;
  const double cov_norm = power_method(second_moment_operator(G, normalized), 1e-3, rng);
  const Vec grad = G.transpose() * w;
  const double grad_norm = std::sqrt(std::max(0.0, grad.dot(chol.solve(grad))));
  const double eps_term =
      std::sqrt(spec.epsilon) * (spec.sigma * std::sqrt(spec.kappa()) + std::sqrt(cov_norm / spec.mu));
  return spec.constants.id * (eps_term + grad_norm);
}

namespace {

FilterOptions run_filter_options(const ProblemSpec& spec, const SeverRun& run) {
  FilterOptions o = filter_options_from(spec.constants);
  o.observer = run.observer;
  return o;
}

void notify(const SeverRun& run, std::string_view stage, const Vec& w) {
  if (run.observer) run.observer(stage, w);
}

double objective_floor(const Dataset& data, const Vec& w, const Vec& theta) {
  return 1e-13 * (1.0 + weighted_loss(data, w, theta, LinkKind::squared));
}

ErmResult solve(const Dataset& data, const Vec& w, const Vec& warm, double gamma, const ProblemSpec& spec,
                const ErmOracle& erm, SeverRun& run) {
  ErmRequest req;
  req.w = w;
  req.link = LinkKind::squared;
  req.gamma = gamma;
  req.warm_start = warm;
  req.curvature_lower_bound = 0.25 * spec.mu * w.sum();
  ++run.stats.erm_calls;
  return erm(data, req);
}

struct LoopShape {
  double radius = 0.0;      // radius handed to the function filter
  double cov_threshold = 0.0;
  double stop_below = 0.0;  // loop ends once Delta_t is at most this
  double gamma = 0.0;
  double filter_delta = 0.0;
  int cap = 0;
  const char* name = "";
};

PhaseState run_loop(const Dataset& data, const PhaseState& state, const ErmOracle& erm,
                    const ProblemSpec& spec, const LoopShape& shape, SeverRun& run) {
  if (state.w.size() != data.n() || state.theta.size() != data.d()) {
    throw InvalidArgument("phase state does not match the dataset");
  }
  PhaseRecord record;
  record.R = state.R;

  Vec w = function_filter(data, state.w, state.theta, shape.radius, state.D, spec);
  ++run.stats.filter_calls;
  notify(run, "function_filter", w);

  const double floor = objective_floor(data, w, state.theta);
  const double gamma = std::max(shape.gamma, floor);
  const double stop_below = std::max(shape.stop_below, 2.0 * gamma);

  Vec theta = solve(data, w, state.theta, gamma, spec, erm, run).theta;
  record.start_objective = weighted_loss(data, w, theta, LinkKind::squared);
  const FilterOptions options = run_filter_options(spec, run);

  for (int round = 1; round <= shape.cap; ++round) {
    const Mat G = sample_gradients(data, theta, LinkKind::squared);
    FilterStats fstats;
    Vec w_next = fast_cov_filter(G, w, shape.filter_delta, shape.cov_threshold, run.rng, options, &fstats);
    ++run.stats.filter_calls;
    const Vec theta_next = solve(data, w_next, theta, gamma, spec, erm, run).theta;
    const double decrease = weighted_loss(data, w_next, theta, LinkKind::squared) -
                            weighted_loss(data, w_next, theta_next, LinkKind::squared);
    record.decreases.push_back(decrease);
    if (run.trace) {
      SeverTraceRow row;
      row.phase = run.phase;
      row.round = round;
      row.decrease = decrease;
      row.power = fstats.final_power;
      row.mass = w_next.sum();
      if (run.truth) row.error = mahalanobis_error(theta, *run.truth);
      run.trace(row);
    }
    if (decrease <= stop_below) {
      record.rounds = round;
      record.final_objective = weighted_loss(data, w_next, theta_next, LinkKind::squared);
      run.stats.records.push_back(std::move(record));
      PhaseState out = state;
      out.w = std::move(w_next);
      out.theta = std::move(theta);
      out.rounds = round;
      return out;
    }
    w = std::move(w_next);
    theta = theta_next;
  }
  run.stats.records.push_back(std::move(record));
  throw PhaseFailure(std::string(shape.name) + " exceeded its loop cap of " + std::to_string(shape.cap),
                     run.phase);
}

}  // namespace

PhaseState half_radius_linreg(const Dataset& data, const PhaseState& state, const ErmOracle& erm,
                              const ProblemSpec& spec, double delta, SeverRun& run) {
  if (!(state.R > 0.0)) throw InvalidArgument("phase radius must be positive");
  const auto& c = spec.constants;
  const double kappa = spec.kappa();
  LoopShape shape;
  shape.name = "half_radius_linreg";
  shape.radius = state.R;
  shape.cov_threshold = 40.0 * c.est * c.ub * spec.L * state.R * state.R;
  shape.stop_below = state.R * state.R / (512.0 * kappa * c.id * c.id);
  shape.gamma = spec.sigma * spec.sigma / (10.0 * kappa);
  shape.cap = std::max(1, static_cast<int>(std::ceil(c.loop * kappa)));
  shape.filter_delta = delta / (shape.cap + 1.0);
  return run_loop(data, state, erm, spec, shape, run);
}

PhaseState last_phase(const Dataset& data, const PhaseState& state, const ErmOracle& erm,
                      const ProblemSpec& spec, double delta, SeverRun& run) {
  const auto& c = spec.constants;
  const double s2 = spec.sigma * spec.sigma;
  const double eps = std::max(spec.epsilon, 1.0 / static_cast<double>(data.n()));
  LoopShape shape;
  shape.name = "last_phase";
  shape.radius = c.lp * spec.sigma;
  shape.cov_threshold = 40.0 * c.est * c.ub * c.lp * c.lp * spec.L * s2;
  shape.stop_below = s2 * spec.epsilon;
  shape.gamma = s2 * spec.epsilon / 10.0;
  shape.cap = std::max(1, static_cast<int>(std::ceil(c.loop / eps)));
  shape.filter_delta = delta / (shape.cap + 1.0);
  return run_loop(data, state, erm, spec, shape, run);
}

int halving_phase_count(double start_radius, const ProblemSpec& spec) {
  const double floor = spec.constants.lp * spec.sigma;
  int phases = 0;
  for (double R = start_radius; R > floor; R /= 2.0) ++phases;
  return phases;
}

namespace {

void prune_scores(const Dataset& data, Vec& w, const Vec& theta, double D) {
  const Vec f = sample_losses(data, theta, LinkKind::squared);
  for (Index i = 0; i < data.n(); ++i)
    if (f(i) > D) w(i) = 0.0;
}

double score_bound(const ProblemSpec& spec, Index n, double R) {
  const double nn = static_cast<double>(n);
  return 2.0 * nn * spec.constants.ub * spec.sigma * spec.sigma + 2.0 * spec.kappa() * nn * R * R;
}

}  // namespace

RegressionResult fast_regression(const Dataset& data, const std::optional<Vec>& theta0,
                                 std::optional<double> R0, const ErmOracle& erm, const ProblemSpec& spec,
                                 double delta, SeverRun& run) {
  spec.validate();
  if (!(spec.sigma > 0.0)) throw InvalidArgument("fast_regression needs a positive noise scale");
  if (!(delta > 0.0 && delta < 1.0)) throw InvalidArgument("delta must lie in (0, 1)");
  const Index n = data.n();
  const double kappa = spec.kappa();
  const auto& c = spec.constants;
  if (spec.epsilon * kappa > c.eps_kappa_warn) {
    run.stats.warnings.push_back("eps * kappa exceeds the smallness threshold; guarantees may not hold");
  }

  Vec w = uniform_weights(n);
  const double max_norm = std::sqrt(2.0 * static_cast<double>(n) * spec.L);
  for (Index i = 0; i < n; ++i)
    if (data.X.row(i).norm() > max_norm) w(i) = 0.0;
  notify(run, "prune", w);
  w = fast_cov_filter(data.X, w, delta / 3.0, 1.5 * spec.L, run.rng, run_filter_options(spec, run));
  ++run.stats.filter_calls;

  Vec theta;
  if (theta0) {
    if (theta0->size() != data.d()) throw InvalidArgument("theta0 has the wrong dimension");
    theta = *theta0;
  } else {
    const Vec uniform = uniform_weights(n);
    theta = solve(data, uniform, Vec::Zero(data.d()), spec.sigma * spec.sigma / (10.0 * kappa), spec, erm, run).theta;
  }
  double radius = 0.0;
  if (R0) {
    if (!(*R0 >= 0.0)) throw InvalidArgument("R0 must be nonnegative");
    radius = *R0;
  } else {
    const Mat plug_in = data.X.transpose() * (w / w.sum()).asDiagonal() * data.X;
    radius = std::max(identifiability_bound(data, uniform_weights(n), theta, spec, plug_in, run.rng),
                      c.lp * spec.sigma);
  }

  RegressionResult result;
  result.R0 = radius;
  double R = radius + 4.0 * c.est * spec.sigma * std::sqrt(kappa * spec.epsilon);
  result.start_radius = R;

  const int planned = halving_phase_count(R, spec);
  if (spec.epsilon > 0.0) {
    const double alpha = c.alpha * std::max(1.0, spec.epsilon * kappa * std::log(std::max(radius, spec.sigma) / spec.sigma));
    run.stats.distinct_budget = alpha / (2.0 * spec.epsilon);
  } else {
    run.stats.distinct_budget = std::numeric_limits<double>::infinity();
  }
  const double phase_delta = 2.0 * delta / (3.0 * (planned + 1.0));

  PhaseState state;
  state.w = w;
  state.theta = theta;
  const double floor = c.lp * spec.sigma;
  while (R > floor) {
    run.phase = run.stats.phases + 1;
    state.R = R;
    state.D = score_bound(spec, n, R);
    prune_scores(data, state.w, state.theta, state.D);
    notify(run, "prune", state.w);
    try {
      state = half_radius_linreg(data, state, erm, spec, phase_delta, run);
    } catch (const PhaseFailure&) {
      throw;
    } catch (const std::runtime_error& e) {
      throw PhaseFailure(e.what(), run.phase);
    }
    ++run.stats.phases;
    R /= 2.0;
  }
  run.phase = run.stats.phases + 1;
  state.R = R;
  state.D = score_bound(spec, n, floor);
  prune_scores(data, state.w, state.theta, state.D);
  notify(run, "prune", state.w);
  try {
    state = last_phase(data, state, erm, spec, phase_delta, run);
  } catch (const PhaseFailure&) {
    throw;
  } catch (const std::runtime_error& e) {
    throw PhaseFailure(e.what(), run.phase);
  }

  if (run.stats.filter_calls > run.stats.distinct_budget) {
    run.stats.budget_exceeded = true;
    run.stats.warnings.push_back("distinct filter-set count exceeded its budget");
  }
  result.theta = state.theta;
  result.w = state.w;
  return result;
}

}  // namespace robreg
