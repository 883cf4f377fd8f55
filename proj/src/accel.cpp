#include "robreg/accel.hpp"

#include "robreg/errors.hpp"

#include <cmath>

namespace robreg {

AccelSchedule accel_schedule(int t_max) {
  if (t_max < 1) throw InvalidArgument("schedule length must be at least 1");
  AccelSchedule s;
  s.a.assign(static_cast<std::size_t>(t_max) + 1, 0.0);
  s.A.assign(static_cast<std::size_t>(t_max) + 1, 0.0);
  for (std::size_t t = 0; t < static_cast<std::size_t>(t_max); ++t) {
    // Positive root of 3 a^2 - a - A_t = 0.
    s.a[t + 1] = (1.0 + std::sqrt(1.0 + 12.0 * s.A[t])) / 6.0;
    s.A[t + 1] = s.A[t] + s.a[t + 1];
  }
  return s;
}

Vec project_ball(const Vec& z, const Vec& center, double R) {
  const Vec diff = z - center;
  const double dist = diff.norm();
  if (dist <= R) return z;
  return center + (R / dist) * diff;
}

int accel_iterations(const ProblemSpec& spec) {
  return std::max(1, static_cast<int>(std::ceil(spec.constants.accel_iters * std::sqrt(spec.kappa()))));
}

namespace {

double potential(const AccelDiagnostics& diag, double A, double L, const Vec& theta, const Vec& v) {
  return (A / L) * (diag.objective(theta) - diag.min_value) + 0.5 * (v - diag.minimizer).squaredNorm();
}

}  // namespace

Vec half_radius_accel(const Vec& anchor, double R, const NgOracle& oracle, const ProblemSpec& spec, double /*delta*/,
                      AccelStats* stats, const AccelOptions& options, int round) {
  if (!(R > 0.0) || !std::isfinite(R)) throw InvalidArgument("ball radius must be positive and finite");
  if (!oracle.query) throw InvalidArgument("oracle has no query function");
  const int T = accel_iterations(spec);
  const AccelSchedule sched = accel_schedule(T);
  const double L = spec.L;
  const AccelDiagnostics* diag = options.diagnostics;

  Vec theta = anchor;
  Vec v = anchor;
  std::vector<double> phi;
  if (diag) phi.push_back(potential(*diag, 0.0, L, theta, v));
  for (int t = 0; t < T; ++t) {
    const double A_t = sched.A[static_cast<std::size_t>(t)];
    const double a_next = sched.a[static_cast<std::size_t>(t) + 1];
    const double A_next = sched.A[static_cast<std::size_t>(t) + 1];
    const Vec y = (A_t / A_next) * theta + (a_next / A_next) * v;
    GradientEstimate est;
    try {
      est = oracle.query(y, 2.0 * R);
    } catch (const std::runtime_error& e) {
      throw PhaseFailure(std::string("oracle failed at iteration ") + std::to_string(t) + ": " + e.what(), round);
    }
    if (stats) ++stats->oracle_calls;
    const Vec& g = est.g;
    if (!g.allFinite()) throw PhaseFailure("oracle returned a non-finite gradient", round);
    theta = project_ball(y - g / (3.0 * L), anchor, R);
    v = project_ball(v - (a_next / L) * g, anchor, R);
    double phi_t = -1.0;
    if (diag) {
      phi_t = potential(*diag, A_next, L, theta, v);
      phi.push_back(phi_t);
    }
    if (options.trace) {
      AccelTraceRow row;
      row.round = round;
      row.t = t + 1;
      row.gradient_norm = g.norm();
      if (diag) row.error = (theta - diag->minimizer).norm();
      row.potential = phi_t;
      options.trace(row);
    }
  }
  if (stats) {
    stats->iterations_per_round = T;
    if (diag) stats->potential = std::move(phi);
  }
  return theta;
}

int robust_accel_rounds(double R0, const ProblemSpec& spec, const AccelOptions& options) {
  if (!(R0 >= 0.0)) throw InvalidArgument("R0 must be nonnegative");
  double floor = 0.0;
  if (options.target_radius) {
    floor = *options.target_radius;
  } else {
    floor = spec.constants.accel_floor * spec.sigma * std::sqrt(spec.kappa() * spec.epsilon / spec.mu);
  }
  if (!(floor > 0.0)) throw InvalidArgument("noise floor is zero; supply a target radius");
  if (R0 <= floor) return 0;
  return static_cast<int>(std::ceil(std::log2(R0 / floor)));
}

Vec robust_accel(const Vec& theta0, double R0, const NgOracle& oracle, const ProblemSpec& spec, double delta,
                 AccelStats* stats, const AccelOptions& options) {
  spec.validate();
  const double kappa = spec.kappa();
  AccelStats local;
  AccelStats& s = stats ? *stats : local;
  if (spec.epsilon * kappa * kappa > spec.constants.eps_kappa_warn) {
    s.warnings.push_back("eps * kappa^2 exceeds the smallness threshold; guarantees may not hold");
  }
  const int rounds = robust_accel_rounds(R0, spec, options);
  const double round_delta = rounds > 0 ? delta / rounds : delta;
  Vec theta = theta0;
  double R = R0;
  for (int k = 0; k < rounds; ++k) {
    theta = half_radius_accel(theta, R, oracle, spec, round_delta, &s, options, k + 1);
    ++s.rounds;
    R /= 2.0;
  }
  return theta;
}

}  // namespace robreg
