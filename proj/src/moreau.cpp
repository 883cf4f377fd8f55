#include "robreg/moreau.hpp"

#include "robreg/accel.hpp"
#include "robreg/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace robreg {

double EnvelopeSpec::kappa() const {
  if (!(mu > 0.0)) return std::numeric_limits<double>::infinity();
  return std::max(1.0, 1.0 / (lambda * mu));
}

void EnvelopeSpec::validate() const {
  if (!(lambda > 0.0) || !std::isfinite(lambda)) throw InvalidArgument("envelope lambda must be positive and finite");
  if (!(mu >= 0.0) || !std::isfinite(mu)) throw InvalidArgument("envelope ridge must be nonnegative and finite");
  if (!inner.query) throw InvalidArgument("envelope needs an inner oracle");
}

int moreau_step_count(const ProblemSpec& spec) {
  const double eps = std::clamp(spec.epsilon, 1e-3, std::exp(-1.0));
  return static_cast<int>(std::ceil(spec.constants.moreau_steps * std::log(1.0 / eps) / eps));
}

Vec approx_moreau_minimizer(const Vec& anchor, const EnvelopeSpec& env, const ProblemSpec& spec, double delta,
                            MoreauStats* stats) {
  env.validate();
  if (!(delta > 0.0 && delta < 1.0)) throw InvalidArgument("delta must lie in (0, 1)");
  const int T = moreau_step_count(spec);
  const double eps = std::clamp(spec.epsilon, 1e-3, std::exp(-1.0));
  const double ng = spec.constants.ng;
  const double eta = 4.0 * ng * ng * eps * env.lambda / 5.0;
  const double radius = 2.0 * std::sqrt(spec.L) * env.lambda;

  Vec theta = anchor;
  for (int t = 0; t < T; ++t) {
    const GradientEstimate est = env.inner.query(theta, std::nullopt);
    if (stats) ++stats->inner_calls;
    const Vec g = est.g + (theta - anchor) / env.lambda;
    Vec next = theta - eta * g;
    if (!next.allFinite()) throw InvalidArgument("prox iteration produced a non-finite step");
    theta = project_ball(next, anchor, radius);
    if (stats) stats->max_ball_excess = std::max(stats->max_ball_excess, (theta - anchor).norm() - radius);
  }
  if (stats) stats->steps += T;
  return theta;
}

GradientEstimate moreau_ng_query(const Vec& theta, const EnvelopeSpec& env, const ProblemSpec& spec, double delta,
                                 MoreauStats* stats) {
  const Vec prox = approx_moreau_minimizer(theta, env, spec, delta, stats);
  return {(theta - prox) / env.lambda + env.mu * theta, theta, std::nullopt};
}

NgOracle make_moreau_oracle(const EnvelopeSpec& env, const ProblemSpec& spec, double delta) {
  env.validate();
  const ProblemSpec outer = envelope_problem(spec, env.lambda);
  NgOracle o{outer.L, outer.sigma, delta, true, {}};
  o.query = [env, spec, delta](const Vec& theta, std::optional<double>) {
    return moreau_ng_query(theta, env, spec, delta);
  };
  return o;
}

ProblemSpec envelope_problem(const ProblemSpec& spec, double lambda) {
  if (!(lambda > 0.0) || !std::isfinite(lambda)) throw InvalidArgument("envelope lambda must be positive and finite");
  ProblemSpec out = spec;
  out.L = 1.0 / lambda + spec.mu;
  out.sigma = std::sqrt(spec.L * lambda);
  out.lambda_env = lambda;
  out.validate();
  return out;
}

void PiecewiseLinear1d::validate() const {
  if (slopes.size() != breakpoints.size() + 1) throw InvalidArgument("need one more slope than breakpoints");
  if (breakpoints.size() > 1000) throw InvalidArgument("at most 1000 breakpoints are supported");
  for (double s : slopes)
    if (!std::isfinite(s)) throw InvalidArgument("slopes must be finite");
  for (std::size_t k = 0; k < breakpoints.size(); ++k) {
    if (!std::isfinite(breakpoints[k])) throw InvalidArgument("breakpoints must be finite");
    if (k > 0 && !(breakpoints[k] > breakpoints[k - 1])) throw InvalidArgument("breakpoints must increase");
  }
  for (std::size_t k = 1; k < slopes.size(); ++k)
    if (slopes[k] < slopes[k - 1]) throw InvalidArgument("slopes must be nondecreasing for convexity");
  if (!std::isfinite(anchor_value)) throw InvalidArgument("function value must be finite");
}

namespace {

// Index of the piece containing x: piece k spans [b_{k-1}, b_k].
std::size_t piece_of(const std::vector<double>& b, double x) {
  return static_cast<std::size_t>(std::upper_bound(b.begin(), b.end(), x) - b.begin());
}

}  // namespace

double PiecewiseLinear1d::operator()(double x) const {
  if (breakpoints.empty()) return anchor_value + slopes[0] * x;
  const std::size_t k = piece_of(breakpoints, x);
  if (k == 0) return anchor_value + slopes[0] * (x - breakpoints[0]);
  double value = anchor_value;
  for (std::size_t j = 1; j < k; ++j) value += slopes[j] * (breakpoints[j] - breakpoints[j - 1]);
  return value + slopes[k] * (x - breakpoints[k - 1]);
}

double PiecewiseLinear1d::subgradient_low(double x) const {
  const auto it = std::lower_bound(breakpoints.begin(), breakpoints.end(), x);
  const auto k = static_cast<std::size_t>(it - breakpoints.begin());
  return slopes[k];
}

double PiecewiseLinear1d::subgradient_high(double x) const { return slopes[piece_of(breakpoints, x)]; }

double PiecewiseLinear1d::lipschitz() const { return std::max(std::abs(slopes.front()), std::abs(slopes.back())); }

PiecewiseLinear1d PiecewiseLinear1d::absolute_value() { return {{0.0}, {-1.0, 1.0}, 0.0}; }

PiecewiseLinear1d PiecewiseLinear1d::hinge(double margin) { return {{margin}, {-1.0, 0.0}, 0.0}; }

PiecewiseLinear1d PiecewiseLinear1d::constant(double value) { return {{}, {0.0}, value}; }

EnvelopeReference envelope_reference_1d(const PiecewiseLinear1d& f, double lambda, double point) {
  f.validate();
  if (!(lambda > 0.0) || !std::isfinite(lambda)) throw InvalidArgument("lambda must be positive and finite");
  if (!std::isfinite(point)) throw InvalidArgument("point must be finite");

  // h(p) = p + lambda * subgradient(p) is strictly increasing; find p with point in h(p).
  const double reach = lambda * f.lipschitz() + 1.0;
  double lo = point - reach;
  double hi = point + reach;
  double p = point;
  for (int it = 0; it < 200; ++it) {
    p = 0.5 * (lo + hi);
    if (p + lambda * f.subgradient_low(p) > point) {
      hi = p;
    } else if (p + lambda * f.subgradient_high(p) < point) {
      lo = p;
    } else {
      break;
    }
    if (hi - lo <= 0.0) break;
  }
  // Snap to the exact solution on the bracketing piece or breakpoint.
  const auto& b = f.breakpoints;
  const std::size_t k = piece_of(b, p);
  const double candidates[] = {k > 0 ? b[k - 1] : p, k < b.size() ? b[k] : p};
  bool snapped = false;
  for (double c : candidates) {
    if (std::abs(c - p) <= 1e-9 * (1.0 + std::abs(c)) && c + lambda * f.subgradient_low(c) <= point &&
        c + lambda * f.subgradient_high(c) >= point) {
      p = c;
      snapped = true;
      break;
    }
  }
  if (!snapped) {
    const double interior = point - lambda * f.slopes[k];
    const double left = k > 0 ? b[k - 1] : -std::numeric_limits<double>::infinity();
    const double right = k < b.size() ? b[k] : std::numeric_limits<double>::infinity();
    if (interior >= left && interior <= right) p = interior;
  }

  EnvelopeReference out;
  out.prox = p;
  out.envelope_value = f(p) + (point - p) * (point - p) / (2.0 * lambda);
  out.envelope_grad = (point - p) / lambda;
  return out;
}

}  // namespace robreg
