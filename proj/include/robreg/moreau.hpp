#pragma once

#include "robreg/noisy_gradient.hpp"
#include "robreg/types.hpp"

#include <vector>

namespace robreg {

struct EnvelopeSpec {
  double lambda = 1.0;  // envelope parameter
  double mu = 0.0;      // outer ridge added by the envelope oracle
  NgOracle inner;       // radiusless oracle for the unsmoothed objective

  // max(1, 1 / (lambda mu)); infinite when mu is zero.
  double kappa() const;
  void validate() const;
};

struct MoreauStats {
  long long inner_calls = 0;
  int steps = 0;
  double max_ball_excess = 0.0;  // largest |theta_t - anchor| - radius seen after projection
};

// Step count ceil(c (1/eps) ln(1/eps)); eps is clamped to [1e-3, 1/e] first.
int moreau_step_count(const ProblemSpec& spec);

// Projected noisy gradient descent on F(theta) + |theta - anchor|^2 / (2 lambda) inside the ball
// of radius 2 sqrt(L) lambda around the anchor. spec.L is the squared Lipschitz bound of F.
Vec approx_moreau_minimizer(const Vec& anchor, const EnvelopeSpec& env, const ProblemSpec& spec, double delta,
                            MoreauStats* stats = nullptr);

// (theta - approx_moreau_minimizer(theta)) / lambda + mu theta.
GradientEstimate moreau_ng_query(const Vec& theta, const EnvelopeSpec& env, const ProblemSpec& spec, double delta,
                                 MoreauStats* stats = nullptr);

NgOracle make_moreau_oracle(const EnvelopeSpec& env, const ProblemSpec& spec, double delta);

// Problem parameters of the regularized envelope objective seen by the accelerated driver:
// smoothness 1/lambda + mu, ridge mu, noise scale sqrt(L lambda).
ProblemSpec envelope_problem(const ProblemSpec& spec, double lambda);

// Convex piecewise-linear function of one variable.
struct PiecewiseLinear1d {
  std::vector<double> breakpoints;  // strictly increasing, may be empty
  std::vector<double> slopes;       // breakpoints.size() + 1 entries, nondecreasing
  double anchor_value = 0.0;        // f(breakpoints[0]), or f(0) when there are no breakpoints

  // Throws InvalidArgument when the pieces do not form a convex function.
  void validate() const;
  double operator()(double x) const;
  // Smallest and largest element of the subdifferential at x.
  double subgradient_low(double x) const;
  double subgradient_high(double x) const;
  double lipschitz() const;

  static PiecewiseLinear1d absolute_value();
  static PiecewiseLinear1d hinge(double margin = 1.0);  // max(0, margin - x)
  static PiecewiseLinear1d constant(double value);
};

struct EnvelopeReference {
  double prox = 0.0;
  double envelope_value = 0.0;
  double envelope_grad = 0.0;
};

// Exact prox of f at `point` by bisection on 0 in subgradient(p) + (p - point) / lambda.
EnvelopeReference envelope_reference_1d(const PiecewiseLinear1d& f, double lambda, double point);

}  // namespace robreg
