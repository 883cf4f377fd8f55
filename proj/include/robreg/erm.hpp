#pragma once

#include "robreg/types.hpp"

#include <functional>
#include <optional>

namespace robreg {

struct ErmRequest {
  Vec w;
  LinkKind link = LinkKind::squared;
  double ridge = 0.0;  // adds (ridge / 2) |theta|^2
  double gamma = 1e-8; // suboptimality target
  std::optional<Vec> warm_start;
  // Lower bound on the curvature of F_w; computed densely when absent and ridge is zero.
  std::optional<double> curvature_lower_bound;
};

struct ErmResult {
  Vec theta;
  double gradient_norm = 0.0;
  int iterations = 0;
  bool certified = false;  // false only for the hinge link, which has no gradient certificate
};

// gamma-approximate minimizer of F_w + (ridge/2)|theta|^2. Squared link: conjugate gradient
// on the normal equations, certified by |grad|^2 <= 2 * curvature * gamma. Logistic: Nesterov
// acceleration with the same certificate when ridge > 0. Hinge: averaged subgradient steps,
// which need ridge > 0 and return uncertified.
// Throws SolverFailure when the iteration cap is hit before the certificate and
// InvalidArgument when all weight is zero or the squared system is singular.
ErmResult erm_solve(const Dataset& data, const ErmRequest& request);

using ErmOracle = std::function<ErmResult(const Dataset&, const ErmRequest&)>;

}  // namespace robreg
