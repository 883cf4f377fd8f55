#include "robreg/metrics.hpp"

#include "robreg/errors.hpp"

#include <cmath>

namespace robreg {

double mahalanobis_error(const Vec& theta, const GroundTruth& truth) {
  if (theta.size() != truth.theta_star.size() || truth.sigma_star.rows() != theta.size()) {
    throw InvalidArgument("dimension mismatch in mahalanobis_error");
  }
  const Vec diff = theta - truth.theta_star;
  return std::sqrt(std::max(0.0, diff.dot(truth.sigma_star * diff)));
}

SaturationReport saturation_report(const Vec& w, const GroundTruth& truth, double c) {
  if (truth.good.empty()) throw InvalidArgument("saturation needs a nonempty good set");
  const Index n = w.size();
  const double cap = 1.0 / static_cast<double>(n);
  SaturationReport r;
  for (Index i : truth.good) r.removed_good += std::abs(cap - w(i));
  for (Index i : truth.bad) r.removed_bad += std::abs(cap - w(i));
  r.is_c_saturated = r.removed_good <= r.removed_bad + c;

  const double mass = w.sum();
  const double good_share = 1.0 / static_cast<double>(truth.good.size());
  std::vector<bool> is_good(static_cast<std::size_t>(n), false);
  for (Index i : truth.good) is_good[static_cast<std::size_t>(i)] = true;
  double tv = 0.0;
  for (Index i = 0; i < n; ++i) {
    const double normalized = mass > 0.0 ? w(i) / mass : 0.0;
    tv += std::abs(normalized - (is_good[static_cast<std::size_t>(i)] ? good_share : 0.0));
  }
  r.tv_to_uniform_G = tv;
  return r;
}

}  // namespace robreg
