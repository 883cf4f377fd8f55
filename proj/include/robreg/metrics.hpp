#pragma once

#include "robreg/types.hpp"

#include <functional>
#include <string_view>

namespace robreg {

// sqrt((theta - theta_star)^T Sigma_star (theta - theta_star)).
double mahalanobis_error(const Vec& theta, const GroundTruth& truth);

struct SaturationReport {
  bool is_c_saturated = false;
  double removed_good = 0.0;     // || [1/n - w]_G ||_1
  double removed_bad = 0.0;      // || [1/n - w]_B ||_1
  double tv_to_uniform_G = 0.0;  // || w / ||w||_1 - uniform on G ||_1
};

SaturationReport saturation_report(const Vec& w, const GroundTruth& truth, double c);

// Observer invoked with every weight vector a filter returns. The stage names the producer.
using WeightObserver = std::function<void(std::string_view stage, const Vec& w)>;

}  // namespace robreg
