#pragma once

#include "robreg/types.hpp"

namespace robreg {

// Value (order 0), derivative in v (order 1) or second derivative (order 2) of the
// per-sample loss gamma(v, y). Squared: (v - y)^2 / 2. Logistic: log(1 + exp(-v y)).
// Hinge: max(0, 1 - v y) with derivative 0 at the kink; order 2 is rejected for hinge.
double link_eval(LinkKind link, double v, double y, int order);

// f_i(theta) for every sample.
Vec sample_losses(const Dataset& data, const Vec& theta, LinkKind link);

// Row i holds g_i(theta) = gamma'(<X_i, theta>, y_i) X_i.
Mat sample_gradients(const Dataset& data, const Vec& theta, LinkKind link);

// F_w(theta) = sum_i w_i f_i(theta), unnormalized.
double weighted_loss(const Dataset& data, const Vec& w, const Vec& theta, LinkKind link);

// grad F_w(theta) = sum_i w_i g_i(theta), unnormalized.
Vec weighted_gradient(const Dataset& data, const Vec& w, const Vec& theta, LinkKind link);

}  // namespace robreg
