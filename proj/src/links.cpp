#include "robreg/links.hpp"

#include "robreg/errors.hpp"

#include <cmath>

namespace robreg {

namespace {

// log(1 + exp(t)) without overflow.
double softplus(double t) {
  return t > 0.0 ? t + std::log1p(std::exp(-t)) : std::log1p(std::exp(t));
}

double sigmoid(double t) {
  if (t >= 0.0) return 1.0 / (1.0 + std::exp(-t));
  const double e = std::exp(t);
  return e / (1.0 + e);
}

}  // namespace

double link_eval(LinkKind link, double v, double y, int order) {
  if (order < 0 || order > 2) throw InvalidArgument("link order must be 0, 1 or 2");
  switch (link) {
    case LinkKind::squared:
      if (order == 0) return 0.5 * (v - y) * (v - y);
      if (order == 1) return v - y;
      return 1.0;
    case LinkKind::logistic: {
      const double margin = v * y;
      if (order == 0) return softplus(-margin);
      const double s = sigmoid(-margin);
      if (order == 1) return -y * s;
      return y * y * s * (1.0 - s);
    }
    case LinkKind::hinge: {
      const double margin = v * y;
      if (order == 0) return std::max(0.0, 1.0 - margin);
      if (order == 1) return margin < 1.0 ? -y : 0.0;
      throw InvalidArgument("hinge link has no second derivative");
    }
  }
  throw InvalidArgument("unknown link");
}

Vec sample_losses(const Dataset& data, const Vec& theta, LinkKind link) {
  const Vec v = data.X * theta;
  Vec out(data.n());
  for (Index i = 0; i < data.n(); ++i) out(i) = link_eval(link, v(i), data.y(i), 0);
  return out;
}

Mat sample_gradients(const Dataset& data, const Vec& theta, LinkKind link) {
  const Vec v = data.X * theta;
  Vec scale(data.n());
  for (Index i = 0; i < data.n(); ++i) scale(i) = link_eval(link, v(i), data.y(i), 1);
  return scale.asDiagonal() * data.X;
}

double weighted_loss(const Dataset& data, const Vec& w, const Vec& theta, LinkKind link) {
  return w.dot(sample_losses(data, theta, link));
}

Vec weighted_gradient(const Dataset& data, const Vec& w, const Vec& theta, LinkKind link) {
  const Vec v = data.X * theta;
  Vec scale(data.n());
  for (Index i = 0; i < data.n(); ++i) scale(i) = w(i) * link_eval(link, v(i), data.y(i), 1);
  return data.X.transpose() * scale;
}

}  // namespace robreg
