#include "robreg/erm.hpp"

#include "robreg/errors.hpp"
#include "robreg/links.hpp"

#include <cmath>

namespace robreg {

namespace {

Mat weighted_gram(const Dataset& data, const Vec& w) {
  return data.X.transpose() * w.asDiagonal() * data.X;
}

Vec apply_normal(const Dataset& data, const Vec& w, double ridge, const Vec& v) {
  return data.X.transpose() * w.cwiseProduct(data.X * v) + ridge * v;
}

ErmResult solve_squared(const Dataset& data, const ErmRequest& req) {
  const Index d = data.d();
  const Vec b = data.X.transpose() * req.w.cwiseProduct(data.y);

  double lower = 0.0;
  if (req.curvature_lower_bound) {
    lower = *req.curvature_lower_bound + req.ridge;
  } else if (req.ridge > 0.0) {
    lower = req.ridge;
  } else {
    Eigen::SelfAdjointEigenSolver<Mat> eig(weighted_gram(data, req.w), Eigen::EigenvaluesOnly);
    const double top = eig.eigenvalues().maxCoeff();
    lower = eig.eigenvalues().minCoeff();
    if (!(lower > 1e-13 * top)) throw InvalidArgument("normal equations are singular");
  }
  if (!(lower > 0.0)) throw InvalidArgument("curvature lower bound must be positive");

  const double tol = std::sqrt(2.0 * lower * req.gamma);
  const double upper = req.ridge + req.w.dot(data.X.rowwise().squaredNorm());
  const double cond = std::max(1.0, upper / lower);
  const double digits = std::log(std::max(std::exp(1.0), (b.norm() + 1.0) / tol));
  const int cap = std::max<int>(2 * static_cast<int>(d) + 10,
                                static_cast<int>(std::ceil(20.0 * std::sqrt(cond) * digits)));

  Vec x = req.warm_start ? *req.warm_start : Vec::Zero(d);
  if (x.size() != d) throw InvalidArgument("warm start has the wrong dimension");
  Vec r = b - apply_normal(data, req.w, req.ridge, x);
  Vec p = r;
  double rr = r.squaredNorm();
  int it = 0;
  while (std::sqrt(rr) > tol) {
    if (it >= cap) throw SolverFailure("conjugate gradient hit its iteration cap", std::sqrt(rr));
    const Vec hp = apply_normal(data, req.w, req.ridge, p);
    const double curv = p.dot(hp);
    if (!(curv > 0.0)) throw InvalidArgument("normal equations are singular");
    const double alpha = rr / curv;
    x += alpha * p;
    ++it;
    if (it % 25 == 0) {
      r = b - apply_normal(data, req.w, req.ridge, x);
    } else {
      r -= alpha * hp;
    }
    const double next = r.squaredNorm();
    p = r + (next / rr) * p;
    rr = next;
    if (std::sqrt(rr) <= tol) {
      // Confirm against the true residual before accepting.
      r = b - apply_normal(data, req.w, req.ridge, x);
      rr = r.squaredNorm();
      p = r;
    }
  }
  return {x, std::sqrt(rr), it, true};
}

Vec logistic_gradient(const Dataset& data, const Vec& w, double ridge, const Vec& theta) {
  return weighted_gradient(data, w, theta, LinkKind::logistic) + ridge * theta;
}

ErmResult solve_logistic(const Dataset& data, const ErmRequest& req) {
  const Index d = data.d();
  Eigen::SelfAdjointEigenSolver<Mat> eig(weighted_gram(data, req.w), Eigen::EigenvaluesOnly);
  const double smooth = 0.25 * eig.eigenvalues().maxCoeff() + req.ridge;
  const double strong = req.ridge + req.curvature_lower_bound.value_or(0.0);
  Vec x = req.warm_start ? *req.warm_start : Vec::Zero(d);
  if (x.size() != d) throw InvalidArgument("warm start has the wrong dimension");
  if (!(smooth > 0.0)) return {x, 0.0, 0, true};

  const bool certifiable = strong > 0.0;
  Vec g = logistic_gradient(data, req.w, req.ridge, x);
  const double tol = certifiable ? std::sqrt(2.0 * strong * req.gamma) : 1e-9 * (1.0 + g.norm());
  const double q = certifiable ? smooth / strong : 1e6;
  const int cap = static_cast<int>(std::ceil(40.0 * std::sqrt(q) * std::log(std::max(std::exp(1.0), (g.norm() + 1.0) / tol)))) + 1000;
  const double step = 1.0 / smooth;

  Vec y = x;
  Vec x_prev = x;
  double t = 1.0;
  int it = 0;
  while (g.norm() > tol) {
    if (it >= cap) throw SolverFailure("accelerated gradient hit its iteration cap", g.norm());
    const Vec gy = logistic_gradient(data, req.w, req.ridge, y);
    x_prev = x;
    x = y - step * gy;
    double beta = 0.0;
    if (certifiable) {
      beta = (std::sqrt(q) - 1.0) / (std::sqrt(q) + 1.0);
    } else {
      const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
      beta = (t - 1.0) / t_next;
      t = t_next;
    }
    // Gradient-based restart keeps the method monotone on ill-conditioned runs.
    if (gy.dot(x - x_prev) > 0.0) {
      beta = 0.0;
      t = 1.0;
    }
    y = x + beta * (x - x_prev);
    g = logistic_gradient(data, req.w, req.ridge, x);
    ++it;
  }
  return {x, g.norm(), it, certifiable};
}

ErmResult solve_hinge(const Dataset& data, const ErmRequest& req) {
  if (!(req.ridge > 0.0)) throw InvalidArgument("hinge link needs a positive ridge");
  const Index d = data.d();
  Vec x = req.warm_start ? *req.warm_start : Vec::Zero(d);
  if (x.size() != d) throw InvalidArgument("warm start has the wrong dimension");
  const int iters = 4000;
  Vec avg = x;
  double weight_sum = 0.0;
  for (int t = 0; t < iters; ++t) {
    const Vec g = weighted_gradient(data, req.w, x, LinkKind::hinge) + req.ridge * x;
    x -= (2.0 / (req.ridge * (t + 2.0))) * g;
    const double wt = t + 1.0;
    weight_sum += wt;
    avg += (wt / weight_sum) * (x - avg);
  }
  const Vec g = weighted_gradient(data, req.w, avg, LinkKind::hinge) + req.ridge * avg;
  return {avg, g.norm(), iters, false};
}

}  // namespace

ErmResult erm_solve(const Dataset& data, const ErmRequest& req) {
  if (req.w.size() != data.n()) throw InvalidArgument("weight length differs from dataset size");
  if (!(req.gamma > 0.0)) throw InvalidArgument("gamma must be positive");
  if (req.ridge < 0.0) throw InvalidArgument("ridge must be nonnegative");
  if (!(req.w.sum() > 0.0) && req.ridge == 0.0) throw InvalidArgument("all weight has been filtered out");
  switch (req.link) {
    case LinkKind::squared: return solve_squared(data, req);
    case LinkKind::logistic: return solve_logistic(data, req);
    case LinkKind::hinge: return solve_hinge(data, req);
  }
  throw InvalidArgument("unknown link");
}

}  // namespace robreg
