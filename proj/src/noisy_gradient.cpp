#include "robreg/noisy_gradient.hpp"

#include "robreg/errors.hpp"
#include "robreg/links.hpp"

#include <cmath>

namespace robreg {

namespace {

Vec filtered_mean(const Mat& G, double delta, std::optional<double> threshold, Rng& rng,
                  const FilterOptions& options) {
  const Index n = G.rows();
  Vec w = uniform_weights(n);
  if (threshold) w = fast_cov_filter(G, w, delta, *threshold, rng, options);
  const double mass = w.sum();
  if (!(mass > 0.0)) throw FilterFailure("filter removed all mass");
  return G.transpose() * (w / mass);
}

}  // namespace

GradientEstimate ng_query_linreg(const Dataset& batch, const Vec& theta, std::optional<double> R,
                                 const ProblemSpec& spec, double delta, Rng& rng, const FilterOptions& options) {
  if (theta.size() != batch.d()) throw InvalidArgument("query point has the wrong dimension");
  const Mat G = sample_gradients(batch, theta, LinkKind::squared);
  std::optional<double> threshold;
  if (R) {
    if (!(*R >= 0.0)) throw InvalidArgument("query radius must be nonnegative");
    threshold = spec.constants.est * (spec.L * spec.sigma * spec.sigma + spec.L * spec.L * (*R) * (*R));
  }
  return {filtered_mean(G, delta, threshold, rng, options), theta, R};
}

GradientEstimate ng_query_glm(const Dataset& batch, const Vec& theta, const ProblemSpec& spec, double delta,
                              Rng& rng, const FilterOptions& options) {
  if (theta.size() != batch.d()) throw InvalidArgument("query point has the wrong dimension");
  const Mat G = sample_gradients(batch, theta, spec.link);
  const Vec mean = filtered_mean(G, delta, spec.constants.est * spec.L, rng, options);
  return {mean + spec.mu * theta, theta, std::nullopt};
}

GradientEstimate boost_estimates(const std::function<GradientEstimate(int)>& single_shot, int T, double radius) {
  if (T < 3) throw InvalidArgument("boosting needs at least three shots");
  if (!(radius >= 0.0)) throw InvalidArgument("boost radius must be nonnegative");
  std::vector<GradientEstimate> shots;
  shots.reserve(static_cast<std::size_t>(T));
  for (int t = 0; t < T; ++t) shots.push_back(single_shot(t));
  for (int t = 0; t < T; ++t) {
    int close = 0;
    for (int s = 0; s < T; ++s) {
      if ((shots[static_cast<std::size_t>(t)].g - shots[static_cast<std::size_t>(s)].g).norm() <= radius) ++close;
    }
    if (5 * close >= 3 * T) return shots[static_cast<std::size_t>(t)];
  }
  throw BoostFailure("no estimate reached the 3/5 agreement quorum");
}

int boost_shot_count(double delta) {
  if (!(delta > 0.0 && delta < 1.0)) throw InvalidArgument("delta must lie in (0, 1)");
  return std::max(3, static_cast<int>(std::ceil(9.0 * std::log(1.0 / delta))));
}

double boost_radius(const ProblemSpec& spec, std::optional<double> R) {
  const double root_eps = std::sqrt(spec.epsilon);
  double err = std::sqrt(spec.L) * root_eps * spec.sigma;
  if (R) err += spec.L * root_eps * (*R);
  return spec.constants.boost_radius * spec.constants.ng * err;
}

namespace {

std::vector<std::shared_ptr<const Dataset>> split_batches(const Dataset& data, int T) {
  if (data.n() < T) throw InvalidArgument("dataset too small to split into boosting batches");
  std::vector<std::vector<Index>> parts(static_cast<std::size_t>(T));
  for (Index i = 0; i < data.n(); ++i) parts[static_cast<std::size_t>(i % T)].push_back(i);
  std::vector<std::shared_ptr<const Dataset>> out;
  for (const auto& idx : parts) out.push_back(std::make_shared<const Dataset>(data.subset(idx)));
  return out;
}

}  // namespace

NgOracle make_linreg_oracle(std::shared_ptr<const Dataset> data, const ProblemSpec& spec, double delta,
                            std::uint64_t seed) {
  auto rng = std::make_shared<Rng>(seed);
  NgOracle o{spec.L, spec.sigma, delta, false, {}};
  o.query = [data, spec, delta, rng](const Vec& theta, std::optional<double> R) {
    return ng_query_linreg(*data, theta, R, spec, delta, *rng, filter_options_from(spec.constants));
  };
  return o;
}

NgOracle make_glm_oracle(std::shared_ptr<const Dataset> data, const ProblemSpec& spec, double delta,
                         std::uint64_t seed) {
  auto rng = std::make_shared<Rng>(seed);
  NgOracle o{spec.L, 1.0, delta, true, {}};
  o.query = [data, spec, delta, rng](const Vec& theta, std::optional<double>) {
    return ng_query_glm(*data, theta, spec, delta, *rng, filter_options_from(spec.constants));
  };
  return o;
}

NgOracle make_boosted_linreg_oracle(std::shared_ptr<const Dataset> data, const ProblemSpec& spec, double delta,
                                    std::uint64_t seed) {
  const int T = boost_shot_count(delta);
  auto batches = split_batches(*data, T);
  auto rng = std::make_shared<Rng>(seed);
  NgOracle o{spec.L, spec.sigma, delta, false, {}};
  o.query = [batches, spec, T, rng](const Vec& theta, std::optional<double> R) {
    auto shot = [&](int t) {
      return ng_query_linreg(*batches[static_cast<std::size_t>(t)], theta, R, spec, 0.1, *rng,
                             filter_options_from(spec.constants));
    };
    GradientEstimate out = boost_estimates(shot, T, boost_radius(spec, R));
    out.radius = R;
    return out;
  };
  return o;
}

NgOracle make_boosted_glm_oracle(std::shared_ptr<const Dataset> data, const ProblemSpec& spec, double delta,
                                 std::uint64_t seed) {
  const int T = boost_shot_count(delta);
  auto batches = split_batches(*data, T);
  auto rng = std::make_shared<Rng>(seed);
  ProblemSpec unit = spec;
  unit.sigma = 1.0;
  NgOracle o{spec.L, 1.0, delta, true, {}};
  o.query = [batches, spec, unit, T, rng](const Vec& theta, std::optional<double>) {
    auto shot = [&](int t) {
      return ng_query_glm(*batches[static_cast<std::size_t>(t)], theta, spec, 0.1, *rng,
                          filter_options_from(spec.constants));
    };
    return boost_estimates(shot, T, boost_radius(unit, std::nullopt));
  };
  return o;
}

NgOracle make_quadratic_oracle(const Mat& hessian, const Vec& minimizer) {
  NgOracle o;
  o.L = Eigen::SelfAdjointEigenSolver<Mat>(hessian, Eigen::EigenvaluesOnly).eigenvalues().maxCoeff();
  o.sigma = 0.0;
  o.radiusless = true;
  o.query = [hessian, minimizer](const Vec& theta, std::optional<double> R) {
    return GradientEstimate{hessian * (theta - minimizer), theta, R};
  };
  return o;
}

}  // namespace robreg
