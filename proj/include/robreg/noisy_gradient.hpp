#pragma once

#include "robreg/filter.hpp"
#include "robreg/types.hpp"

#include <functional>
#include <memory>
#include <optional>

namespace robreg {

struct GradientEstimate {
  Vec g;
  Vec theta;
  std::optional<double> radius;  // absent for radiusless queries
};

using GradientQuery = std::function<GradientEstimate(const Vec& theta, std::optional<double> R)>;

struct NgOracle {
  double L = 1.0;
  double sigma = 0.0;
  double delta = 0.01;
  bool radiusless = false;
  GradientQuery query;
};

// Filtered mean of g_i(theta) = X_i (<X_i, theta> - y_i). The filter threshold is
// C_est (L sigma^2 + L^2 R^2); an absent R means no radius bound and no filtering.
GradientEstimate ng_query_linreg(const Dataset& batch, const Vec& theta, std::optional<double> R,
                                 const ProblemSpec& spec, double delta, Rng& rng,
                                 const FilterOptions& options = {});

// Filtered mean of gamma'(<X_i, theta>, y_i) X_i at threshold C_est L, plus mu theta.
GradientEstimate ng_query_glm(const Dataset& batch, const Vec& theta, const ProblemSpec& spec, double delta,
                              Rng& rng, const FilterOptions& options = {});

// Runs shots 0..T-1 and returns the lowest-index estimate within `radius` of at least
// 3/5 of all estimates. Throws BoostFailure when none qualifies.
GradientEstimate boost_estimates(const std::function<GradientEstimate(int)>& single_shot, int T, double radius);

int boost_shot_count(double delta);

// Agreement radius C_boost C_ng (sqrt(L eps) sigma + L sqrt(eps) R); the R term is dropped when absent.
double boost_radius(const ProblemSpec& spec, std::optional<double> R);

// Oracles over a shared dataset. Randomness advances with every query, so a fixed query
// sequence is reproducible from the seed.
NgOracle make_linreg_oracle(std::shared_ptr<const Dataset> data, const ProblemSpec& spec, double delta,
                            std::uint64_t seed);
NgOracle make_glm_oracle(std::shared_ptr<const Dataset> data, const ProblemSpec& spec, double delta,
                         std::uint64_t seed);

// Same oracles with confidence boosting over boost_shot_count(delta) disjoint sub-batches.
NgOracle make_boosted_linreg_oracle(std::shared_ptr<const Dataset> data, const ProblemSpec& spec, double delta,
                                    std::uint64_t seed);
NgOracle make_boosted_glm_oracle(std::shared_ptr<const Dataset> data, const ProblemSpec& spec, double delta,
                                 std::uint64_t seed);

// Oracle returning the exact gradient of (1/2)|theta - minimizer|^2_H; used for sanity runs.
NgOracle make_quadratic_oracle(const Mat& hessian, const Vec& minimizer);

}  // namespace robreg
