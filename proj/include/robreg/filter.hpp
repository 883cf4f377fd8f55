#pragma once

#include "robreg/generate.hpp"
#include "robreg/metrics.hpp"
#include "robreg/types.hpp"

#include <functional>

namespace robreg {

// Implicit symmetric operator v -> M v on R^dim.
struct MatVecHandle {
  std::function<Vec(const Vec&)> apply;
  Index dim = 0;
};

// M = sum_i w_i v_i v_i^T with v_i the rows of V; never formed explicitly.
MatVecHandle second_moment_operator(const Mat& V, const Vec& w);

// V with lambda_max(M) >= V >= 0.9 lambda_max(M) with probability at least 1 - delta,
// using ceil(8 ln(dim / delta)) matvecs from a random start.
double power_method(const MatVecHandle& m, double delta, Rng& rng);

using StopRule = std::function<bool(const Vec& w)>;

struct DownweightResult {
  Vec w;
  long long K = 0;
};

// w'_i = (1 - tau_i / tau_max)^K w_i for the smallest K in [0, k_max] with stop(w').
// tau_max is taken over the support of w. Weights below 1e-15 / n snap to zero.
// Throws DownweightDivergence when stop(w') is false at k_max.
DownweightResult downweight_by_scores(const Vec& w, const Vec& tau, const StopRule& stop, long long k_max);

// Smallest K certified by sum_i w_i tau_i (1 - tau_i/tau_max)^K <= |w|_1 tau_max / (e K)
// to bring the weighted score sum to at most target (target > 0).
long long downweight_k_bound(const Vec& w, const Vec& tau, double target);

struct FilterRoundTrace {
  int round = 0;
  double power = 0.0;
  double mass = 0.0;
  double removed_good = 0.0;  // filled when a truth is attached
  double removed_bad = 0.0;
};

struct FilterOptions {
  double round_factor = 4.0;      // rounds = ceil(round_factor * ln(n)^2)
  double direction_factor = 24.0; // directions = ceil(direction_factor * ln(n / delta))
  WeightObserver observer;
  std::function<void(const FilterRoundTrace&)> trace;
  const GroundTruth* truth = nullptr;
};

FilterOptions filter_options_from(const Constants& constants);

struct FilterStats {
  int rounds = 0;
  int downweights = 0;
  double final_power = 0.0;
};

// Returns w' <= w with lambda_max(sum_i w'_i v_i v_i^T) <= 5 R with probability at least
// 1 - delta when R bounds the good second moment. Rows of V are the vectors v_i.
// Throws FilterFailure when the round limit is exhausted without a certified bound.
Vec fast_cov_filter(const Mat& V, const Vec& w, double delta, double R, Rng& rng,
                    const FilterOptions& options = {}, FilterStats* stats = nullptr);

// Downweights by tau_i = f_i(theta) until F_w'(theta) <= 2 C_ub (sigma^2 + R^2).
// Throws InvalidArgument when a supported score exceeds D.
Vec function_filter(const Dataset& data, const Vec& w, const Vec& theta, double R, double D,
                    const ProblemSpec& spec, long long* K_out = nullptr);

}  // namespace robreg
