#pragma once

#include "robreg/erm.hpp"
#include "robreg/filter.hpp"
#include "robreg/types.hpp"

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace robreg {

struct PhaseState {
  Vec w;
  Vec theta;
  double R = 0.0;  // Sigma-norm radius bound
  double D = 0.0;  // score upper bound
  int rounds = 0;
};

struct SeverTraceRow {
  int phase = 0;
  int round = 0;
  double decrease = 0.0;  // Delta_t
  double power = 0.0;     // operator-norm estimate at filter exit
  double mass = 0.0;      // |w|_1
  double error = -1.0;    // Sigma-norm error when a truth is attached, else -1
};

struct PhaseRecord {
  double R = 0.0;
  int rounds = 0;
  double start_objective = 0.0;   // F_{w0}(theta0) after the function filter
  double final_objective = 0.0;   // F_{wT}(theta_T) for the last ERM point
  std::vector<double> decreases;
};

struct SeverStats {
  int phases = 0;          // radius-halving phases
  int erm_calls = 0;
  int filter_calls = 0;    // every filter call defines one candidate good set
  double distinct_budget = 0.0;
  bool budget_exceeded = false;
  std::vector<PhaseRecord> records;
  std::vector<std::string> warnings;
};

// Mutable per-run state: randomness, counters and optional observers.
struct SeverRun {
  explicit SeverRun(std::uint64_t seed = 0) : rng(seed) {}
  Rng rng;
  SeverStats stats;
  WeightObserver observer;
  std::function<void(const SeverTraceRow&)> trace;
  const GroundTruth* truth = nullptr;  // traces only; never consulted by the algorithm
  int phase = 0;
};

ErmOracle default_erm();

// C_id (sqrt(eps) (sigma sqrt(kappa) + sqrt(|Cov_w(g(theta))|_op / mu)) + |grad F_w(theta)|_{Sigma^-1}).
// Cov_w uses normalized weights and is uncentered; F_w uses the raw weights.
double identifiability_bound(const Dataset& data, const Vec& w, const Vec& theta, const ProblemSpec& spec,
                             const Mat& sigma_star, Rng& rng);

// One radius-halving phase. Throws PhaseFailure when the loop cap is exceeded.
PhaseState half_radius_linreg(const Dataset& data, const PhaseState& state, const ErmOracle& erm,
                              const ProblemSpec& spec, double delta, SeverRun& run);

// Final phase at radius C_lp sigma. Throws PhaseFailure when the loop cap is exceeded.
PhaseState last_phase(const Dataset& data, const PhaseState& state, const ErmOracle& erm,
                      const ProblemSpec& spec, double delta, SeverRun& run);

struct RegressionResult {
  Vec theta;
  Vec w;
  double R0 = 0.0;        // starting radius actually used
  double start_radius = 0.0;  // R0 plus the sigma sqrt(kappa eps) allowance
};

// Full pipeline. theta0 defaults to the uniform ERM and R0 to the identifiability bound
// at that point under the filtered covariate second moment, floored at C_lp sigma.
RegressionResult fast_regression(const Dataset& data, const std::optional<Vec>& theta0,
                                 std::optional<double> R0, const ErmOracle& erm, const ProblemSpec& spec,
                                 double delta, SeverRun& run);

// Number of halving phases fast_regression runs from a given starting radius.
int halving_phase_count(double start_radius, const ProblemSpec& spec);

}  // namespace robreg
