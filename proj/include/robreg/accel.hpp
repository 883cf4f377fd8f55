#pragma once

#include "robreg/noisy_gradient.hpp"
#include "robreg/types.hpp"

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace robreg {

// a[t], A[t] for t = 0..t_max with A_0 = 0, a_0 = 0, A_t = 3 a_t^2, A_{t+1} = A_t + a_{t+1}.
struct AccelSchedule {
  std::vector<double> a;
  std::vector<double> A;
};

AccelSchedule accel_schedule(int t_max);

// center + min(1, R / |z - center|) (z - center).
Vec project_ball(const Vec& z, const Vec& center, double R);

struct AccelTraceRow {
  int round = 0;
  int t = 0;
  double gradient_norm = 0.0;
  double error = -1.0;      // |theta_t - minimizer| when diagnostics are attached
  double potential = -1.0;  // Phi_t when diagnostics are attached
};

// Exact objective and minimizer, used only for the potential diagnostic and traces.
struct AccelDiagnostics {
  std::function<double(const Vec&)> objective;
  Vec minimizer;
  double min_value = 0.0;
};

struct AccelOptions {
  std::optional<double> target_radius;  // overrides the noise-floor round count when set
  std::function<void(const AccelTraceRow&)> trace;
  const AccelDiagnostics* diagnostics = nullptr;
};

struct AccelStats {
  long long oracle_calls = 0;
  int rounds = 0;
  int iterations_per_round = 0;
  std::vector<double> potential;  // Phi_0..Phi_T of the latest round when diagnostics are attached
  std::vector<std::string> warnings;
};

int accel_iterations(const ProblemSpec& spec);

// ceil(c_T sqrt(kappa)) projected accelerated steps inside the ball of radius R around anchor.
Vec half_radius_accel(const Vec& anchor, double R, const NgOracle& oracle, const ProblemSpec& spec, double delta,
                      AccelStats* stats = nullptr, const AccelOptions& options = {}, int round = 0);

// Rounds needed to go from R0 to the noise floor C sigma sqrt(kappa eps / mu), or to the target radius.
int robust_accel_rounds(double R0, const ProblemSpec& spec, const AccelOptions& options = {});

// Repeated halving from radius R0. Throws PhaseFailure carrying the failing round.
Vec robust_accel(const Vec& theta0, double R0, const NgOracle& oracle, const ProblemSpec& spec, double delta,
                 AccelStats* stats = nullptr, const AccelOptions& options = {});

}  // namespace robreg
