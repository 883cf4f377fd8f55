#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace robreg {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using Index = Eigen::Index;

enum class LinkKind { squared, logistic, hinge };

std::string_view to_string(LinkKind kind);
LinkKind parse_link(std::string_view name);

// Named tuning constants. Every field can be overridden by name through set().
struct Constants {
  double est = 2.0;            // gradient second-moment scale (C_est)
  double ub = 2.0;             // function-value upper bound scale (C_ub)
  double lp = 8.0;             // last-phase radius multiple of sigma (C_lp)
  double id = 4.0;             // identifiability bound scale (C_id)
  double ng = 4.0;             // noisy-gradient error scale (C_ng)
  double env = 8.0;            // approximate prox accuracy scale (C_env)
  double boost_radius = 2.0;   // agreement radius factor for boosting
  double loop = 32.0;          // multiplier on analytic loop counts
  double alpha = 4.0;          // scale of the distinct-set budget
  double filter_rounds = 4.0;  // rounds = ceil(filter_rounds * ln(n)^2)
  double directions = 24.0;    // sketch directions = ceil(directions * ln(n/delta))
  double accel_iters = 8.0;    // accelerated iterations = ceil(accel_iters * sqrt(kappa))
  double accel_floor = 1.0;    // radius floor multiple for the accelerated driver
  double moreau_steps = 16.0;  // prox steps = ceil(moreau_steps * ln(1/eps) / eps)
  double eps_kappa_warn = 0.1; // warn when eps * kappa^2 exceeds this

  // Returns false when the name is unknown.
  bool set(std::string_view name, double value);
  std::optional<double> get(std::string_view name) const;
  static const std::vector<std::string>& names();
};

struct ProblemSpec {
  double L = 1.0;
  double mu = 1.0;
  double sigma = 1.0;
  double epsilon = 0.0;
  std::optional<double> lambda_env;
  LinkKind link = LinkKind::squared;
  Constants constants;

  double kappa() const { return std::max(1.0, L / mu); }
  // Throws InvalidArgument on non-finite or out-of-range fields.
  void validate() const;
};

struct GroundTruth {
  Vec theta_star;
  Mat sigma_star;
  Vec spectrum;                  // eigenvalues of sigma_star, ascending
  std::uint64_t rotation_seed = 0;
  std::vector<Index> good;       // sorted
  std::vector<Index> bad;        // sorted
  double sigma = 0.0;
};

struct Sample {
  Vec x;
  double y = 0.0;
};

// Covariates are stored row-wise: X.row(i) is sample i.
struct Dataset {
  Mat X;
  Vec y;
  std::optional<GroundTruth> truth;

  Dataset() = default;
  Dataset(Mat covariates, Vec labels, std::optional<GroundTruth> gt = std::nullopt);
  static Dataset from_samples(const std::vector<Sample>& samples);

  Index n() const { return X.rows(); }
  Index d() const { return X.cols(); }
  Sample sample(Index i) const { return {X.row(i).transpose(), y(i)}; }

  // Rows listed in idx, with the bipartition remapped to the new indexing.
  Dataset subset(const std::vector<Index>& idx) const;
};

Vec uniform_weights(Index n);

// Throws InvalidArgument unless 0 <= w_i <= 1/n (+ roundoff) and sum(w) <= 1.
void check_weights(const Vec& w);

}  // namespace robreg
