#include "robreg/filter.hpp"

#include "robreg/errors.hpp"
#include "robreg/links.hpp"

#include <cmath>
#include <limits>

namespace robreg {

MatVecHandle second_moment_operator(const Mat& V, const Vec& w) {
  if (V.rows() != w.size()) throw InvalidArgument("vector count and weight length differ");
  return {[&V, &w](const Vec& v) -> Vec { return V.transpose() * w.cwiseProduct(V * v); }, V.cols()};
}

double power_method(const MatVecHandle& m, double delta, Rng& rng) {
  if (!(delta > 0.0 && delta < 1.0)) throw InvalidArgument("delta must lie in (0, 1)");
  const Index d = m.dim;
  if (d == 0) return 0.0;
  const int iters = std::max(1, static_cast<int>(std::ceil(8.0 * std::log(static_cast<double>(d) / delta))));
  std::normal_distribution<double> normal;
  Vec x(d);
  for (Index j = 0; j < d; ++j) x(j) = normal(rng);
  x.normalize();
  double rayleigh = 0.0;
  for (int k = 0; k < iters; ++k) {
    const Vec mx = m.apply(x);
    if (!mx.allFinite()) throw InvalidArgument("matvec produced non-finite values");
    rayleigh = x.dot(mx);
    const double norm = mx.norm();
    if (norm == 0.0) return 0.0;
    x = mx / norm;
  }
  return std::max(0.0, rayleigh);
}

namespace {

double support_max(const Vec& w, const Vec& tau) {
  double best = 0.0;
  for (Index i = 0; i < w.size(); ++i) {
    if (w(i) > 0.0) best = std::max(best, tau(i));
  }
  return best;
}

Vec apply_downweight(const Vec& w, const Vec& tau, double tau_max, long long K) {
  Vec out = w;
  if (K == 0) return out;
  const double floor = 1e-15 / static_cast<double>(w.size());
  const double k = static_cast<double>(K);
  for (Index i = 0; i < w.size(); ++i) {
    if (w(i) == 0.0) continue;
    const double keep = 1.0 - tau(i) / tau_max;
    out(i) = keep <= 0.0 ? 0.0 : w(i) * std::pow(keep, k);
    if (out(i) < floor) out(i) = 0.0;
  }
  return out;
}

}  // namespace

DownweightResult downweight_by_scores(const Vec& w, const Vec& tau, const StopRule& stop, long long k_max) {
  if (w.size() != tau.size()) throw InvalidArgument("score and weight lengths differ");
  if (!tau.allFinite() || (tau.size() > 0 && tau.minCoeff() < 0.0)) {
    throw InvalidArgument("scores must be finite and nonnegative");
  }
  if (stop(w)) return {w, 0};
  const double tau_max = support_max(w, tau);
  if (tau_max == 0.0) return {w, 0};
  if (k_max < 1) throw DownweightDivergence("stopping rule not met within K = " + std::to_string(k_max));
  // Galloping search for the smallest stopping step count.
  long long lo = 0;  // stop false
  long long hi = 1;  // stop true once the bracket closes
  while (true) {
    if (hi >= k_max) {
      hi = k_max;
      if (!stop(apply_downweight(w, tau, tau_max, k_max))) {
        throw DownweightDivergence("stopping rule not met within K = " + std::to_string(k_max));
      }
      break;
    }
    if (stop(apply_downweight(w, tau, tau_max, hi))) break;
    lo = hi;
    hi *= 2;
  }
  while (hi - lo > 1) {
    const long long mid = lo + (hi - lo) / 2;
    if (stop(apply_downweight(w, tau, tau_max, mid))) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return {apply_downweight(w, tau, tau_max, hi), hi};
}

long long downweight_k_bound(const Vec& w, const Vec& tau, double target) {
  if (!(target > 0.0)) throw InvalidArgument("downweight target must be positive");
  const double bound = w.sum() * support_max(w, tau) / (std::exp(1.0) * target);
  const double capped = std::min(bound, 1e15);
  return static_cast<long long>(std::floor(capped)) + 2;
}

FilterOptions filter_options_from(const Constants& constants) {
  FilterOptions o;
  o.round_factor = constants.filter_rounds;
  o.direction_factor = constants.directions;
  return o;
}

namespace {

void report_round(const FilterOptions& options, int round, double power, const Vec& w) {
  if (!options.trace) return;
  FilterRoundTrace row;
  row.round = round;
  row.power = power;
  row.mass = w.sum();
  if (options.truth) {
    const double cap = 1.0 / static_cast<double>(w.size());
    for (Index i : options.truth->good) row.removed_good += cap - w(i);
    for (Index i : options.truth->bad) row.removed_bad += cap - w(i);
  }
  options.trace(row);
}

Mat rademacher(Index rows, Index cols, Rng& rng) {
  std::bernoulli_distribution coin(0.5);
  Mat u(rows, cols);
  for (Index j = 0; j < cols; ++j)
    for (Index i = 0; i < rows; ++i) u(i, j) = coin(rng) ? 1.0 : -1.0;
  return u;
}

}  // namespace

Vec fast_cov_filter(const Mat& V, const Vec& w_in, double delta, double R, Rng& rng,
                    const FilterOptions& options, FilterStats* stats) {
  const Index n = V.rows();
  const Index d = V.cols();
  if (w_in.size() != n) throw InvalidArgument("vector count and weight length differ");
  if (!(delta > 0.0 && delta < 1.0)) throw InvalidArgument("delta must lie in (0, 1)");
  if (!(R >= 0.0) || !std::isfinite(R)) throw InvalidArgument("R must be finite and nonnegative");
  if (!V.allFinite()) throw InvalidArgument("filter vectors must be finite");

  Vec w = w_in;
  const Vec sq_norms = V.rowwise().squaredNorm();
  const double prune_at = static_cast<double>(n) * R;
  for (Index i = 0; i < n; ++i) {
    if (sq_norms(i) > 0.0 && sq_norms(i) >= prune_at) w(i) = 0.0;
  }

  const double log_n = std::log(static_cast<double>(std::max<Index>(n, 2)));
  const int rounds = std::max(1, static_cast<int>(std::ceil(options.round_factor * log_n * log_n)));
  const int directions = std::max(
      1, static_cast<int>(std::ceil(options.direction_factor * std::log(static_cast<double>(n) / delta))));
  const int exponent = d > 1 ? static_cast<int>(std::ceil(std::log2(static_cast<double>(d)))) : 0;
  const double power_delta = delta / (2.0 * rounds);

  FilterStats local;
  double power = 0.0;
  bool certified = false;
  for (int t = 0; t < rounds; ++t) {
    power = power_method(second_moment_operator(V, w), power_delta, rng);
    report_round(options, t, power, w);
    if (power <= 2.0 * R) {
      certified = true;
      break;
    }
    ++local.rounds;
    // Sketch directions Y u_j with Y = M^exponent, normalized after every product.
    Mat U = rademacher(d, directions, rng);
    Mat S(n, directions);
    for (int k = 0; k < exponent; ++k) {
      S.noalias() = V * U;
      S.array().colwise() *= w.array();
      U.noalias() = V.transpose() * S;
      for (Index j = 0; j < U.cols(); ++j) {
        const double norm = U.col(j).norm();
        if (norm > 0.0) U.col(j) /= norm;
      }
    }
    S.noalias() = V * U;
    for (Index j = 0; j < U.cols(); ++j) {
      const double target = 2.0 * R * U.col(j).squaredNorm();
      const Vec tau = S.col(j).array().square().matrix();
      auto below = [&tau, target](const Vec& cand) { return cand.dot(tau) < target; };
      if (below(w)) continue;
      if (!(target > 0.0)) {
        // Limit of K -> infinity: every positive score on the support is removed.
        for (Index i = 0; i < n; ++i)
          if (tau(i) > 0.0) w(i) = 0.0;
        ++local.downweights;
        continue;
      }
      w = downweight_by_scores(w, tau, below, downweight_k_bound(w, tau, target)).w;
      ++local.downweights;
    }
  }
  if (!certified) {
    power = power_method(second_moment_operator(V, w), power_delta, rng);
    report_round(options, rounds, power, w);
    if (power > 4.5 * R) {
      throw FilterFailure("operator norm still above 5R after " + std::to_string(rounds) + " rounds");
    }
  }
  local.final_power = power;
  if (stats) *stats = local;
  if (options.observer) options.observer("fast_cov_filter", w);
  return w;
}

Vec function_filter(const Dataset& data, const Vec& w, const Vec& theta, double R, double D,
                    const ProblemSpec& spec, long long* K_out) {
  if (w.size() != data.n()) throw InvalidArgument("weight length differs from dataset size");
  const Vec tau = sample_losses(data, theta, spec.link);
  const double observed = support_max(w, tau);
  if (observed > D * (1.0 + 1e-12)) {
    throw InvalidArgument("score bound D is smaller than an observed score");
  }
  const double target = 2.0 * spec.constants.ub * (spec.sigma * spec.sigma + R * R);
  auto within = [&tau, target](const Vec& cand) { return cand.dot(tau) <= target; };
  if (K_out) *K_out = 0;
  if (within(w)) return w;
  if (!(target > 0.0)) {
    Vec out = w;
    for (Index i = 0; i < out.size(); ++i)
      if (tau(i) > 0.0) out(i) = 0.0;
    if (K_out) *K_out = std::numeric_limits<long long>::max();
    return out;
  }
  auto result = downweight_by_scores(w, tau, within, downweight_k_bound(w, tau, target));
  if (K_out) *K_out = result.K;
  return result.w;
}

}  // namespace robreg
