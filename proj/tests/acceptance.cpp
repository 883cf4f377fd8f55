#include "robreg/accel.hpp"
#include "robreg/bench.hpp"
#include "robreg/erm.hpp"
#include "robreg/errors.hpp"
#include "robreg/filter.hpp"
#include "robreg/generate.hpp"
#include "robreg/metrics.hpp"
#include "robreg/moreau.hpp"
#include "robreg/noisy_gradient.hpp"
#include "robreg/sever.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <memory>
#include <random>
#include <sstream>
#include <string>
#include <vector>

using namespace robreg;

namespace {

constexpr std::uint64_t kBaseSeed = 20261015;
constexpr int kSeeds = 50;

int failures = 0;

void report(int id, bool pass, const std::string& what, const std::string& detail) {
  std::printf("%s criterion %d: %s (%s)\n", pass ? "PASS" : "FAIL", id, what.c_str(), detail.c_str());
  std::fflush(stdout);
  if (!pass) ++failures;
}

std::string fmt(const char* pattern, double a, double b = 0.0, double c = 0.0, double d = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, pattern, a, b, c, d);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

double median(std::vector<double> v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 == 1 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

// Least-squares slope of log(y) against log(x).
double log_log_slope(const std::vector<double>& x, const std::vector<double>& y) {
  const std::size_t k = x.size();
  double mx = 0.0;
  double my = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    mx += std::log(x[i]);
    my += std::log(y[i]);
  }
  mx /= static_cast<double>(k);
  my /= static_cast<double>(k);
  double sxy = 0.0;
  double sxx = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    sxy += (std::log(x[i]) - mx) * (std::log(y[i]) - my);
    sxx += (std::log(x[i]) - mx) * (std::log(x[i]) - mx);
  }
  return sxy / sxx;
}

double dense_lambda_max(const Mat& V, const Vec& w) {
  const Mat m = V.transpose() * w.asDiagonal() * V;
  return Eigen::SelfAdjointEigenSolver<Mat>(0.5 * (m + m.transpose()), Eigen::EigenvaluesOnly).eigenvalues().maxCoeff();
}

// Every weight vector seen anywhere is held to tv <= 6 eps + 2c with c its own saturation slack.
struct TvAudit {
  long long checked = 0;
  long long violations = 0;
  double worst_margin = -std::numeric_limits<double>::infinity();

  void check(const Vec& w, const GroundTruth& truth) {
    const double n = static_cast<double>(w.size());
    const double eps = static_cast<double>(truth.bad.size()) / n;
    const SaturationReport r = saturation_report(w, truth, 0.0);
    const double c = std::max(0.0, r.removed_good - r.removed_bad);
    const double margin = r.tv_to_uniform_G - (6.0 * eps + 2.0 * c);
    worst_margin = std::max(worst_margin, margin);
    ++checked;
    if (margin > 1e-12) ++violations;
  }

  WeightObserver observer(const GroundTruth& truth) {
    return [this, &truth](std::string_view, const Vec& w) { check(w, truth); };
  }
};

TvAudit audit;

ProblemSpec linreg_spec(double eps, double kappa) {
  ProblemSpec spec;
  spec.L = 1.0;
  spec.mu = 1.0 / kappa;
  spec.sigma = 1.0;
  spec.epsilon = eps;
  return spec;
}

Dataset leverage_instance(const ProblemSpec& spec, std::uint64_t seed, double signal) {
  GeneratorOptions gen;
  gen.d = 10;
  gen.signal = signal;
  return generate_instance(spec, Model::linreg, 2000, default_adversary(AdversaryKind::leverage), seed, gen);
}

NgOracle observed_linreg_oracle(std::shared_ptr<const Dataset> data, const ProblemSpec& spec, double delta,
                                std::uint64_t seed) {
  auto rng = std::make_shared<Rng>(seed);
  FilterOptions options = filter_options_from(spec.constants);
  options.observer = audit.observer(*data->truth);
  NgOracle o{spec.L, spec.sigma, delta, false, {}};
  o.query = [data, spec, delta, rng, options](const Vec& theta, std::optional<double> R) {
    return ng_query_linreg(*data, theta, R, spec, delta, *rng, options);
  };
  return o;
}

double uniform_least_squares_error(const Dataset& data) {
  ErmRequest req;
  req.w = uniform_weights(data.n());
  req.gamma = 1e-10;
  return mahalanobis_error(erm_solve(data, req).theta, *data.truth);
}

struct CellErrors {
  std::vector<double> robust;
  std::vector<double> accel;
  std::vector<double> naive;
  int failed = 0;
};

CellErrors run_cell(double eps, double kappa, std::uint64_t cell, bool with_accel, bool with_naive) {
  const ProblemSpec spec = linreg_spec(eps, kappa);
  const double signal = 10.0;
  CellErrors out;
  for (int s = 0; s < kSeeds; ++s) {
    const std::uint64_t seed = derive_seed(kBaseSeed, cell, static_cast<std::uint64_t>(s));
    auto data = std::make_shared<const Dataset>(leverage_instance(spec, seed, signal));
    SeverRun run(derive_seed(seed, 1, 0));
    run.observer = audit.observer(*data->truth);
    try {
      const RegressionResult r = fast_regression(*data, std::nullopt, std::nullopt, default_erm(), spec, 0.1, run);
      out.robust.push_back(mahalanobis_error(r.theta, *data->truth));
    } catch (const std::runtime_error&) {
      ++out.failed;
    }
    if (with_accel) {
      const NgOracle oracle = observed_linreg_oracle(data, spec, 0.1, derive_seed(seed, 2, 0));
      try {
        const Vec theta = robust_accel(Vec::Zero(10), signal / std::sqrt(spec.mu), oracle, spec, 0.1);
        out.accel.push_back(mahalanobis_error(theta, *data->truth));
      } catch (const std::runtime_error&) {
        ++out.failed;
      }
    }
    if (with_naive) out.naive.push_back(uniform_least_squares_error(*data));
  }
  return out;
}

void criterion_filter_contract() {
  const auto start = std::chrono::steady_clock::now();
  const Index n = 500;
  const Index d = 10;
  const double eps = 0.1;
  int satisfied = 0;
  for (int inst = 0; inst < 100; ++inst) {
    Rng gen(derive_seed(kBaseSeed, 1000, static_cast<std::uint64_t>(inst)));
    std::normal_distribution<double> normal;
    Mat V(n, d);
    for (Index i = 0; i < n; ++i)
      for (Index j = 0; j < d; ++j) V(i, j) = normal(gen) * (j == 0 ? 1.5 : 1.0);
    GroundTruth truth;
    const Index bad = static_cast<Index>(eps * static_cast<double>(n));
    for (Index i = 0; i < n; ++i) (i < n - bad ? truth.good : truth.bad).push_back(i);
    truth.theta_star = Vec::Zero(d);
    truth.sigma_star = Mat::Identity(d, d);
    Vec good_w = Vec::Zero(n);
    for (Index i : truth.good) good_w(i) = 1.0 / static_cast<double>(truth.good.size());
    const double R = dense_lambda_max(V, good_w);
    // Two planted directions, each carrying half of the adversarial mass.
    Vec u(d);
    Vec v(d);
    for (Index j = 0; j < d; ++j) {
      u(j) = normal(gen);
      v(j) = normal(gen);
    }
    u.normalize();
    v.normalize();
    const double scale = std::sqrt(20.0 * R / eps);
    for (std::size_t k = 0; k < truth.bad.size(); ++k)
      V.row(truth.bad[k]) = scale * (k % 2 == 0 ? u : v).transpose();

    FilterOptions options;
    options.observer = audit.observer(truth);
    Rng rng(static_cast<std::uint64_t>(inst));
    try {
      const Vec w = fast_cov_filter(V, uniform_weights(n), 0.05, R, rng, options);
      const SaturationReport sat = saturation_report(w, truth, 0.0);
      if (dense_lambda_max(V, w) <= 5.0 * R && sat.is_c_saturated) ++satisfied;
    } catch (const FilterFailure&) {
    }
  }
  const double elapsed = seconds_since(start);
  report(1, satisfied >= 95 && elapsed < 5.0, "filter meets the 5R operator-norm bound and keeps saturation",
         fmt("%.0f/100 instances, %.2f s", satisfied, elapsed));
}

void criterion_eps_sweep() {
  const std::vector<double> eps_grid = {0.01, 0.02, 0.04, 0.08};
  const double kappa = 9.0;
  const double frozen = 6.0;
  std::vector<double> medians;
  bool cells_ok = true;
  double worst_ratio = 0.0;
  double naive_ratio = 0.0;
  int failed = 0;
  for (std::size_t e = 0; e < eps_grid.size(); ++e) {
    const CellErrors cell = run_cell(eps_grid[e], kappa, e, false, true);
    failed += cell.failed;
    const double m = median(cell.robust);
    medians.push_back(m);
    const double ratio = m / std::sqrt(kappa * eps_grid[e]);
    worst_ratio = std::max(worst_ratio, ratio);
    if (!(ratio <= frozen)) cells_ok = false;
    if (eps_grid[e] == 0.08) naive_ratio = median(cell.naive) / m;
  }
  const double slope = log_log_slope(eps_grid, medians);
  const bool pass = slope >= 0.35 && slope <= 0.65 && cells_ok && naive_ratio >= 3.0;
  report(3, pass, "robust regression error scales like sqrt(eps) and beats least squares",
         fmt("slope %.3f, worst median/(sigma sqrt(kappa eps)) %.2f <= 6, naive/robust at 0.08 %.1f, failed runs %.0f",
             slope, worst_ratio, naive_ratio, failed));
}

void criterion_kappa_sweep() {
  const std::vector<double> kappas = {4.0, 16.0, 64.0};
  const double eps = 0.02;
  std::vector<double> robust;
  std::vector<double> accel;
  int failed = 0;
  for (std::size_t k = 0; k < kappas.size(); ++k) {
    const CellErrors cell = run_cell(eps, kappas[k], 100 + k, true, false);
    failed += cell.failed;
    robust.push_back(median(cell.robust));
    accel.push_back(median(cell.accel));
  }
  const double robust_slope = log_log_slope(kappas, robust);
  const double accel_slope = log_log_slope(kappas, accel);
  const bool pass = robust_slope >= 0.35 && robust_slope <= 0.65 && accel_slope >= 0.8 && accel_slope <= 1.2;
  report(4, pass, "robust regression grows like sqrt(kappa), accelerated descent like kappa",
         fmt("robust slope %.3f, accelerated slope %.3f, failed runs %.0f", robust_slope, accel_slope, failed));
}

void criterion_call_counts() {
  const std::vector<double> kappas = {4.0, 16.0, 64.0};
  const double eps = 0.02;
  const double signal = 10.0;
  AccelOptions options;
  options.target_radius = 2.0;
  std::vector<double> counts;
  for (std::size_t k = 0; k < kappas.size(); ++k) {
    const ProblemSpec spec = linreg_spec(eps, kappas[k]);
    std::vector<double> calls;
    for (int s = 0; s < kSeeds; ++s) {
      const std::uint64_t seed = derive_seed(kBaseSeed, 200 + k, static_cast<std::uint64_t>(s));
      auto data = std::make_shared<const Dataset>(leverage_instance(spec, seed, signal));
      const NgOracle oracle = observed_linreg_oracle(data, spec, 0.1, derive_seed(seed, 2, 0));
      AccelStats stats;
      // Common start radius: the planted regressor has Euclidean norm at most signal * sqrt(64).
      robust_accel(Vec::Zero(10), signal * 8.0, oracle, spec, 0.1, &stats, options);
      calls.push_back(static_cast<double>(stats.oracle_calls));
    }
    counts.push_back(median(calls));
  }
  bool pass = true;
  std::string detail;
  for (std::size_t k = 1; k < counts.size(); ++k) {
    const double ratio = counts[k] / counts[k - 1];
    if (!(std::abs(ratio - 2.0) <= 0.4)) pass = false;
    detail += fmt("%.0f->%.0f calls ratio %.3f; ", counts[k - 1], counts[k], ratio);
  }
  const double fitted = std::pow(4.0, log_log_slope(kappas, counts));
  if (!(std::abs(fitted - 2.0) <= 0.4)) pass = false;
  detail += fmt("fitted per-quadrupling ratio %.3f", fitted);
  report(5, pass, "accelerated oracle calls grow like sqrt(kappa)", detail);
}

void criterion_noisy_oracle() {
  const ProblemSpec spec = linreg_spec(0.05, 9.0);
  const std::vector<double> radii = {0.25, 1.0, 4.0, 16.0, 64.0};
  int failed = 0;
  double worst = 0.0;
  for (int s = 0; s < 100; ++s) {
    const std::uint64_t seed = derive_seed(kBaseSeed, 300, static_cast<std::uint64_t>(s));
    GeneratorOptions gen;
    gen.d = 10;
    const Dataset data = generate_instance(spec, Model::linreg, 2000, default_adversary(AdversaryKind::leverage), seed, gen);
    Rng rng(derive_seed(seed, 3, 0));
    std::normal_distribution<double> normal;
    FilterOptions options = filter_options_from(spec.constants);
    options.observer = audit.observer(*data.truth);
    for (double R : radii) {
      Vec dir(10);
      for (Index j = 0; j < 10; ++j) dir(j) = normal(rng);
      const Vec theta = data.truth->theta_star + R * dir.normalized();
      const GradientEstimate est = ng_query_linreg(data, theta, R, spec, 0.01, rng, options);
      const Vec population = data.truth->sigma_star * (theta - data.truth->theta_star);
      const double scale = std::sqrt(spec.L * spec.epsilon) * spec.sigma + spec.L * std::sqrt(spec.epsilon) * R;
      const double ratio = (est.g - population).norm() / scale;
      worst = std::max(worst, ratio);
      if (ratio > spec.constants.ng) ++failed;
    }
  }
  report(6, failed <= 5, "noisy gradient error within C_ng (sqrt(L eps) sigma + L sqrt(eps) R)",
         fmt("%.0f/500 queries over the bound, worst ratio %.3f vs C_ng %.1f", failed, worst, spec.constants.ng));
}

void criterion_schedule() {
  const int t_max = 10000;
  const AccelSchedule s = accel_schedule(t_max);
  double worst = 0.0;
  for (int t = 1; t <= t_max; ++t) {
    const auto i = static_cast<std::size_t>(t);
    worst = std::max(worst, std::abs(s.A[i] - s.A[i - 1] - s.a[i]) / s.A[i]);
    worst = std::max(worst, std::abs(s.A[i] - 3.0 * s.a[i] * s.a[i]) / s.A[i]);
  }
  const double first = std::abs(s.a[1] - 1.0 / 3.0);
  report(7, worst <= 1e-12 && first <= 1e-16 && s.A[0] == 0.0, "schedule recursion holds exactly",
         fmt("worst relative residual %.2e, |a_1 - 1/3| %.1e", worst, first));
}

void criterion_moreau() {
  // Closed forms: soft thresholding for |x| and the three-piece prox of max(0, 1 - x).
  struct Case {
    PiecewiseLinear1d f;
    double (*prox)(double, double);
  };
  const std::vector<Case> cases = {
      {PiecewiseLinear1d::absolute_value(),
       [](double x, double l) { return std::copysign(std::max(0.0, std::abs(x) - l), x); }},
      {PiecewiseLinear1d::hinge(), [](double x, double l) { return x >= 1.0 ? x : (x <= 1.0 - l ? x + l : 1.0); }},
  };
  double worst_identity = 0.0;
  bool sandwich = true;
  for (const Case& c : cases) {
    const double L = c.f.lipschitz() * c.f.lipschitz();
    for (double lambda : {0.5, 1.0, 2.0}) {
      for (int k = 0; k < 1000; ++k) {
        const double x = -5.0 + 10.0 * k / 999.0;
        const EnvelopeReference r = envelope_reference_1d(c.f, lambda, x);
        const double prox = c.prox(x, lambda);
        const double value = c.f(prox) + (x - prox) * (x - prox) / (2.0 * lambda);
        worst_identity = std::max(worst_identity, std::abs(r.envelope_grad - (x - prox) / lambda));
        worst_identity = std::max(worst_identity, std::abs(r.envelope_value - value));
        const double gap = c.f(x) - r.envelope_value;
        if (gap < -1e-12 || gap > L * lambda + 1e-12) sandwich = false;
      }
    }
  }

  int within = 0;
  int trials = 0;
  double worst_ratio = 0.0;
  for (double eps : {0.01, 0.05}) {
    ProblemSpec spec = linreg_spec(eps, 1.0);
    for (int s = 0; s < kSeeds; ++s) {
      Rng rng(derive_seed(kBaseSeed, 400, static_cast<std::uint64_t>(s)));
      std::uniform_real_distribution<double> unit(-1.0, 1.0);
      const double lambda = 1.25 + unit(rng);
      const double anchor = 3.0 * unit(rng);
      const double bias = spec.constants.ng * std::sqrt(eps) * unit(rng);
      EnvelopeSpec env;
      env.lambda = lambda;
      env.inner.L = 1.0;
      env.inner.sigma = 1.0;
      env.inner.radiusless = true;
      const PiecewiseLinear1d f = PiecewiseLinear1d::absolute_value();
      env.inner.query = [f, bias](const Vec& theta, std::optional<double>) {
        return GradientEstimate{Vec::Constant(1, f.subgradient_low(theta(0)) + bias), theta, std::nullopt};
      };
      const Vec out = approx_moreau_minimizer(Vec::Constant(1, anchor), env, spec, 0.1);
      const double prox = std::copysign(std::max(0.0, std::abs(anchor) - lambda), anchor);
      const double ratio = std::abs(out(0) - prox) / (std::sqrt(spec.L * eps) * lambda);
      worst_ratio = std::max(worst_ratio, ratio);
      ++trials;
      if (ratio <= spec.constants.env) ++within;
    }
  }
  const bool pass = worst_identity <= 1e-9 && sandwich && within == trials;
  report(8, pass, "envelope identities hold and the approximate prox is within C_env sqrt(L eps) lambda",
         fmt("identity error %.1e, sandwich ", worst_identity) + (sandwich ? "holds" : "violated") +
             fmt("; %.0f/%.0f prox runs within, worst ratio %.2f vs C_env %.0f", within, trials, worst_ratio,
                 ProblemSpec{}.constants.env));
}

void criterion_exact_gradients() {
  int instances = 0;
  int halved = 0;
  int monotone = 0;
  for (double kappa : {4.0, 25.0, 100.0}) {
    ProblemSpec spec;
    spec.L = 1.0;
    spec.mu = 1.0 / kappa;
    spec.sigma = 0.0;
    spec.epsilon = 0.0;
    for (int s = 0; s < 20; ++s) {
      const Index d = 10;
      const Mat Q = random_rotation(d, derive_seed(kBaseSeed, 500, static_cast<std::uint64_t>(s)));
      Vec ev(d);
      for (Index j = 0; j < d; ++j) ev(j) = std::pow(kappa, -static_cast<double>(j) / static_cast<double>(d - 1));
      const Mat H = Q * ev.asDiagonal() * Q.transpose();
      Rng rng(static_cast<std::uint64_t>(s));
      std::normal_distribution<double> normal;
      Vec minimizer(d);
      for (Index j = 0; j < d; ++j) minimizer(j) = normal(rng);
      Vec random_dir(d);
      for (Index j = 0; j < d; ++j) random_dir(j) = normal(rng);
      const NgOracle oracle = make_quadratic_oracle(H, minimizer);
      const AccelDiagnostics diag{[&H, &minimizer](const Vec& t) { return 0.5 * (t - minimizer).dot(H * (t - minimizer)); },
                                  minimizer, 0.0};
      AccelOptions options;
      options.diagnostics = &diag;
      for (const Vec& dir : {Vec(random_dir.normalized()), Vec(Q.col(d - 1))}) {
        const double R = 3.0;
        const Vec anchor = minimizer + R * dir;
        AccelStats stats;
        const Vec out = half_radius_accel(anchor, R, oracle, spec, 0.1, &stats, options);
        ++instances;
        if ((out - minimizer).norm() <= 0.5 * R && stats.iterations_per_round == accel_iterations(spec)) ++halved;
        bool mono = true;
        for (std::size_t t = 1; t < stats.potential.size(); ++t)
          if (stats.potential[t] > stats.potential[t - 1] * (1.0 + 1e-12) + 1e-15) mono = false;
        if (mono) ++monotone;
      }
    }
  }
  report(9, halved == instances && monotone == instances,
         "exact-gradient accelerated steps halve the distance with a monotone potential",
         fmt("%.0f/%.0f halved, %.0f/%.0f monotone", halved, instances, monotone, instances));
}

std::string emit(const ExperimentReport& r, ReportFormat format) {
  std::ostringstream out;
  emit_report(r, format, out);
  return out.str();
}

void criterion_determinism() {
  ExperimentConfig cfg = parse_config(R"([problem]
d = 3
n = 300
[sweep]
epsilon = [0.2]
kappa = [4]
adversary = ["leverage", "label-flip"]
algorithm = ["fast-regression", "robust-accel-linreg", "robust-accel-glm", "moreau-glm", "naive-erm"]
seeds = 2
base_seed = 7
)");
  cfg.settings.trace = true;
  cfg.settings.reference_n = 5000;
  const ExperimentReport a = run_experiment(cfg);
  const ExperimentReport b = run_experiment(cfg);
  ExperimentConfig threaded = cfg;
  threaded.threads = 2;
  const ExperimentReport c = run_experiment(threaded);
  bool same = true;
  for (ReportFormat f : {ReportFormat::csv, ReportFormat::json_lines}) {
    const std::string ea = emit(a, f);
    same = same && ea == emit(b, f) && ea == emit(c, f);
  }
  same = same && a.trace == b.trace && a.trace == c.trace;
  int ok = 0;
  for (const auto& row : a.rows)
    if (row.status == "ok") ++ok;
  report(10, same, "identical seeds give byte-identical reports",
         fmt("%.0f rows over five algorithms, %.0f ok, %.0f trace lines", static_cast<double>(a.rows.size()), ok,
             static_cast<double>(a.trace.size())));
}

}  // namespace

int main() {
  const auto start = std::chrono::steady_clock::now();
  criterion_filter_contract();
  criterion_eps_sweep();
  criterion_kappa_sweep();
  criterion_call_counts();
  criterion_noisy_oracle();
  criterion_schedule();
  criterion_moreau();
  criterion_exact_gradients();
  criterion_determinism();
  report(2, audit.violations == 0 && audit.checked > 0, "every weight vector satisfies tv <= 6 eps + 2c",
         fmt("%.0f vectors checked, %.0f violations, worst margin %.2e", static_cast<double>(audit.checked),
             static_cast<double>(audit.violations), audit.worst_margin));
  std::printf("total %.1f s, %d failing\n", seconds_since(start), failures);
  return failures == 0 ? 0 : 1;
}
