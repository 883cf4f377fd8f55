#include "robreg/errors.hpp"
#include "robreg/filter.hpp"
#include "robreg/generate.hpp"
#include "robreg/noisy_gradient.hpp"
#include "robreg/types.hpp"

#include <doctest.h>

#include <Eigen/Eigenvalues>

#include <cmath>
#include <memory>
#include <random>

using namespace robreg;

namespace {

ProblemSpec linreg_spec(double eps, double kappa, double sigma = 1.0) {
  ProblemSpec spec;
  spec.L = 1.0;
  spec.mu = 1.0 / kappa;
  spec.sigma = sigma;
  spec.epsilon = eps;
  return spec;
}

Vec random_unit(Index d, std::mt19937_64& gen) {
  std::normal_distribution<double> normal;
  Vec v(d);
  for (Index j = 0; j < d; ++j) v(j) = normal(gen);
  return v.normalized();
}

Vec residual_gradient_mean(const Dataset& data, const Vec& theta) {
  Vec g = Vec::Zero(data.d());
  for (Index i = 0; i < data.n(); ++i) {
    const Vec x = data.X.row(i).transpose();
    g += (x.dot(theta) - data.y(i)) * x;
  }
  return g / static_cast<double>(data.n());
}

double centered_top_eigenvalue(const Mat& G, const Vec& p) {
  const Vec mean = G.transpose() * p;
  const Mat centered = G.rowwise() - mean.transpose();
  const Mat cov = centered.transpose() * p.asDiagonal() * centered;
  return Eigen::SelfAdjointEigenSolver<Mat>(cov, Eigen::EigenvaluesOnly).eigenvalues().maxCoeff();
}

GradientEstimate at(double x, double y = 0.0) { return {Vec{{x, y}}, Vec::Zero(2), std::nullopt}; }

}  // namespace

TEST_CASE("clean batch gives the uniform empirical gradient") {
  const ProblemSpec spec = linreg_spec(0.0, 4.0);
  const Dataset data = generate_instance(spec, Model::linreg, 2000, AdversarySpec{}, 1);
  std::mt19937_64 gen(2);
  const Vec theta = data.truth->theta_star + 0.5 * random_unit(10, gen);
  Rng rng(3);
  const GradientEstimate est = ng_query_linreg(data, theta, 0.5, spec, 0.01, rng);
  const Vec expected = residual_gradient_mean(data, theta);
  CHECK((est.g - expected).norm() <= 1e-12 * (1.0 + expected.norm()));
  CHECK(est.theta == theta);
  REQUIRE(est.radius);
  CHECK(*est.radius == 0.5);
}

TEST_CASE("noiseless batch at the truth gives a zero gradient") {
  const ProblemSpec spec = linreg_spec(0.0, 4.0, 0.0);
  const Dataset data = generate_instance(spec, Model::linreg, 500, AdversarySpec{}, 5);
  Rng rng(0);
  const GradientEstimate est = ng_query_linreg(data, data.truth->theta_star, 1.0, spec, 0.01, rng);
  CHECK(est.g.norm() < 1e-12);
}

TEST_CASE("radiusless linear-regression query skips the filter") {
  const ProblemSpec spec = linreg_spec(0.05, 4.0);
  const Dataset data = generate_instance(spec, Model::linreg, 500, default_adversary(AdversaryKind::leverage), 6);
  const Vec theta = Vec::Zero(10);
  Rng rng(0);
  const GradientEstimate est = ng_query_linreg(data, theta, std::nullopt, spec, 0.01, rng);
  CHECK((est.g - residual_gradient_mean(data, theta)).norm() <= 1e-9 * (1.0 + est.g.norm()));
  CHECK_FALSE(est.radius);
}

TEST_CASE("leverage attack error stays within the oracle bound") {
  const ProblemSpec spec = linreg_spec(0.05, 9.0);
  int failures = 0;
  for (int seed = 0; seed < 20; ++seed) {
    const Dataset data =
        generate_instance(spec, Model::linreg, 2000, default_adversary(AdversaryKind::leverage), 900 + seed);
    std::mt19937_64 gen(seed);
    for (double R : {0.5, 4.0}) {
      const Vec theta = data.truth->theta_star + R * random_unit(10, gen);
      Rng rng(seed);
      const GradientEstimate est = ng_query_linreg(data, theta, R, spec, 0.01, rng);
      const Vec population = data.truth->sigma_star * (theta - data.truth->theta_star);
      const double bound =
          spec.constants.ng * (std::sqrt(spec.L * spec.epsilon) * spec.sigma + spec.L * std::sqrt(spec.epsilon) * R);
      if ((est.g - population).norm() > bound) ++failures;

      // A looser radius only changes the threshold, and the looser bound still holds.
      Rng rng2(seed);
      const GradientEstimate loose = ng_query_linreg(data, theta, 2.0 * R, spec, 0.01, rng2);
      const double loose_bound = spec.constants.ng * (std::sqrt(spec.epsilon) + std::sqrt(spec.epsilon) * 2.0 * R);
      if ((est.g - population).norm() <= bound) CHECK((loose.g - population).norm() <= loose_bound);
    }
  }
  CHECK(failures <= 2);
}

TEST_CASE("filtered mean is close to the good mean under the coupling bound") {
  const ProblemSpec spec = linreg_spec(0.05, 9.0);
  for (int seed = 0; seed < 5; ++seed) {
    const Dataset data =
        generate_instance(spec, Model::linreg, 2000, default_adversary(AdversaryKind::leverage), 1000 + seed);
    std::mt19937_64 gen(seed);
    const double R = 2.0;
    const Vec theta = data.truth->theta_star + R * random_unit(10, gen);
    Mat G(data.n(), data.d());
    for (Index i = 0; i < data.n(); ++i) {
      const Vec x = data.X.row(i).transpose();
      G.row(i) = ((x.dot(theta) - data.y(i)) * x).transpose();
    }
    Rng rng(seed);
    const double threshold = spec.constants.est * (spec.sigma * spec.sigma + R * R);
    const Vec w = fast_cov_filter(G, uniform_weights(data.n()), 0.01, threshold, rng);
    const Vec p = w / w.sum();
    Vec good_p = Vec::Zero(data.n());
    for (Index i : data.truth->good) good_p(i) = 1.0 / static_cast<double>(data.truth->good.size());
    const Vec mean_w = G.transpose() * p;
    const Vec mean_g = G.transpose() * good_p;
    const double bound = std::sqrt(24.0 * spec.epsilon) *
                         (std::sqrt(centered_top_eigenvalue(G, good_p)) + std::sqrt(centered_top_eigenvalue(G, p)));
    CHECK((mean_w - mean_g).norm() <= bound);
  }
}

TEST_CASE("clean GLM query is the uniform gradient plus the ridge term") {
  ProblemSpec spec = linreg_spec(0.0, 4.0);
  spec.link = LinkKind::logistic;
  const Dataset data = generate_instance(spec, Model::glm_smooth, 1000, AdversarySpec{}, 8);
  Vec theta(10);
  for (Index j = 0; j < 10; ++j) theta(j) = 0.1 * (j - 5);
  Rng rng(0);
  const GradientEstimate est = ng_query_glm(data, theta, spec, 0.01, rng);
  Vec expected = Vec::Zero(10);
  for (Index i = 0; i < data.n(); ++i) {
    const double m = data.y(i) * data.X.row(i).dot(theta);
    expected -= data.y(i) / (1.0 + std::exp(m)) * data.X.row(i).transpose();
  }
  expected = expected / static_cast<double>(data.n()) + spec.mu * theta;
  CHECK((est.g - expected).norm() <= 1e-12 * (1.0 + expected.norm()));
  CHECK_FALSE(est.radius);
}

TEST_CASE("hinge query with every margin inactive returns the ridge term") {
  ProblemSpec spec = linreg_spec(0.0, 4.0);
  spec.link = LinkKind::hinge;
  Mat X(4, 2);
  X << 1.0, 0.0, 0.0, 1.0, -1.0, 0.0, 0.0, -1.0;
  const Vec y = Vec{{1.0, 1.0, -1.0, -1.0}};
  const Dataset data(X, y);
  const Vec theta = Vec{{2.0, 3.0}};
  Rng rng(0);
  const GradientEstimate est = ng_query_glm(data, theta, spec, 0.01, rng);
  CHECK((est.g - spec.mu * theta).norm() == 0.0);
}

TEST_CASE("logistic gradient at zero is near the Monte Carlo population gradient") {
  ProblemSpec spec = linreg_spec(0.05, 4.0);
  spec.mu = 0.0;
  spec.link = LinkKind::logistic;
  const Index d = 5;
  std::mt19937_64 gen(12);
  std::normal_distribution<double> normal;
  std::bernoulli_distribution coin(0.5);
  auto clean_row = [&](Mat& X, Vec& y, Index i) {
    for (Index j = 0; j < d; ++j) X(i, j) = normal(gen) / std::sqrt(static_cast<double>(d));
    y(i) = coin(gen) ? 1.0 : -1.0;
  };
  // Population reference: half of -y x at theta = 0, averaged over a large clean sample.
  const Index big = 1000000;
  Vec reference = Vec::Zero(d);
  {
    Mat X(1, d);
    Vec y(1);
    for (Index i = 0; i < big; ++i) {
      clean_row(X, y, 0);
      reference -= 0.5 * y(0) * X.row(0).transpose();
    }
    reference /= static_cast<double>(big);
  }
  const Index n = 4000;
  const Index bad = static_cast<Index>(spec.epsilon * n);
  Mat X(n, d);
  Vec y(n);
  for (Index i = 0; i < n; ++i) clean_row(X, y, i);
  for (Index i = 0; i < bad; ++i) {
    X.row(i).setZero();
    X(i, 0) = 1.0;
    y(i) = -1.0;
  }
  Rng rng(0);
  const GradientEstimate est = ng_query_glm(Dataset(X, y), Vec::Zero(d), spec, 0.01, rng);
  const double sampling = 3.0 / std::sqrt(static_cast<double>(n));
  CHECK((est.g - reference).norm() <= spec.constants.ng * std::sqrt(spec.L * spec.epsilon) + sampling);
}

TEST_CASE("boosting returns a unanimous estimate") {
  const GradientEstimate out = boost_estimates([](int) { return at(1.0, 2.0); }, 7, 0.1);
  CHECK(out.g == Vec{{1.0, 2.0}});
}

TEST_CASE("boosting never returns an outlier") {
  const double radius = 0.5;
  auto shot = [&](int t) { return t == 0 ? at(10.0 * radius) : at(0.0); };
  const GradientEstimate out = boost_estimates(shot, 5, radius);
  CHECK(out.g.norm() == 0.0);
}

TEST_CASE("boosting with three shots returns one of the close pair") {
  auto shot = [](int t) { return t == 0 ? at(100.0) : at(static_cast<double>(t) * 0.1); };
  const GradientEstimate out = boost_estimates(shot, 3, 0.2);
  CHECK(out.g(0) == doctest::Approx(0.1));
}

TEST_CASE("boosted estimate is within the radius of a 3/5 quorum") {
  std::mt19937_64 gen(4);
  std::normal_distribution<double> normal;
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<GradientEstimate> shots;
    for (int t = 0; t < 11; ++t) shots.push_back(at(normal(gen), normal(gen)));
    const double radius = 2.5;
    try {
      const GradientEstimate out = boost_estimates([&](int t) { return shots[static_cast<std::size_t>(t)]; }, 11, radius);
      int close = 0;
      int first = -1;
      for (int t = 0; t < 11; ++t) {
        if ((shots[static_cast<std::size_t>(t)].g - out.g).norm() <= radius) ++close;
        if (first < 0 && shots[static_cast<std::size_t>(t)].g == out.g) first = t;
      }
      CHECK(5 * close >= 3 * 11);
      // Lowest-index qualifying shot wins.
      for (int t = 0; t < first; ++t) {
        int c = 0;
        for (int s = 0; s < 11; ++s)
          if ((shots[static_cast<std::size_t>(t)].g - shots[static_cast<std::size_t>(s)].g).norm() <= radius) ++c;
        CHECK(5 * c < 3 * 11);
      }
    } catch (const BoostFailure&) {
    }
  }
}

TEST_CASE("boosting failures and shot counts") {
  auto spread = [](int t) { return at(10.0 * t); };
  CHECK_THROWS_AS(boost_estimates(spread, 5, 1.0), BoostFailure);
  CHECK_THROWS_AS(boost_estimates(spread, 2, 1.0), InvalidArgument);
  CHECK(boost_shot_count(0.01) == static_cast<int>(std::ceil(9.0 * std::log(100.0))));
  CHECK(boost_shot_count(0.9) == 3);
  const ProblemSpec spec = linreg_spec(0.04, 4.0);
  CHECK(boost_radius(spec, std::nullopt) == doctest::Approx(2.0 * 4.0 * 0.2));
  CHECK(boost_radius(spec, 3.0) == doctest::Approx(2.0 * 4.0 * (0.2 + 0.2 * 3.0)));
}

TEST_CASE("boosted linear-regression oracle stays within twice the single-shot bound") {
  const ProblemSpec spec = linreg_spec(0.05, 4.0);
  auto data = std::make_shared<const Dataset>(
      generate_instance(spec, Model::linreg, 20000, default_adversary(AdversaryKind::leverage), 77));
  const NgOracle oracle = make_boosted_linreg_oracle(data, spec, 0.1, 5);
  std::mt19937_64 gen(1);
  const double R = 1.0;
  const Vec theta = data->truth->theta_star + R * random_unit(10, gen);
  const GradientEstimate est = oracle.query(theta, R);
  const Vec population = data->truth->sigma_star * (theta - data->truth->theta_star);
  CHECK((est.g - population).norm() <= 2.0 * boost_radius(spec, R));
  CHECK(est.radius == R);
}

TEST_CASE("oracles replay from the seed") {
  const ProblemSpec spec = linreg_spec(0.05, 4.0);
  auto data = std::make_shared<const Dataset>(
      generate_instance(spec, Model::linreg, 1000, default_adversary(AdversaryKind::leverage), 3));
  const NgOracle a = make_linreg_oracle(data, spec, 0.1, 9);
  const NgOracle b = make_linreg_oracle(data, spec, 0.1, 9);
  for (int k = 0; k < 3; ++k) {
    const Vec theta = Vec::Constant(10, 0.1 * k);
    CHECK(a.query(theta, 2.0).g == b.query(theta, 2.0).g);
  }
  CHECK_FALSE(a.radiusless);
  CHECK(a.sigma == spec.sigma);
}

TEST_CASE("quadratic oracle returns the exact gradient") {
  Mat H(2, 2);
  H << 3.0, 1.0, 1.0, 2.0;
  const Vec minimizer = Vec{{1.0, -1.0}};
  const NgOracle o = make_quadratic_oracle(H, minimizer);
  CHECK(o.radiusless);
  CHECK(o.L == doctest::Approx((5.0 + std::sqrt(5.0)) / 2.0));
  const Vec theta = Vec{{0.0, 0.0}};
  CHECK((o.query(theta, std::nullopt).g - H * (theta - minimizer)).norm() == 0.0);
}

TEST_CASE("query dimension is checked") {
  const ProblemSpec spec = linreg_spec(0.05, 4.0);
  const Dataset data(Mat::Identity(3, 3), Vec::Ones(3));
  Rng rng(0);
  CHECK_THROWS_AS(ng_query_linreg(data, Vec::Zero(2), 1.0, spec, 0.1, rng), InvalidArgument);
  CHECK_THROWS_AS(ng_query_linreg(data, Vec::Zero(3), -1.0, spec, 0.1, rng), InvalidArgument);
  CHECK_THROWS_AS(ng_query_glm(data, Vec::Zero(2), spec, 0.1, rng), InvalidArgument);
}
