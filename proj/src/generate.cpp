#include "robreg/generate.hpp"

#include "robreg/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace robreg {

std::string_view to_string(Model model) {
  switch (model) {
    case Model::linreg: return "linreg";
    case Model::linreg_weak: return "linreg-weak";
    case Model::glm_smooth: return "glm-smooth";
    case Model::glm_lipschitz: return "glm-lipschitz";
  }
  return "unknown";
}

Model parse_model(std::string_view name) {
  for (Model m : {Model::linreg, Model::linreg_weak, Model::glm_smooth, Model::glm_lipschitz}) {
    if (to_string(m) == name) return m;
  }
  throw InvalidArgument("unknown model: " + std::string(name));
}

LinkKind link_for(Model model) {
  switch (model) {
    case Model::glm_smooth: return LinkKind::logistic;
    case Model::glm_lipschitz: return LinkKind::hinge;
    default: return LinkKind::squared;
  }
}

std::string_view to_string(AdversaryKind kind) {
  switch (kind) {
    case AdversaryKind::none: return "none";
    case AdversaryKind::leverage: return "leverage";
    case AdversaryKind::gradient_alignment: return "gradient-alignment";
    case AdversaryKind::label_flip: return "label-flip";
  }
  return "unknown";
}

AdversaryKind parse_adversary(std::string_view name) {
  for (AdversaryKind k : {AdversaryKind::none, AdversaryKind::leverage,
                          AdversaryKind::gradient_alignment, AdversaryKind::label_flip}) {
    if (to_string(k) == name) return k;
  }
  throw InvalidArgument("unknown adversary: " + std::string(name));
}

AdversarySpec default_adversary(AdversaryKind kind) {
  AdversarySpec a;
  a.kind = kind;
  return a;
}

Mat random_rotation(Index d, std::uint64_t seed) {
  Rng rng(seed);
  std::normal_distribution<double> normal;
  Mat g(d, d);
  for (Index j = 0; j < d; ++j)
    for (Index i = 0; i < d; ++i) g(i, j) = normal(rng);
  Eigen::HouseholderQR<Mat> qr(g);
  Mat q = qr.householderQ() * Mat::Identity(d, d);
  const Mat r = qr.matrixQR();
  // Sign fix so that the distribution is Haar.
  for (Index j = 0; j < d; ++j) {
    if (r(j, j) < 0.0) q.col(j) = -q.col(j);
  }
  return q;
}

Vec geometric_spectrum(Index d, double mu, double L) {
  Vec s(d);
  if (d == 1) {
    s(0) = mu;
    return s;
  }
  const double ratio = L / mu;
  for (Index k = 0; k < d; ++k) {
    s(k) = mu * std::pow(ratio, static_cast<double>(k) / static_cast<double>(d - 1));
  }
  s(d - 1) = L;
  return s;
}

Mat covariance_from(const Vec& spectrum, const Mat& rotation) {
  Mat c = rotation * spectrum.asDiagonal() * rotation.transpose();
  return 0.5 * (c + c.transpose());
}

namespace {

double noise_draw(Model model, double sigma, Rng& rng) {
  std::normal_distribution<double> normal;
  if (model == Model::linreg_weak) {
    // Two-component scale mixture with unit variance: 0.9 * 0.5^2 + 0.1 * 7.75 = 1.
    std::bernoulli_distribution wide(0.1);
    const double scale = wide(rng) ? std::sqrt(7.75) : 0.5;
    return sigma * scale * normal(rng);
  }
  return sigma * normal(rng);
}

double sign_of(double v) { return v >= 0.0 ? 1.0 : -1.0; }

}  // namespace

Dataset sample_clean(const GroundTruth& truth, Model model, Index n, Rng& rng) {
  const Index d = truth.theta_star.size();
  std::normal_distribution<double> normal;
  const Mat rotation = random_rotation(d, truth.rotation_seed);
  const Vec root = truth.spectrum.cwiseSqrt();
  Mat z(n, d);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < d; ++j) z(i, j) = normal(rng);
  Mat X = z * root.asDiagonal() * rotation.transpose();
  const Vec signal = X * truth.theta_star;
  Vec y(n);
  for (Index i = 0; i < n; ++i) {
    switch (model) {
      case Model::linreg:
      case Model::linreg_weak:
        y(i) = signal(i) + noise_draw(model, truth.sigma, rng);
        break;
      case Model::glm_smooth: {
        std::uniform_real_distribution<double> unif(0.0, 1.0);
        const double p = 1.0 / (1.0 + std::exp(-signal(i)));
        y(i) = unif(rng) < p ? 1.0 : -1.0;
        break;
      }
      case Model::glm_lipschitz:
        y(i) = sign_of(signal(i) + truth.sigma * normal(rng));
        break;
    }
  }
  return Dataset(std::move(X), std::move(y));
}

namespace {

bool is_glm(Model model) { return model == Model::glm_smooth || model == Model::glm_lipschitz; }

void apply_leverage(Dataset& data, const GroundTruth& truth, const ProblemSpec& spec, Model model,
                    const AdversarySpec& adv) {
  const auto& bad = truth.bad;
  const Index m = static_cast<Index>(bad.size());
  const Index n = data.n();
  const Mat rotation = random_rotation(truth.theta_star.size(), truth.rotation_seed);
  const Vec u = rotation.col(0);  // weakest direction of Sigma_star
  const double mu = truth.spectrum(0);
  const double kappa = spec.kappa();
  const Index gross = std::clamp<Index>(static_cast<Index>(std::llround(adv.gross_share * m)), 0, m);
  const Index shadow = m - gross;

  const double gross_scale = adv.gross_norm * std::sqrt(2.0 * static_cast<double>(n) * spec.L);
  const double planted = adv.gross_shift * truth.sigma / std::sqrt(mu);
  // Shadow points together add mu of curvature along u.
  const double shadow_scale =
      shadow > 0 ? std::sqrt(mu * static_cast<double>(n) / static_cast<double>(shadow)) : 0.0;
  const int levels = std::max(1, adv.shadow_levels);

  for (Index k = 0; k < m; ++k) {
    const Index i = bad[k];
    const bool is_gross = k < gross;
    const double s = is_gross ? gross_scale : shadow_scale;
    data.X.row(i) = s * u.transpose();
    const double clean = s * u.dot(truth.theta_star);
    if (is_glm(model)) {
      data.y(i) = -sign_of(clean);
      continue;
    }
    if (is_gross) {
      data.y(i) = clean + s * planted;
    } else {
      // Residuals spread log-uniformly over `levels` factors of shadow_ratio.
      const double position = levels * (static_cast<double>(k - gross) + 0.5) / static_cast<double>(shadow);
      const double r = adv.shadow_base * truth.sigma * std::sqrt(kappa) * std::pow(adv.shadow_ratio, position);
      data.y(i) = clean + r;
    }
  }
}

void apply_alignment(Dataset& data, const GroundTruth& truth, Model model, const AdversarySpec& adv,
                     Rng& rng) {
  const Mat rotation = random_rotation(truth.theta_star.size(), truth.rotation_seed);
  const Vec u = rotation.col(0);
  // Fresh covariates from the clean distribution; labels chosen so that every
  // per-sample gradient at the true regressor has a positive component along u.
  GroundTruth clean_truth = truth;
  Dataset fresh = sample_clean(clean_truth, model, static_cast<Index>(truth.bad.size()), rng);
  for (std::size_t k = 0; k < truth.bad.size(); ++k) {
    const Index i = truth.bad[k];
    const Vec x = fresh.X.row(static_cast<Index>(k)).transpose();
    const double side = sign_of(x.dot(u));
    data.X.row(i) = x.transpose();
    if (is_glm(model)) {
      data.y(i) = -side;
    } else {
      data.y(i) = x.dot(truth.theta_star) - adv.shift * truth.sigma * side;
    }
  }
}

void apply_label_flip(Dataset& data, const GroundTruth& truth, Model model, const AdversarySpec& adv) {
  for (Index i : truth.bad) {
    if (is_glm(model)) {
      data.y(i) = -data.y(i);
    } else {
      data.y(i) += adv.shift * truth.sigma;
    }
  }
}

}  // namespace

Dataset generate_instance(const ProblemSpec& spec, Model model, Index n, const AdversarySpec& adversary,
                          std::uint64_t seed, const GeneratorOptions& options) {
  spec.validate();
  if (n < 1) throw InvalidArgument("n must be at least 1");
  if (options.d < 1) throw InvalidArgument("dimension must be at least 1");
  if (!(spec.epsilon < 0.5)) throw InvalidArgument("epsilon must be below 1/2");
  if (!std::isfinite(options.signal)) throw InvalidArgument("signal must be finite");
  const Index budget = static_cast<Index>(std::floor(spec.epsilon * static_cast<double>(n)));
  if (spec.epsilon > 0.0 && budget == 0) {
    throw InvalidArgument("n too small to place one corruption at this epsilon");
  }

  Rng rng(seed);
  GroundTruth truth;
  truth.rotation_seed = rng();
  truth.sigma = spec.sigma;
  truth.spectrum = geometric_spectrum(options.d, spec.mu, spec.L);
  const Mat rotation = random_rotation(options.d, truth.rotation_seed);
  truth.sigma_star = covariance_from(truth.spectrum, rotation);

  std::normal_distribution<double> normal;
  Vec z(options.d);
  for (Index j = 0; j < options.d; ++j) z(j) = normal(rng);
  const double snorm = std::sqrt(z.dot(truth.sigma_star * z));
  truth.theta_star = options.signal * z / snorm;

  Dataset data = sample_clean(truth, model, n, rng);

  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  const AdversaryKind kind = budget > 0 ? adversary.kind : AdversaryKind::none;
  if (kind != AdversaryKind::none) {
    std::shuffle(order.begin(), order.end(), rng);
    truth.bad.assign(order.begin(), order.begin() + budget);
    std::sort(truth.bad.begin(), truth.bad.end());
  }
  std::vector<bool> is_bad(static_cast<std::size_t>(n), false);
  for (Index i : truth.bad) is_bad[static_cast<std::size_t>(i)] = true;
  for (Index i = 0; i < n; ++i) {
    if (!is_bad[static_cast<std::size_t>(i)]) truth.good.push_back(i);
  }

  switch (kind) {
    case AdversaryKind::none: break;
    case AdversaryKind::leverage: apply_leverage(data, truth, spec, model, adversary); break;
    case AdversaryKind::gradient_alignment: apply_alignment(data, truth, model, adversary, rng); break;
    case AdversaryKind::label_flip: apply_label_flip(data, truth, model, adversary); break;
  }
  data.truth = std::move(truth);
  return data;
}

}  // namespace robreg
