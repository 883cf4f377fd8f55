#pragma once

#include "robreg/types.hpp"

#include <cstdint>
#include <random>
#include <string_view>

namespace robreg {

using Rng = std::mt19937_64;

enum class Model { linreg, linreg_weak, glm_smooth, glm_lipschitz };

std::string_view to_string(Model model);
Model parse_model(std::string_view name);
LinkKind link_for(Model model);

enum class AdversaryKind { none, leverage, gradient_alignment, label_flip };

std::string_view to_string(AdversaryKind kind);
AdversaryKind parse_adversary(std::string_view name);

// Lengths are in covariate units and label offsets in multiples of sigma unless noted.
// The leverage attack splits its budget between gross points, which sit far out along
// the weakest direction of the covariance and break plain least squares, and graded
// shadow points along the same direction whose residuals span several scales so that
// some of them always fall below whatever spectral threshold a filter uses.
struct AdversarySpec {
  AdversaryKind kind = AdversaryKind::none;
  double gross_share = 0.5;   // fraction of corrupted points that are gross
  double gross_norm = 0.5;    // gross points have norm gross_norm * sqrt(2 n L)
  double gross_shift = 100.0; // Sigma-norm offset planted by the gross labels, times sigma
  double shadow_base = 0.5;   // smallest shadow residual, times sigma * sqrt(kappa)
  double shadow_ratio = 2.0;
  int shadow_levels = 7;      // shadow residuals span shadow_ratio^shadow_levels
  double shift = 10.0;        // label offset for alignment and label flips, times sigma
};

AdversarySpec default_adversary(AdversaryKind kind);

struct GeneratorOptions {
  Index d = 10;
  double signal = 1.0;  // Sigma-norm of the true regressor
};

// Haar-distributed orthogonal matrix drawn from seed.
Mat random_rotation(Index d, std::uint64_t seed);

// Ascending geometric interpolation between mu and L.
Vec geometric_spectrum(Index d, double mu, double L);

Mat covariance_from(const Vec& spectrum, const Mat& rotation);

// Clean samples from the model with a fixed truth; used for the corrupted instance and
// for large reference samples in tests and reports.
Dataset sample_clean(const GroundTruth& truth, Model model, Index n, Rng& rng);

Dataset generate_instance(const ProblemSpec& spec, Model model, Index n,
                          const AdversarySpec& adversary, std::uint64_t seed,
                          const GeneratorOptions& options = {});

}  // namespace robreg
