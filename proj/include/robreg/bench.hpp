#pragma once

#include "robreg/generate.hpp"
#include "robreg/types.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace robreg {

enum class Algorithm { fast_regression, robust_accel_linreg, robust_accel_glm, moreau_glm, naive_erm };

std::string_view to_string(Algorithm algorithm);
Algorithm parse_algorithm(std::string_view name);

enum class RunStatus { ok, phase_failure, boost_failure, diverged };

std::string_view to_string(RunStatus status);
RunStatus parse_status(std::string_view name);

enum class ReportFormat { csv, json_lines };

std::string_view to_string(ReportFormat format);
ReportFormat parse_format(std::string_view name);

// Settings shared by the sweep driver and the single-run CLI path.
struct RunSettings {
  double delta = 0.1;
  double lambda_env = 0.5;     // envelope parameter for moreau-glm
  double signal = 1.0;         // Sigma-norm of the planted regressor; bounds the linreg start radius
  Index reference_n = 20000;   // clean sample size for the GLM reference minimizer
  Model naive_model = Model::linreg;
  bool timing = false;         // wall_ms stays 0 unless set, keeping reports byte-stable
  bool trace = false;
};

struct ExperimentConfig {
  Index d = 10;
  Index n = 2000;
  double L = 1.0;
  double sigma = 1.0;
  std::vector<double> epsilons;
  std::vector<double> kappas;
  std::vector<AdversaryKind> adversaries;
  std::vector<Algorithm> algorithms;
  int seeds = 1;
  std::uint64_t base_seed = 0;
  AdversarySpec adversary_overrides;  // kind is ignored; every other knob applies to all adversaries
  Constants constants;
  RunSettings settings;
  std::map<std::string, double> tolerances;
  std::filesystem::path output_path = "report.csv";
  ReportFormat format = ReportFormat::csv;
  int threads = 1;

  // Throws ConfigError (line 0) when an invariant fails.
  void validate() const;
};

// TOML sections [problem] [sweep] [adversary] [constants] [tolerances] [output].
// Every error carries the offending line number.
ExperimentConfig parse_config(std::string_view text);
ExperimentConfig load_config(const std::filesystem::path& path);

struct ReportRow {
  std::string algorithm;
  double epsilon = 0.0;
  double kappa = 0.0;
  std::string adversary;
  int seed = 0;
  std::string metric;  // "mahalanobis" or "l2"
  double error = 0.0;  // NaN for failed runs
  long long oracle_calls = 0;
  long long erm_calls = 0;
  double wall_ms = 0.0;
  std::string status;
};

struct SummaryRow {
  std::string algorithm;
  double epsilon = 0.0;
  double kappa = 0.0;
  std::string adversary;
  int ok = 0;             // rows with status ok
  double median = 0.0;    // over ok rows; NaN when none
  double iqr = 0.0;
};

struct ExperimentReport {
  std::vector<ReportRow> rows;
  std::vector<SummaryRow> summary;
  std::vector<std::string> trace;  // CSV trace lines when tracing is on, in row order
};

// Median and interquartile range per (algorithm, epsilon, kappa, adversary), in first-seen order.
std::vector<SummaryRow> summarize(const std::vector<ReportRow>& rows);

// Linearly interpolated quantile of an unsorted sample; q in [0, 1].
double quantile(std::vector<double> values, double q);

// Throws InvalidArgument on an empty report before touching the output.
void emit_report(const ExperimentReport& report, ReportFormat format, std::ostream& out);
void emit_report(const ExperimentReport& report, ReportFormat format, const std::filesystem::path& path);
ExperimentReport parse_report(std::istream& in, ReportFormat format);

// Deterministic seed for (base, cell, seed index).
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t cell, std::uint64_t seed_index);

struct AlgorithmOutcome {
  Vec theta;
  RunStatus status = RunStatus::ok;
  std::string message;
  long long oracle_calls = 0;
  long long erm_calls = 0;
  std::vector<std::string> warnings;
  std::vector<std::string> trace;  // "stage,phase,step,value,error" lines
};

// Runs one algorithm on a dataset. Failures are reported through the status, never thrown,
// except for InvalidArgument on inputs the algorithm cannot accept.
AlgorithmOutcome run_algorithm(Algorithm algorithm, const Dataset& data, const ProblemSpec& spec,
                               const RunSettings& settings, std::uint64_t seed);

// Model generated for an algorithm: linreg for the regression paths, logistic for
// robust-accel-glm, hinge for moreau-glm and the configured model for naive-erm.
Model model_for(Algorithm algorithm, const RunSettings& settings);

// Error of theta against the ground truth: Sigma-norm for linear models, Euclidean distance
// to the regularized population minimizer for GLMs (estimated from a clean reference sample).
struct ErrorMeasure {
  std::string metric;
  double value = 0.0;
};
ErrorMeasure measure_error(const Vec& theta, const GroundTruth& truth, Model model, const ProblemSpec& spec,
                           const RunSettings& settings, std::uint64_t seed);

// Full sweep. Cells run in parallel when threads > 1; rows are emitted in cell-major order.
ExperimentReport run_experiment(const ExperimentConfig& config);

}  // namespace robreg
