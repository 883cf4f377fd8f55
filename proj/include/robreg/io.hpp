#pragma once

#include "robreg/types.hpp"

#include <filesystem>
#include <iosfwd>

namespace robreg {

// Header `y,x1,...,xd`, one row per sample.
void write_dataset_csv(const Dataset& data, std::ostream& out);
Dataset read_dataset_csv(std::istream& in);

// Sidecar carrying the ground truth and the problem parameters used to generate it.
// Sigma_star is stored as spectrum plus rotation seed and rebuilt on load.
void write_truth_json(const GroundTruth& truth, const ProblemSpec& spec, std::ostream& out);
GroundTruth read_truth_json(std::istream& in, Index n, ProblemSpec* spec = nullptr);

void save_dataset(const Dataset& data, const std::filesystem::path& csv_path);
Dataset load_dataset(const std::filesystem::path& csv_path);

}  // namespace robreg
