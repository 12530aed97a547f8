#pragma once

// Fold kernel shared by the parallel LOGO driver and its serial reference.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <span>
#include <vector>

#include "tcprobe/evalsuite.hpp"

namespace tcprobe::detail {

struct FoldInputs {
  const PairDataset* dataset = nullptr;
  const Matrix* fixed = nullptr;
  const Matrix* reversed = nullptr;  // may be null
  const ExtraRows* extra = nullptr;  // may be null
  std::span<const std::uint8_t> labels;
  const FeatureFamily* family = nullptr;
  const LogoConfig* config = nullptr;
  const ProbeModel* warm = nullptr;
  /// Coordinates the warm start was fitted in.
  const Standardizer* warm_standardizer = nullptr;
  const Preconditioner* preconditioner = nullptr;
};

struct FoldOutput {
  std::vector<std::size_t> test_rows;
  std::vector<double> scores;
  std::vector<double> reversed;
  std::vector<std::size_t> extra_rows;
  std::vector<double> extra_scores;
  bool skipped = false;
  bool converged = true;
};

/// Fits on train_rows, scores test_rows and the extra rows of the held-out group.
FoldOutput run_fold(const FoldInputs& in, std::span<const std::size_t> train_rows,
                    std::span<const std::size_t> test_rows, std::size_t held_out_group);

/// Residual block of every row reversed; other blocks unchanged.
Matrix reversed_design(const PairDataset& dataset, const FeatureFamily& family);

struct LogoSetup {
  Matrix fixed;
  Matrix reversed;
  std::vector<std::string> group_names;
  std::vector<std::vector<std::size_t>> rows_of_group;
  std::optional<ProbeModel> warm;
  Standardizer warm_standardizer;
  std::optional<Preconditioner> preconditioner;
};

LogoSetup prepare(const PairDataset& dataset, std::span<const std::uint8_t> labels, const FeatureFamily& family,
                  const LogoConfig& config, LogoResult& res);
std::vector<std::size_t> complement_rows(const std::vector<std::vector<std::size_t>>& rows_of_group,
                                         std::size_t held_out);
void merge_fold(LogoResult& res, const FoldOutput& fold, const std::string& group_name);
void finish_auroc(LogoResult& res);

}  // namespace tcprobe::detail
