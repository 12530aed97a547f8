#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tcprobe/parallel.hpp"
#include "tcprobe/trajlog.hpp"

namespace tcprobe {

/// Average ranks (1-based), ties share the mean of their positions.
std::vector<double> midranks(std::span<const double> values);

/// P(score of a random positive > score of a random negative), ties 0.5.
/// Throws SingleClassError when one class is absent.
double auroc(std::span<const double> scores, std::span<const std::uint8_t> labels);

/// Pearson correlation of midranks; NaN when either side is constant or n < 2.
double spearman_rho(std::span<const double> x, std::span<const double> y);

// ---------------------------------------------------------------------------
// Bootstrap
// ---------------------------------------------------------------------------

enum class BootstrapMethod { bca, percentile_paired };

struct BootstrapResult {
  double point = 0.0;
  double lo = 0.0;
  double hi = 0.0;
  std::size_t n_resamples = 0;
  /// Resamples whose statistic was defined (single-class draws are dropped).
  std::size_t n_valid = 0;
  BootstrapMethod method = BootstrapMethod::bca;
  std::string resample_unit = "group";
  /// Every resample produced the same value; the interval is [point, point].
  bool degenerate = false;
  double z0 = 0.0;
  double acceleration = 0.0;
  std::vector<double> resamples;

  bool contains(double v) const { return lo <= v && v <= hi; }
  Json to_json() const;
};

/// Statistic over a multiset of group indices (a resample or a jackknife
/// subset). May return NaN when undefined on that draw.
using GroupStatistic = std::function<double(std::span<const std::size_t> groups)>;

/// Group-level BCa interval. Resample b draws n_groups groups with
/// replacement from Rng(derive_seed(seed, b)); acceleration comes from the
/// leave-one-group-out jackknife. Requires n_groups >= 2.
BootstrapResult bca_ci(std::size_t n_groups, const GroupStatistic& statistic, std::size_t n_resamples,
                       std::uint64_t seed, const Exec& exec = {}, double level = 0.95);

/// Plain percentile interval from the same resampling scheme, for cross-checks.
BootstrapResult percentile_ci(std::size_t n_groups, const GroupStatistic& statistic, std::size_t n_resamples,
                              std::uint64_t seed, const Exec& exec = {}, double level = 0.95);

/// Rows of each group, with groups indexed 0..n_groups-1.
std::vector<std::vector<std::size_t>> rows_by_group(std::span<const std::size_t> group_of_row);

/// AUROC over the rows of a multiset of groups; NaN when single-class.
double grouped_auroc(std::span<const double> scores, std::span<const std::uint8_t> labels,
                     const std::vector<std::vector<std::size_t>>& rows_of_group,
                     std::span<const std::size_t> groups);

struct PairedDelta {
  BootstrapResult delta;
  double auroc_a = 0.0;
  double auroc_b = 0.0;
  /// Fraction of valid resamples with AUROC(a) - AUROC(b) <= 0.
  double p_delta_le_0 = 0.0;
  std::size_t count_delta_le_0 = 0;

  Json to_json() const;
};

/// Resamples groups jointly and recomputes both AUROCs on each draw.
PairedDelta paired_bootstrap_delta(std::span<const double> scores_a, std::span<const double> scores_b,
                                   std::span<const std::uint8_t> labels, std::span<const std::size_t> group_of_row,
                                   std::size_t n_resamples, std::uint64_t seed, const Exec& exec = {});

// ---------------------------------------------------------------------------
// Permutation control
// ---------------------------------------------------------------------------

struct PermutationNull {
  double observed = 0.0;
  std::vector<double> null_values;
  std::size_t n_perms = 0;
  std::size_t count_ge = 0;
  /// count(null >= observed) / n_perms.
  double p_value = 1.0;
  /// (count + 1) / (n_perms + 1); never below 1 / (n_perms + 1).
  double p_smoothed = 1.0;
  double null_mean = 0.0;
  double null_max = 0.0;

  Json to_json() const;
};

/// Pipeline mapping a label vector to an evaluation statistic (e.g. the
/// out-of-fold AUROC of a full LOGO run).
using LabelPipeline = std::function<double(std::span<const std::uint8_t> labels)>;

/// Permutation p shuffles the whole label pool with Rng(seed + p) and reruns
/// the pipeline from scratch.
PermutationNull permutation_control(std::span<const std::uint8_t> labels, const LabelPipeline& pipeline,
                                    std::size_t n_perms, std::uint64_t seed, const Exec& exec = {},
                                    std::optional<double> observed = std::nullopt);

// ---------------------------------------------------------------------------
// Paired tests and effect sizes
// ---------------------------------------------------------------------------

inline constexpr std::size_t kWilcoxonExactMax = 15;

struct WilcoxonResult {
  double w_plus = 0.0;
  std::size_t n_used = 0;
  std::size_t n_zero = 0;
  /// P(W+ >= observed): evidence that differences are positive.
  double p_greater = 1.0;
  double p_less = 1.0;
  double p_two_sided = 1.0;
  bool exact = false;
  /// Every difference was zero.
  bool degenerate = false;

  Json to_json() const;
};

/// Zeros dropped, midranks on ties; exact sign enumeration up to 15
/// non-zero differences, tie- and continuity-corrected normal beyond.
WilcoxonResult wilcoxon_signed_rank(std::span<const double> diffs);

struct CohensD {
  double d = 0.0;
  double lo = 0.0;
  double hi = 0.0;
  double se = 0.0;
  std::size_t n = 0;
  /// False when the sample sd is zero (or n < 2); d is then reported as 0.
  bool defined = false;

  Json to_json() const;
};

/// mean / sample sd, with the paired d_z standard error sqrt(1/n + d^2 / 2n).
CohensD cohens_d_paired(std::span<const double> diffs);

struct FisherResult {
  double p_value = 1.0;
  double p_less = 1.0;
  double p_greater = 1.0;
  bool degenerate = false;
};

/// Two-sided exact test on [[a, b], [c, d]]: sums the probability of every
/// table with the observed margins that is no more likely than the observed.
FisherResult fisher_exact_2x2(const std::array<std::array<std::uint64_t, 2>, 2>& table);

double normal_cdf(double z);
double normal_quantile(double p);

/// One value per line under a header.
void write_values_csv(const std::filesystem::path& path, const std::string& header, std::span<const double> values);

}  // namespace tcprobe
