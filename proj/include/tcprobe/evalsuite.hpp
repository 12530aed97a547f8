#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "tcprobe/features.hpp"
#include "tcprobe/oracle.hpp"
#include "tcprobe/parallel.hpp"
#include "tcprobe/probe.hpp"
#include "tcprobe/rng.hpp"
#include "tcprobe/stats.hpp"

namespace tcprobe {

enum class Task { direct, transitive_only };

std::string_view to_string(Task t);
Task task_from_string(std::string_view s);

std::vector<std::uint8_t> task_labels(const PairDataset& dataset, Task task);

/// Union of feature blocks fed to one probe, e.g. "residual+positional".
struct FeatureFamily {
  bool residual = false;
  bool positional = false;
  bool scaffold = false;
  bool surface = false;

  static FeatureFamily parse(std::string_view spec);
  static FeatureFamily residual_only() { return {true, false, false, false}; }
  static FeatureFamily positional_only() { return {false, true, false, false}; }
  FeatureFamily operator|(const FeatureFamily& o) const {
    return {residual || o.residual, positional || o.positional, scaffold || o.scaffold, surface || o.surface};
  }
  bool empty() const { return !residual && !positional && !scaffold && !surface; }
  std::string name() const;
};

/// Design matrix of every block except scaffold, whose vocabulary is fold-fitted.
Matrix fixed_design(const PairDataset& dataset, const FeatureFamily& family);

/// Trajectories with their activations and oracle graphs, index-aligned.
struct Corpus {
  std::vector<Trajectory> trajectories;
  std::vector<ActivationStore> stores;
  std::vector<DependencyGraph> graphs;

  std::size_t size() const { return trajectories.size(); }
  PairDataset dataset(const FeatureVariant& variant, GroupBy group_by = GroupBy::trajectory) const;
  std::vector<GraphedTrajectory> graphed() const;
};

// ---------------------------------------------------------------------------
// LOGO cross-validation
// ---------------------------------------------------------------------------

struct LogoConfig {
  ProbeConfig probe;
  /// Start every fold from the all-rows optimum. The objective is strictly
  /// convex, so only the iteration count changes.
  bool warm_start = true;
  /// Use the all-rows Hessian as the initial inverse-curvature guess in
  /// every fold. Requires warm_start.
  bool precondition = true;
  /// Also score each held-out row on direction-reversed residual features.
  bool score_reversed = false;
  Exec exec;
};

/// Rows outside the dataset scored by the fold model that held out their group.
struct ExtraRows {
  Matrix fixed;
  std::vector<std::size_t> group;  // index into dataset.groups(); npos = never scored
};

struct LogoResult {
  std::vector<double> oof_scores;
  std::vector<double> reversed_scores;
  std::vector<double> extra_scores;
  std::vector<std::uint8_t> labels;
  std::vector<std::size_t> group_of_row;
  /// Rows that received an out-of-fold score (false only in skipped folds).
  std::vector<std::uint8_t> scored;
  std::size_t n_folds = 0;
  std::vector<std::string> skipped_groups;
  std::size_t nonconverged_folds = 0;
  double auroc = 0.5;
  bool auroc_defined = false;

  /// Scored rows only.
  std::vector<double> scored_values(std::span<const double> v) const;
  std::vector<std::uint8_t> scored_labels() const;
  std::vector<std::size_t> scored_groups() const;
};

LogoResult logo_cv(const PairDataset& dataset, std::span<const std::uint8_t> labels, const FeatureFamily& family,
                   const LogoConfig& config, const ExtraRows* extra = nullptr);

/// Same computation, plain serial loops; kept as the reference for tests and
/// benchmarks.
LogoResult logo_cv_reference(const PairDataset& dataset, std::span<const std::uint8_t> labels,
                             const FeatureFamily& family, const LogoConfig& config);

/// Probe plus standardiser fitted on every row (no held-out data).
struct FittedProbe {
  Standardizer standardizer;
  ProbeModel model;
};
FittedProbe fit_full(const Matrix& X, std::span<const std::uint8_t> labels, const ProbeConfig& config);

struct EvalReport {
  Task task = Task::direct;
  std::string family;
  std::string variant;
  std::size_t n_pairs = 0;
  std::size_t n_positive = 0;
  std::size_t n_groups = 0;
  bool testable = true;
  std::string untestable_reason;
  LogoResult logo;
  std::optional<BootstrapResult> ci;
  std::optional<PermutationNull> permutation;

  Json to_json() const;
};

struct EvalOptions {
  LogoConfig logo;
  std::size_t n_resamples = 2000;
  std::size_t n_perms = 0;
  std::uint64_t seed = 42;
};

/// LOGO AUROC with a group BCa interval and, when n_perms > 0, the
/// permutation control. Zero positives or negatives yields an untestable report.
EvalReport evaluate(const PairDataset& dataset, Task task, const FeatureFamily& family, const EvalOptions& options);

struct ConditionalGap {
  std::string baseline;
  std::string residual;
  LogoResult baseline_run;
  LogoResult joint_run;
  LogoResult residual_run;
  PairedDelta delta;

  Json to_json() const;
};

/// joint (baseline + residual) minus baseline, with a paired group bootstrap.
ConditionalGap conditional_gap(const PairDataset& dataset, Task task, const FeatureFamily& residual,
                               const FeatureFamily& baseline, const EvalOptions& options);

struct LayerProfileEntry {
  int layer = 0;
  double raw_auroc = 0.5;
  double resolved_auroc = 0.5;
  bool flipped = false;
};

std::vector<LayerProfileEntry> per_layer_profile(const Corpus& corpus, std::span<const int> layer_ids, Task task,
                                                 GroupBy group_by, const LogoConfig& config);

// ---------------------------------------------------------------------------
// Decoding and symmetric differences
// ---------------------------------------------------------------------------

struct F1Cut {
  double threshold = 0.0;
  double f1 = 0.0;
};

/// Candidates are the distinct scores plus max + 1; the lowest threshold
/// attaining the best F1 wins.
F1Cut f1_threshold(std::span<const double> scores, std::span<const std::uint8_t> labels);

struct DecodedGraph {
  DependencyGraph graph;
  bool acyclic = true;
};

/// Kahn's algorithm over the edge set, independent of index order.
bool is_acyclic(int n, const EdgeSet& edges);

/// Edge (i, j) iff score >= threshold. `pair_scores` lists the n(n-1)/2
/// pairs i < j in row-major order.
DecodedGraph decode_dag(int n, std::span<const double> pair_scores, double threshold);

/// |a xor b| over pairs i < j < n_space.
std::size_t symmetric_difference(const EdgeSet& a, const EdgeSet& b, int n_space);

enum class SDMode { decoded_vs_oracle, plan_shift };

/// One side of a counterfactual pair after decoding.
struct DecodedTrajectory {
  const Trajectory* trajectory = nullptr;
  const DependencyGraph* oracle = nullptr;
  DecodedGraph decoded;
};

struct SDStats {
  SDMode mode = SDMode::decoded_vs_oracle;
  std::vector<std::size_t> sd_clean;
  std::vector<std::size_t> sd_counterpart;
  /// Per pair: counterpart - clean (decoded_vs_oracle) or the plan-shift SD.
  std::vector<double> shift;
  double median_clean = 0.0;
  double median_counterpart = 0.0;
  double mean_shift = 0.0;
  double frac_nonzero = 0.0;
  WilcoxonResult wilcoxon;
  CohensD cohens_d;
  /// SD as a score for "is counterpart"; the reverse orientation is 1 - this.
  std::optional<double> drift_auroc;
  bool all_acyclic = true;

  Json to_json() const;
};

SDStats compare_paired_sd(std::span<const std::pair<DecodedTrajectory, DecodedTrajectory>> pairs, SDMode mode);

struct TransitiveConsistency {
  double observed = 0.0;
  double independence_null = 0.0;
  std::size_t n_triples = 0;
  std::size_t n_closed = 0;
  bool defined = false;
  WilcoxonResult wilcoxon;

  Json to_json() const;
};

inline constexpr std::size_t kIndependenceDraws = 10000;

/// P(i->k | i->j and j->k) pooled over triples, against per-trajectory
/// independent edges at the same edge rate.
TransitiveConsistency transitive_consistency(std::span<const DependencyGraph> decoded, std::uint64_t seed,
                                             std::size_t n_draws = kIndependenceDraws);

struct CorpusDecode {
  F1Cut cut;
  LogoResult logo;
  std::vector<std::string> trajectory_ids;
  std::vector<DecodedGraph> decoded;
  /// Decoded direct edges against the oracle's, per trajectory.
  std::vector<std::size_t> sd_to_oracle;
  double median_sd = 0.0;
  double frac_acyclic = 1.0;
  TransitiveConsistency consistency;
  Json to_json() const;
};

/// LOGO scores on every pair, one global F1-optimal cut, one decoded graph per
/// trajectory whose folds all ran.
CorpusDecode decode_corpus(const Corpus& corpus, const FeatureVariant& variant, const FeatureFamily& family,
                           const LogoConfig& config, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Counterfactual transforms
// ---------------------------------------------------------------------------

struct CorruptionResult {
  Trajectory trajectory;
  bool hit = false;
  /// Whether any field was changed at all.
  bool changed = false;
  std::string field_path;
};

/// At call n_agent / 2, flips 2-3 alphanumeric characters of one string value
/// under an "_id"-suffixed key of the output JSON, preferring values that a
/// downstream oracle edge consumes.
CorruptionResult corrupt_id_field(const Trajectory& traj, const DependencyGraph& oracle, Rng& rng);

/// Replaces the tool response at call n_agent / 2 with "{}".
Trajectory skip_tool_rewrite(const Trajectory& traj);



// ---------------------------------------------------------------------------
// Stratification
// ---------------------------------------------------------------------------

struct Stratum {
  std::string name;
  std::size_t n = 0;
  std::size_t n_positive = 0;
  std::optional<double> auroc;
};

struct StrataReport {
  std::vector<Stratum> hop;
  std::vector<Stratum> length;
  std::vector<Stratum> tool_pair;
  /// Pair-weighted mean of the defined tool-pair AUROCs.
  std::optional<double> within_tool_pair_auroc;
  std::size_t n_tool_pair_strata = 0;
  std::optional<double> forward_auroc;
  std::optional<double> reversed_auroc;

  Json to_json() const;
};

/// Hop strata score reachability (hop >= 1) against unreachable pairs; the
/// other strata use `labels`. Reversal numbers come from `reversed_scores`
/// when non-empty.
StrataReport stratified_report(const PairDataset& dataset, std::span<const std::uint8_t> labels,
                               std::span<const double> scores, std::span<const double> reversed_scores = {});

// ---------------------------------------------------------------------------
// Feature-level patching
// ---------------------------------------------------------------------------

struct PatchResult {
  int layer = 0;
  std::vector<double> per_pair_delta;
  double mean = 0.0;
  BootstrapResult ci;
  double frac_toward_donor = 0.0;
  /// The layer is not pooled by the probe's variant, so no patch can move it.
  bool structural_zero = false;

  Json to_json() const;
};

/// Swaps layer `layer` of the target's call-i boundary for the donor's,
/// re-pools, rescores (i, j), and signs the shift toward the donor's oracle.
PatchResult patch_estimate(std::span<const MinimalPair> pairs, const Corpus& corpus, const FittedProbe& probe,
                           const FeatureVariant& variant, int layer, std::size_t n_resamples, std::uint64_t seed,
                           const Exec& exec = {});

// ---------------------------------------------------------------------------
// Cross-corpus sweep
// ---------------------------------------------------------------------------

struct SweepConfig {
  std::size_t min_transitive_positives = 30;
  std::size_t min_groups = 15;
  double position_trivial_baseline = 0.85;
  EvalOptions eval;
};

struct NamedDataset {
  std::string name;
  PairDataset dataset;
};

struct SweepRow {
  std::string name;
  std::size_t n_groups = 0;
  std::size_t n_pairs = 0;
  std::size_t n_direct_positive = 0;
  std::size_t n_transitive_positive = 0;
  std::optional<double> direct_auroc;
  std::optional<double> transitive_auroc;
  std::optional<double> baseline_auroc;
  std::optional<PairedDelta> delta;
  bool underpowered = false;
  bool position_trivial = false;
};

struct SweepTable {
  std::vector<SweepRow> rows;
  /// Spearman rho between baseline AUROC and delta over viable rows.
  std::optional<double> spearman_rho;

  Json to_json() const;
  std::string to_csv() const;
};

SweepTable benchmark_sweep(std::span<const NamedDataset> corpora, const SweepConfig& config);

// ---------------------------------------------------------------------------
// Counterfactual pipeline
// ---------------------------------------------------------------------------

struct CounterfactualReport {
  std::size_t n_pairs = 0;
  std::vector<std::string> excluded_task_ids;
  double threshold = 0.5;
  SDStats decoded_vs_oracle;
  SDStats plan_shift;

  Json to_json() const;
};

/// Trains LOGO probes on the clean corpus (grouped by task), scores every
/// counterpart with the fold model that held out its task, decodes both sides
/// at the clean F1-optimal cut and compares SDs.
CounterfactualReport counterfactual_analysis(const Corpus& clean, const Corpus& counterpart,
                                             const FeatureVariant& variant, const FeatureFamily& family,
                                             const LogoConfig& config);

}  // namespace tcprobe
