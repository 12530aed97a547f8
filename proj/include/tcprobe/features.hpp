#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tcprobe/oracle.hpp"
#include "tcprobe/trajlog.hpp"

namespace tcprobe {

/// Layer set pooled by the canonical probe input.
inline const std::vector<int> kDefaultLayers{0, 14, 28, 41, 50, 57, 64};
/// Layer used by the single-layer ablation (V3).
inline constexpr int kSingleLayerAblation = 41;

enum class Endpoint { source, target, diff };

/// Which pooled boundary vectors are concatenated, and over which layers.
///   V0: [src; tgt; tgt - src]   V1: [src; tgt]   V2: [tgt]
///   V3: [src; tgt] at layer 41  V4: [tgt - src]
struct FeatureVariant {
  std::string name;
  std::vector<Endpoint> endpoints;
  std::vector<int> layer_ids;

  static FeatureVariant named(std::string_view name, const std::vector<int>& pooled_layers = kDefaultLayers);
  /// [src; tgt] from one layer; used by per-layer profiles.
  static FeatureVariant single_layer(int layer_id);

  std::size_t width(std::size_t hidden_dim) const { return endpoints.size() * hidden_dim; }
  /// Has distinct source and target blocks, so it can be direction-reversed.
  bool reversible() const;
  Json to_json() const;
};

/// Mean over the selected layers of one boundary's vectors, accumulated in
/// double precision.
std::vector<double> pool_residual(const ActivationStore& store, std::size_t boundary,
                                  std::span<const int> layer_ids);

inline constexpr std::size_t kPositionalWidth = 5;
using PositionalFeatures = std::array<double, kPositionalWidth>;

/// [i, j, j - i, n_agent, j / n_agent].
PositionalFeatures positional_features(int i, int j, int n_agent);

// ---------------------------------------------------------------------------
// Surface-form features (fixed 36-wide layout)
// ---------------------------------------------------------------------------

inline constexpr std::size_t kSurfaceWidth = 36;
inline constexpr std::size_t kToolHashSlots = 10;
inline constexpr std::uint64_t kToolHashSeed = 0x7463'7072'6f62'6531ULL;
using SurfaceFeatures = std::array<double, kSurfaceWidth>;

/// Column names of the surface block, in layout order.
const std::array<std::string_view, kSurfaceWidth>& surface_feature_names();

/// Seeded FNV-1a, bucketed into kToolHashSlots.
std::size_t tool_hash_slot(std::string_view tool_name);

/// Text-overlap statistics between normalize_text(output_i) and
/// normalize_text(serialize_args(call j)), hashed tool names, positions.
SurfaceFeatures surface_features(const Trajectory& traj, int i, int j);

// ---------------------------------------------------------------------------
// Scaffold features (tool identity, bigram, distance, positions)
// ---------------------------------------------------------------------------

/// Tool-name and bigram vocabularies fitted on a training fold. Unseen names
/// and bigrams map to a trailing out-of-vocabulary slot in their block.
class ScaffoldVocab {
 public:
  ScaffoldVocab() = default;

  /// Fits on (source tool, target tool) name pairs.
  static ScaffoldVocab fit(std::span<const std::pair<std::string, std::string>> tool_pairs);

  std::size_t n_tools() const { return tools_.size(); }
  std::size_t n_bigrams() const { return bigrams_.size(); }
  /// (k + 1) + (k + 1) + (b + 1) + 1 + 5.
  std::size_t width() const;

  std::vector<double> encode(std::string_view tool_i, std::string_view tool_j, int i, int j, int n_agent) const;

 private:
  std::map<std::string, std::size_t, std::less<>> tools_;
  std::map<std::pair<std::string, std::string>, std::size_t> bigrams_;
};

std::vector<double> scaffold_features(const Trajectory& traj, int i, int j, const ScaffoldVocab& vocab);

// ---------------------------------------------------------------------------
// Pair datasets
// ---------------------------------------------------------------------------

enum class GroupBy { trajectory, task };

struct PairExample {
  std::string group;
  std::string trajectory_id;
  int i = 0;
  int j = 0;
  int n_agent = 0;
  bool label_direct = false;
  bool label_transitive_only = false;
  /// Shortest-path length in the oracle DAG, 0 when j is not reachable.
  int hop = 0;
  std::string tool_i;
  std::string tool_j;
  std::vector<double> residual;
  PositionalFeatures positional{};
  SurfaceFeatures surface{};
};

struct PairDataset {
  FeatureVariant variant;
  std::size_t hidden_dim = 0;
  std::vector<PairExample> examples;

  std::size_t residual_width() const { return variant.width(hidden_dim); }
  /// Distinct group keys in first-appearance order.
  std::vector<std::string> groups() const;
  /// Group index of every example, aligned with groups().
  std::vector<std::size_t> group_index() const;
};

/// One example per ordered pair i < j. Requires n_agent >= 2.
std::vector<PairExample> build_pair_features(const Trajectory& traj, const ActivationStore& store,
                                             const DependencyGraph& graph, const FeatureVariant& variant,
                                             GroupBy group_by = GroupBy::trajectory);

PairDataset build_dataset(std::span<const Trajectory> trajectories, std::span<const ActivationStore> stores,
                          std::span<const DependencyGraph> graphs, const FeatureVariant& variant,
                          GroupBy group_by = GroupBy::trajectory);

/// Swaps the source and target residual blocks (a diff block changes sign).
/// Labels and the other feature blocks are unchanged.
PairExample reverse_direction(const PairExample& example, const FeatureVariant& variant, std::size_t hidden_dim);

/// Writes <base>.tcpr (rows x 1 x width float32) and a <base>.json sidecar.
void export_residual_features(const std::filesystem::path& base, const PairDataset& dataset);

}  // namespace tcprobe
