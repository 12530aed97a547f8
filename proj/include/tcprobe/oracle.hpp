#pragma once

#include <compare>
#include <cstddef>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "tcprobe/trajlog.hpp"

namespace tcprobe {

/// Ordered call pair (from, to) with from < to.
struct Edge {
  int from = 0;
  int to = 0;
  auto operator<=>(const Edge&) const = default;
};

using EdgeSet = std::set<Edge>;

struct DependencyGraph {
  int n = 0;
  EdgeSet direct;
  EdgeSet closure;

  bool has_direct(int i, int j) const { return direct.contains({i, j}); }
  bool reaches(int i, int j) const { return closure.contains({i, j}); }
  /// closure minus direct: multi-hop ancestors that are not parents.
  EdgeSet transitive_only() const;
  /// Length of the shortest directed path i -> j, or 0 when unreachable.
  int hop_distance(int i, int j) const;

  static DependencyGraph from_direct(int n, EdgeSet direct);
  bool operator==(const DependencyGraph&) const = default;
};

// ---------------------------------------------------------------------------
// Text normalisation and argument serialisation
// ---------------------------------------------------------------------------

/// Decodes UTF-8 into code points. Invalid sequences become U+FFFD.
std::u32string utf8_decode(std::string_view s);
std::string utf8_encode(std::u32string_view s);

/// True for the code points Python's str.isspace() accepts.
bool is_unicode_space(char32_t c);

/// Collapses every maximal run of Unicode whitespace to one space and trims
/// both ends. Nothing else changes (no case folding, no NFC).
std::string normalize_text(std::string_view s);

/// Serialises a JSON value the way Python's json.dumps does with default
/// settings: ", " and ": " separators, keys in stored order, non-ASCII
/// escaped as \uXXXX. Throws ValidationError on non-finite numbers.
std::string serialize_args(const Json& arguments);

// ---------------------------------------------------------------------------
// Substring oracle
// ---------------------------------------------------------------------------

inline constexpr std::size_t kMinHitLength = 4;

/// A maximal common substring: output[out_pos, out_pos+length) equals some
/// substring of the arguments, and cannot be extended on either side within
/// the output while still occurring in the arguments.
struct SubstringHit {
  std::size_t out_pos = 0;
  std::size_t length = 0;
  bool operator==(const SubstringHit&) const = default;
};

/// Maximal hits of length >= min_length of `output` inside `arguments`
/// (both already normalised, as code points). Hits contained in a longer
/// retained hit are discarded.
std::vector<SubstringHit> maximal_hits(std::u32string_view output, std::u32string_view arguments,
                                       std::size_t min_length = kMinHitLength);

/// Length of the longest common substring (code points).
std::size_t longest_common_substring(std::u32string_view a, std::u32string_view b);

/// Direct edge i -> j iff a maximal hit of length >= 4 exists between the
/// normalised output of call i and the normalised serialised arguments of
/// call j. Closure is populated.
DependencyGraph substring_edges(const Trajectory& traj);

// ---------------------------------------------------------------------------
// Typed value-equality oracle
// ---------------------------------------------------------------------------

struct TypedSchema {
  std::vector<std::string> typed_key_suffixes{"_id"};
  std::vector<std::string> bare_entity_tools;

  bool is_typed_key(std::string_view key) const;
  bool is_bare_entity(std::string_view tool) const;

  static TypedSchema from_json(const Json& j);
  Json to_json() const;
};

TypedSchema load_schema(const std::filesystem::path& path);

/// Typed-ID values a call produces: strings (or integers rendered as text)
/// under typed keys anywhere in its JSON output, plus the whole output for
/// bare-entity tools. Non-JSON outputs contribute only bare-entity values.
std::set<std::string> produced_typed_values(const ToolCall& call, const TypedSchema& schema);
/// Typed-ID values passed under typed keys anywhere in a call's arguments.
std::set<std::string> consumed_typed_values(const ToolCall& call, const TypedSchema& schema);

/// Edge i -> j iff a typed value produced by i is exactly equal to a typed
/// value consumed by j. No substring containment.
DependencyGraph typed_edges(const Trajectory& traj, const TypedSchema& schema);

// ---------------------------------------------------------------------------
// Closure, agreement, minimal pairs
// ---------------------------------------------------------------------------

/// Reachability over `direct`. Throws ValidationError on an edge with
/// from >= to or an endpoint outside [0, n).
EdgeSet transitive_closure(const EdgeSet& direct, int n);

struct AgreementStats {
  double precision = 1.0;
  double recall = 1.0;
  double f1 = 1.0;
  double agreement = 1.0;
  /// Candidate edge set empty: precision reported as 1.0 by convention.
  bool precision_vacuous = false;
  /// Reference edge set empty: recall reported as 1.0 by convention.
  bool recall_vacuous = false;
  std::size_t true_positive = 0;
  std::size_t false_positive = 0;
  std::size_t false_negative = 0;
  std::size_t true_negative = 0;

  std::size_t n_pairs() const { return true_positive + false_positive + false_negative + true_negative; }
  static AgreementStats from_counts(std::size_t tp, std::size_t fp, std::size_t fn, std::size_t tn);
};

/// Precision/recall/F1 of b's direct edges against reference a, plus the
/// fraction of all i<j pairs on which the two agree.
AgreementStats oracle_agreement(const DependencyGraph& a, const DependencyGraph& b);

/// Pools the confusion counts over a corpus before computing the ratios.
AgreementStats oracle_agreement(std::span<const DependencyGraph> a, std::span<const DependencyGraph> b);

inline constexpr std::size_t kMinSharedPrefix = 2;

struct MinimalPair {
  std::string donor_id;
  std::string target_id;
  std::size_t donor_index = 0;
  std::size_t target_index = 0;
  std::size_t shared_prefix_len = 0;
  Edge differing_edge;
  /// Whether the differing edge is present in the donor's oracle DAG.
  bool donor_has_edge = false;
};

struct GraphedTrajectory {
  const Trajectory* trajectory = nullptr;
  const DependencyGraph* graph = nullptr;
};

/// Scans every trajectory pair (earlier in the corpus = donor) sharing a
/// tool-name prefix of length >= 2 whose direct edges restricted to that
/// prefix differ by exactly one edge.
std::vector<MinimalPair> select_minimal_pairs(std::span<const GraphedTrajectory> corpus);

Json graph_to_json(const std::string& trajectory_id, const DependencyGraph& g);

}  // namespace tcprobe
