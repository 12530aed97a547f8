#include "tcprobe/features.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <unordered_set>

#include "tcprobe/errors.hpp"

namespace tcprobe {

// ---------------------------------------------------------------------------
// Variants
// ---------------------------------------------------------------------------

FeatureVariant FeatureVariant::named(std::string_view name, const std::vector<int>& pooled_layers) {
  using enum Endpoint;
  if (name == "V0") return {"V0", {source, target, diff}, pooled_layers};
  if (name == "V1") return {"V1", {source, target}, pooled_layers};
  if (name == "V2") return {"V2", {target}, pooled_layers};
  if (name == "V3") return {"V3", {source, target}, {kSingleLayerAblation}};
  if (name == "V4") return {"V4", {diff}, pooled_layers};
  throw ValidationError("unknown feature variant '" + std::string(name) + "' (expected V0..V4)");
}

FeatureVariant FeatureVariant::single_layer(int layer_id) {
  return {"L" + std::to_string(layer_id), {Endpoint::source, Endpoint::target}, {layer_id}};
}

bool FeatureVariant::reversible() const {
  const bool has_source = std::find(endpoints.begin(), endpoints.end(), Endpoint::source) != endpoints.end();
  const bool has_target = std::find(endpoints.begin(), endpoints.end(), Endpoint::target) != endpoints.end();
  return has_source && has_target;
}

Json FeatureVariant::to_json() const {
  Json j = Json::object();
  j["name"] = name;
  Json ends = Json::array();
  for (auto e : endpoints) {
    ends.push_back(e == Endpoint::source ? "i" : e == Endpoint::target ? "j" : "diff");
  }
  j["endpoints"] = std::move(ends);
  j["layer_ids"] = layer_ids;
  return j;
}

// ---------------------------------------------------------------------------
// Pooling and positions
// ---------------------------------------------------------------------------

std::vector<double> pool_residual(const ActivationStore& store, std::size_t boundary,
                                  std::span<const int> layer_ids) {
  if (boundary >= store.n_boundaries) {
    throw ValidationError("pool_residual: boundary " + std::to_string(boundary) + " out of range for '" +
                          store.trajectory_id + "' (" + std::to_string(store.n_boundaries) + " boundaries)");
  }
  if (layer_ids.empty()) throw ValidationError("pool_residual: empty layer set");
  std::vector<double> sum(store.hidden_dim, 0.0);
  for (int layer : layer_ids) {
    const auto pos = store.layer_position(layer);
    if (!pos) {
      throw ValidationError("pool_residual: layer " + std::to_string(layer) + " missing from '" +
                            store.trajectory_id + "'");
    }
    const auto v = store.vector(boundary, *pos);
    for (std::size_t d = 0; d < v.size(); ++d) sum[d] += static_cast<double>(v[d]);
  }
  const double count = static_cast<double>(layer_ids.size());
  for (double& s : sum) s /= count;
  return sum;
}

PositionalFeatures positional_features(int i, int j, int n_agent) {
  return {static_cast<double>(i), static_cast<double>(j), static_cast<double>(j - i),
          static_cast<double>(n_agent), static_cast<double>(j) / static_cast<double>(n_agent)};
}

// ---------------------------------------------------------------------------
// Surface block
// ---------------------------------------------------------------------------

const std::array<std::string_view, kSurfaceWidth>& surface_feature_names() {
  static const std::array<std::string_view, kSurfaceWidth> names = {
      "lcs_len",        "lcs_frac_output", "lcs_frac_args",  "lcs_ge_4",       "lcs_ge_8",
      "lcs_ge_16",      "n_maximal_hits",  "shared_4grams",  "jaccard_4gram",  "log1p_len_output",
      "log1p_len_args", "tool_i_hash_0",   "tool_i_hash_1",  "tool_i_hash_2",  "tool_i_hash_3",
      "tool_i_hash_4",  "tool_i_hash_5",   "tool_i_hash_6",  "tool_i_hash_7",  "tool_i_hash_8",
      "tool_i_hash_9",  "tool_j_hash_0",   "tool_j_hash_1",  "tool_j_hash_2",  "tool_j_hash_3",
      "tool_j_hash_4",  "tool_j_hash_5",   "tool_j_hash_6",  "tool_j_hash_7",  "tool_j_hash_8",
      "tool_j_hash_9",  "pos_i",           "pos_j",          "pos_dist",       "pos_n_agent",
      "pos_j_frac"};
  return names;
}

std::size_t tool_hash_slot(std::string_view tool_name) {
  std::uint64_t h = 0xcbf29ce484222325ULL ^ kToolHashSeed;
  for (unsigned char c : tool_name) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return static_cast<std::size_t>(h % kToolHashSlots);
}

namespace {

std::set<std::u32string> char_ngrams(const std::u32string& s, std::size_t n) {
  std::set<std::u32string> out;
  if (s.size() < n) return out;
  for (std::size_t p = 0; p + n <= s.size(); ++p) out.insert(s.substr(p, n));
  return out;
}

}  // namespace

SurfaceFeatures surface_features(const Trajectory& traj, int i, int j) {
  const auto& ci = traj.calls.at(static_cast<std::size_t>(i));
  const auto& cj = traj.calls.at(static_cast<std::size_t>(j));
  const std::u32string out = utf8_decode(normalize_text(ci.output_text));
  const std::u32string args = utf8_decode(normalize_text(serialize_args(cj.arguments)));

  SurfaceFeatures f{};
  const auto lcs = static_cast<double>(longest_common_substring(out, args));
  f[0] = lcs;
  f[1] = lcs / static_cast<double>(std::max<std::size_t>(1, out.size()));
  f[2] = lcs / static_cast<double>(std::max<std::size_t>(1, args.size()));
  f[3] = lcs >= 4 ? 1.0 : 0.0;
  f[4] = lcs >= 8 ? 1.0 : 0.0;
  f[5] = lcs >= 16 ? 1.0 : 0.0;
  f[6] = static_cast<double>(maximal_hits(out, args).size());

  const auto grams_out = char_ngrams(out, 4);
  const auto grams_args = char_ngrams(args, 4);
  std::size_t shared = 0;
  for (const auto& g : grams_out) shared += grams_args.contains(g) ? 1 : 0;
  const std::size_t uni = grams_out.size() + grams_args.size() - shared;
  f[7] = static_cast<double>(shared);
  f[8] = uni == 0 ? 0.0 : static_cast<double>(shared) / static_cast<double>(uni);
  f[9] = std::log1p(static_cast<double>(out.size()));
  f[10] = std::log1p(static_cast<double>(args.size()));

  f[11 + tool_hash_slot(ci.tool_name)] = 1.0;
  f[11 + kToolHashSlots + tool_hash_slot(cj.tool_name)] = 1.0;

  const auto pos = positional_features(i, j, static_cast<int>(traj.n_agent()));
  std::copy(pos.begin(), pos.end(), f.begin() + 11 + 2 * kToolHashSlots);
  return f;
}

// ---------------------------------------------------------------------------
// Scaffold block
// ---------------------------------------------------------------------------

ScaffoldVocab ScaffoldVocab::fit(std::span<const std::pair<std::string, std::string>> tool_pairs) {
  ScaffoldVocab v;
  std::set<std::string> names;
  std::set<std::pair<std::string, std::string>> grams;
  for (const auto& p : tool_pairs) {
    names.insert(p.first);
    names.insert(p.second);
    grams.insert(p);
  }
  for (const auto& n : names) v.tools_.emplace(n, v.tools_.size());
  for (const auto& g : grams) v.bigrams_.emplace(g, v.bigrams_.size());
  return v;
}

std::size_t ScaffoldVocab::width() const {
  return (tools_.size() + 1) * 2 + (bigrams_.size() + 1) + 1 + kPositionalWidth;
}

std::vector<double> ScaffoldVocab::encode(std::string_view tool_i, std::string_view tool_j, int i, int j,
                                          int n_agent) const {
  std::vector<double> f(width(), 0.0);
  const std::size_t k = tools_.size();
  auto slot = [&](std::string_view name) {
    auto it = tools_.find(name);
    return it == tools_.end() ? k : it->second;
  };
  f[slot(tool_i)] = 1.0;
  f[(k + 1) + slot(tool_j)] = 1.0;
  const std::size_t bigram_base = 2 * (k + 1);
  auto it = bigrams_.find({std::string(tool_i), std::string(tool_j)});
  f[bigram_base + (it == bigrams_.end() ? bigrams_.size() : it->second)] = 1.0;
  const std::size_t tail = bigram_base + bigrams_.size() + 1;
  f[tail] = static_cast<double>(j - i);
  const auto pos = positional_features(i, j, n_agent);
  std::copy(pos.begin(), pos.end(), f.begin() + static_cast<std::ptrdiff_t>(tail + 1));
  return f;
}

std::vector<double> scaffold_features(const Trajectory& traj, int i, int j, const ScaffoldVocab& vocab) {
  return vocab.encode(traj.calls.at(static_cast<std::size_t>(i)).tool_name,
                      traj.calls.at(static_cast<std::size_t>(j)).tool_name, i, j,
                      static_cast<int>(traj.n_agent()));
}

// ---------------------------------------------------------------------------
// Datasets
// ---------------------------------------------------------------------------

std::vector<std::string> PairDataset::groups() const {
  std::vector<std::string> out;
  std::unordered_set<std::string> seen;
  for (const auto& e : examples) {
    if (seen.insert(e.group).second) out.push_back(e.group);
  }
  return out;
}

std::vector<std::size_t> PairDataset::group_index() const {
  std::map<std::string, std::size_t, std::less<>> index;
  std::vector<std::size_t> out;
  out.reserve(examples.size());
  for (const auto& e : examples) {
    auto [it, _] = index.emplace(e.group, index.size());
    out.push_back(it->second);
  }
  return out;
}

std::vector<PairExample> build_pair_features(const Trajectory& traj, const ActivationStore& store,
                                             const DependencyGraph& graph, const FeatureVariant& variant,
                                             GroupBy group_by) {
  const int n = static_cast<int>(traj.n_agent());
  if (n < 2) {
    throw ValidationError("build_pair_features: trajectory '" + traj.trajectory_id + "' has fewer than 2 calls");
  }
  if (graph.n != n) {
    throw ValidationError("build_pair_features: graph size does not match trajectory '" + traj.trajectory_id + "'");
  }
  std::vector<std::vector<double>> pooled;
  pooled.reserve(traj.calls.size());
  for (const auto& c : traj.calls) {
    pooled.push_back(pool_residual(store, static_cast<std::size_t>(c.boundary_index), variant.layer_ids));
  }
  const std::size_t d = store.hidden_dim;
  const EdgeSet transitive = graph.transitive_only();

  std::vector<PairExample> out;
  out.reserve(static_cast<std::size_t>(n * (n - 1) / 2));
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      PairExample e;
      e.group = group_by == GroupBy::task ? traj.task_id : traj.trajectory_id;
      e.trajectory_id = traj.trajectory_id;
      e.i = i;
      e.j = j;
      e.n_agent = n;
      e.label_direct = graph.has_direct(i, j);
      e.label_transitive_only = transitive.contains({i, j});
      e.hop = graph.hop_distance(i, j);
      e.tool_i = traj.calls[static_cast<std::size_t>(i)].tool_name;
      e.tool_j = traj.calls[static_cast<std::size_t>(j)].tool_name;
      const auto& hi = pooled[static_cast<std::size_t>(i)];
      const auto& hj = pooled[static_cast<std::size_t>(j)];
      e.residual.reserve(variant.width(d));
      for (auto endpoint : variant.endpoints) {
        switch (endpoint) {
          case Endpoint::source: e.residual.insert(e.residual.end(), hi.begin(), hi.end()); break;
          case Endpoint::target: e.residual.insert(e.residual.end(), hj.begin(), hj.end()); break;
          case Endpoint::diff:
            for (std::size_t k = 0; k < d; ++k) e.residual.push_back(hj[k] - hi[k]);
            break;
        }
      }
      e.positional = positional_features(i, j, n);
      e.surface = surface_features(traj, i, j);
      out.push_back(std::move(e));
    }
  }
  return out;
}

PairDataset build_dataset(std::span<const Trajectory> trajectories, std::span<const ActivationStore> stores,
                          std::span<const DependencyGraph> graphs, const FeatureVariant& variant,
                          GroupBy group_by) {
  if (trajectories.size() != stores.size() || trajectories.size() != graphs.size()) {
    throw ValidationError("build_dataset: trajectories, stores and graphs differ in length");
  }
  PairDataset ds;
  ds.variant = variant;
  for (std::size_t k = 0; k < trajectories.size(); ++k) {
    if (!trajectories[k].probeable()) continue;
    if (ds.hidden_dim == 0) ds.hidden_dim = stores[k].hidden_dim;
    if (stores[k].hidden_dim != ds.hidden_dim) {
      throw ValidationError("build_dataset: hidden_dim differs across activation stores");
    }
    auto rows = build_pair_features(trajectories[k], stores[k], graphs[k], variant, group_by);
    std::move(rows.begin(), rows.end(), std::back_inserter(ds.examples));
  }
  return ds;
}

PairExample reverse_direction(const PairExample& example, const FeatureVariant& variant, std::size_t hidden_dim) {
  if (!variant.reversible()) {
    throw ValidationError("reverse_direction: variant " + variant.name + " has no separate i and j blocks");
  }
  PairExample out = example;
  for (std::size_t b = 0; b < variant.endpoints.size(); ++b) {
    const Endpoint want = variant.endpoints[b] == Endpoint::source   ? Endpoint::target
                          : variant.endpoints[b] == Endpoint::target ? Endpoint::source
                                                                     : Endpoint::diff;
    const auto src_block = static_cast<std::size_t>(
        std::find(variant.endpoints.begin(), variant.endpoints.end(), want) - variant.endpoints.begin());
    const double sign = want == Endpoint::diff ? -1.0 : 1.0;
    for (std::size_t k = 0; k < hidden_dim; ++k) {
      out.residual[b * hidden_dim + k] = sign * example.residual[src_block * hidden_dim + k];
    }
  }
  return out;
}

void export_residual_features(const std::filesystem::path& base, const PairDataset& dataset) {
  ActivationStore block;
  block.trajectory_id = "features:" + dataset.variant.name;
  block.layer_ids = {0};
  block.n_boundaries = dataset.examples.size();
  block.hidden_dim = std::max<std::size_t>(1, dataset.residual_width());
  block.values.reserve(block.n_boundaries * block.hidden_dim);
  for (const auto& e : dataset.examples) {
    for (double v : e.residual) block.values.push_back(static_cast<float>(v));
  }
  auto tensor_path = base;
  tensor_path += ".tcpr";
  write_activations(tensor_path, block);

  Json sidecar = Json::object();
  sidecar["variant"] = dataset.variant.to_json();
  sidecar["hidden_dim"] = dataset.hidden_dim;
  sidecar["width"] = dataset.residual_width();
  sidecar["n_rows"] = dataset.examples.size();
  Json rows = Json::array();
  for (const auto& e : dataset.examples) {
    rows.push_back(Json::object({{"trajectory_id", e.trajectory_id}, {"i", e.i}, {"j", e.j},
                                 {"label_direct", e.label_direct},
                                 {"label_transitive_only", e.label_transitive_only}}));
  }
  sidecar["rows"] = std::move(rows);
  auto json_path = base;
  json_path += ".json";
  std::ofstream(json_path) << sidecar.dump(2) << '\n';
}

}  // namespace tcprobe
