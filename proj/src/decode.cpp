#include <algorithm>
#include <map>
#include <cmath>
#include <numeric>
#include <queue>

#include "tcprobe/errors.hpp"
#include "tcprobe/evalsuite.hpp"

namespace tcprobe {

F1Cut f1_threshold(std::span<const double> scores, std::span<const std::uint8_t> labels) {
  if (scores.size() != labels.size()) throw ValidationError("f1_threshold: length mismatch");
  std::size_t n_pos = 0;
  for (auto v : labels) n_pos += v ? 1 : 0;
  if (n_pos == 0 || n_pos == labels.size()) throw SingleClassError("f1_threshold: labels contain a single class");

  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

  // Cut above the maximum predicts nothing: tp = 0, F1 = 0.
  F1Cut best{scores[order[0]] + 1.0, 0.0};
  std::size_t best_num = 0, best_den = 1;
  std::size_t tp = 0, fp = 0;
  std::size_t k = 0;
  while (k < order.size()) {
    const double t = scores[order[k]];
    while (k < order.size() && scores[order[k]] == t) {
      (labels[order[k]] ? tp : fp) += 1;
      ++k;
    }
    const std::size_t fn = n_pos - tp;
    const std::size_t num = 2 * tp;
    const std::size_t den = 2 * tp + fp + fn;
    // Descending sweep: ">=" keeps the lowest threshold among ties.
    if (num * best_den >= best_num * den) {
      best_num = num;
      best_den = den;
      best.threshold = t;
      best.f1 = static_cast<double>(num) / static_cast<double>(den);
    }
  }
  return best;
}

bool is_acyclic(int n, const EdgeSet& edges) {
  std::vector<int> indegree(static_cast<std::size_t>(n), 0);
  std::vector<std::vector<int>> out(static_cast<std::size_t>(n));
  for (const auto& e : edges) {
    if (e.from < 0 || e.to < 0 || e.from >= n || e.to >= n) return false;
    out[static_cast<std::size_t>(e.from)].push_back(e.to);
    ++indegree[static_cast<std::size_t>(e.to)];
  }
  std::queue<int> ready;
  for (int v = 0; v < n; ++v) {
    if (indegree[static_cast<std::size_t>(v)] == 0) ready.push(v);
  }
  int visited = 0;
  while (!ready.empty()) {
    const int v = ready.front();
    ready.pop();
    ++visited;
    for (int w : out[static_cast<std::size_t>(v)]) {
      if (--indegree[static_cast<std::size_t>(w)] == 0) ready.push(w);
    }
  }
  return visited == n;
}

DecodedGraph decode_dag(int n, std::span<const double> pair_scores, double threshold) {
  const auto expected = static_cast<std::size_t>(n) * static_cast<std::size_t>(std::max(n - 1, 0)) / 2;
  if (pair_scores.size() != expected) {
    throw ValidationError("decode_dag: expected " + std::to_string(expected) + " pair scores, got " +
                          std::to_string(pair_scores.size()));
  }
  EdgeSet edges;
  std::size_t k = 0;
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j, ++k) {
      if (pair_scores[k] >= threshold) edges.insert({i, j});
    }
  }
  DecodedGraph out;
  out.acyclic = is_acyclic(n, edges);
  out.graph = DependencyGraph::from_direct(n, std::move(edges));
  return out;
}

std::size_t symmetric_difference(const EdgeSet& a, const EdgeSet& b, int n_space) {
  auto inside = [&](const Edge& e) { return e.from >= 0 && e.from < e.to && e.to < n_space; };
  std::size_t count = 0;
  for (const auto& e : a) {
    if (inside(e) && !b.contains(e)) ++count;
  }
  for (const auto& e : b) {
    if (inside(e) && !a.contains(e)) ++count;
  }
  return count;
}

// ---------------------------------------------------------------------------
// Paired SD analysis
// ---------------------------------------------------------------------------

namespace {

double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 == 1 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

}  // namespace

Json SDStats::to_json() const {
  Json j = Json::object();
  j["mode"] = mode == SDMode::decoded_vs_oracle ? "decoded_vs_oracle" : "plan_shift";
  j["n_pairs"] = shift.size();
  if (mode == SDMode::decoded_vs_oracle) {
    j["sd_clean"] = sd_clean;
    j["sd_counterpart"] = sd_counterpart;
    j["median_clean"] = median_clean;
    j["median_counterpart"] = median_counterpart;
  } else {
    j["sd_plan_shift"] = shift;
    j["median"] = median_clean;
  }
  j["mean_shift"] = mean_shift;
  j["frac_nonzero"] = frac_nonzero;
  j["wilcoxon"] = wilcoxon.to_json();
  j["cohens_d"] = cohens_d.to_json();
  if (drift_auroc) {
    j["drift_auroc_counterpart_positive"] = *drift_auroc;
    j["drift_auroc_clean_positive"] = 1.0 - *drift_auroc;
  } else {
    j["drift_auroc_counterpart_positive"] = nullptr;
    j["drift_auroc_clean_positive"] = nullptr;
  }
  j["all_acyclic"] = all_acyclic;
  return j;
}

SDStats compare_paired_sd(std::span<const std::pair<DecodedTrajectory, DecodedTrajectory>> pairs, SDMode mode) {
  if (pairs.empty()) throw ValidationError("compare_paired_sd: empty pairing");
  SDStats st;
  st.mode = mode;
  for (const auto& [clean, other] : pairs) {
    st.all_acyclic = st.all_acyclic && clean.decoded.acyclic && other.decoded.acyclic;
    if (mode == SDMode::decoded_vs_oracle) {
      // oracle projected to the agent's own calls
      const auto a = symmetric_difference(clean.decoded.graph.direct, clean.oracle->direct, clean.decoded.graph.n);
      const auto b = symmetric_difference(other.decoded.graph.direct, other.oracle->direct, other.decoded.graph.n);
      st.sd_clean.push_back(a);
      st.sd_counterpart.push_back(b);
      st.shift.push_back(static_cast<double>(b) - static_cast<double>(a));
    } else {
      const int n = std::min(clean.decoded.graph.n, other.decoded.graph.n);
      st.shift.push_back(
          static_cast<double>(symmetric_difference(clean.decoded.graph.direct, other.decoded.graph.direct, n)));
    }
  }
  const double n = static_cast<double>(st.shift.size());
  st.mean_shift = std::accumulate(st.shift.begin(), st.shift.end(), 0.0) / n;
  st.frac_nonzero =
      static_cast<double>(std::count_if(st.shift.begin(), st.shift.end(), [](double v) { return v != 0.0; })) / n;
  st.wilcoxon = wilcoxon_signed_rank(st.shift);
  st.cohens_d = cohens_d_paired(st.shift);
  if (mode == SDMode::decoded_vs_oracle) {
    std::vector<double> a(st.sd_clean.begin(), st.sd_clean.end());
    std::vector<double> b(st.sd_counterpart.begin(), st.sd_counterpart.end());
    st.median_clean = median(a);
    st.median_counterpart = median(b);
    std::vector<double> scores = a;
    scores.insert(scores.end(), b.begin(), b.end());
    std::vector<std::uint8_t> labels(a.size(), 0);
    labels.resize(a.size() + b.size(), 1);
    st.drift_auroc = auroc(scores, labels);
  } else {
    st.median_clean = median(st.shift);
  }
  return st;
}

// ---------------------------------------------------------------------------
// Transitive consistency
// ---------------------------------------------------------------------------

namespace {

struct TripleCounts {
  std::size_t qualifying = 0;
  std::size_t closed = 0;
};

template <class HasEdge>
TripleCounts count_triples(int n, HasEdge&& has) {
  TripleCounts c;
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      if (!has(i, j)) continue;
      for (int k = j + 1; k < n; ++k) {
        if (!has(j, k)) continue;
        ++c.qualifying;
        c.closed += has(i, k) ? 1 : 0;
      }
    }
  }
  return c;
}

}  // namespace

Json TransitiveConsistency::to_json() const {
  Json j = Json::object();
  j["defined"] = defined;
  j["observed"] = defined ? Json(observed) : Json(nullptr);
  j["independence_null"] = defined ? Json(independence_null) : Json(nullptr);
  j["n_triples"] = n_triples;
  j["n_closed"] = n_closed;
  j["wilcoxon"] = wilcoxon.to_json();
  return j;
}

TransitiveConsistency transitive_consistency(std::span<const DependencyGraph> decoded, std::uint64_t seed,
                                             std::size_t n_draws) {
  TransitiveConsistency out;
  std::size_t null_q = 0, null_c = 0;
  std::vector<double> contributions;
  for (std::size_t t = 0; t < decoded.size(); ++t) {
    const auto& g = decoded[t];
    const auto obs = count_triples(g.n, [&](int i, int j) { return g.has_direct(i, j); });
    out.n_triples += obs.qualifying;
    out.n_closed += obs.closed;

    const double n_pairs = 0.5 * g.n * (g.n - 1);
    const double rate = n_pairs > 0 ? static_cast<double>(g.direct.size()) / n_pairs : 0.0;
    Rng rng(derive_seed(seed, t));
    std::size_t tq = 0, tc = 0;
    std::vector<std::uint8_t> adj(static_cast<std::size_t>(g.n * g.n));
    for (std::size_t d = 0; d < n_draws; ++d) {
      for (int i = 0; i < g.n; ++i) {
        for (int j = i + 1; j < g.n; ++j) adj[static_cast<std::size_t>(i * g.n + j)] = rng.bernoulli(rate);
      }
      const auto sim = count_triples(g.n, [&](int i, int j) { return adj[static_cast<std::size_t>(i * g.n + j)] != 0; });
      tq += sim.qualifying;
      tc += sim.closed;
    }
    null_q += tq;
    null_c += tc;
    if (obs.qualifying > 0) {
      const double t_obs = static_cast<double>(obs.closed) / static_cast<double>(obs.qualifying);
      const double t_null = tq > 0 ? static_cast<double>(tc) / static_cast<double>(tq) : rate;
      contributions.push_back(t_obs - t_null);
    }
  }
  out.defined = out.n_triples > 0;
  if (out.defined) {
    out.observed = static_cast<double>(out.n_closed) / static_cast<double>(out.n_triples);
    out.independence_null = null_q > 0 ? static_cast<double>(null_c) / static_cast<double>(null_q) : 0.0;
    out.wilcoxon = wilcoxon_signed_rank(contributions);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Corpus decoding
// ---------------------------------------------------------------------------

Json CorpusDecode::to_json() const {
  Json j = Json::object();
  j["threshold"] = cut.threshold;
  j["f1"] = cut.f1;
  j["logo_auroc"] = logo.auroc_defined ? Json(logo.auroc) : Json(nullptr);
  j["n_trajectories"] = decoded.size();
  j["median_sd"] = median_sd;
  j["frac_acyclic"] = frac_acyclic;
  j["transitive_consistency"] = consistency.to_json();
  Json per = Json::array();
  for (std::size_t t = 0; t < decoded.size(); ++t) {
    Json row = graph_to_json(trajectory_ids[t], decoded[t].graph);
    row["acyclic"] = decoded[t].acyclic;
    row["sd_to_oracle"] = sd_to_oracle[t];
    per.push_back(std::move(row));
  }
  j["trajectories"] = std::move(per);
  return j;
}

CorpusDecode decode_corpus(const Corpus& corpus, const FeatureVariant& variant, const FeatureFamily& family,
                           const LogoConfig& config, std::uint64_t seed) {
  CorpusDecode out;
  const auto ds = corpus.dataset(variant);
  const auto labels = task_labels(ds, Task::direct);
  out.logo = logo_cv(ds, labels, family, config);
  out.cut = f1_threshold(out.logo.scored_values(out.logo.oof_scores), out.logo.scored_labels());

  std::map<std::string, std::vector<std::size_t>, std::less<>> rows;
  for (std::size_t r = 0; r < ds.examples.size(); ++r) rows[ds.examples[r].trajectory_id].push_back(r);
  std::vector<DependencyGraph> graphs;
  std::vector<double> sds;
  std::size_t acyclic = 0;
  for (std::size_t t = 0; t < corpus.size(); ++t) {
    const auto& traj = corpus.trajectories[t];
    auto it = rows.find(traj.trajectory_id);
    if (it == rows.end()) continue;
    if (!std::all_of(it->second.begin(), it->second.end(), [&](std::size_t r) { return out.logo.scored[r] != 0; })) {
      continue;
    }
    std::vector<double> scores;
    for (auto r : it->second) scores.push_back(out.logo.oof_scores[r]);
    const int n = static_cast<int>(traj.n_agent());
    auto decoded = decode_dag(n, scores, out.cut.threshold);
    const auto sd = symmetric_difference(decoded.graph.direct, corpus.graphs[t].direct, n);
    acyclic += decoded.acyclic ? 1 : 0;
    graphs.push_back(decoded.graph);
    sds.push_back(static_cast<double>(sd));
    out.trajectory_ids.push_back(traj.trajectory_id);
    out.sd_to_oracle.push_back(sd);
    out.decoded.push_back(std::move(decoded));
  }
  if (!out.decoded.empty()) {
    out.median_sd = median(sds);
    out.frac_acyclic = static_cast<double>(acyclic) / static_cast<double>(out.decoded.size());
  }
  out.consistency = transitive_consistency(graphs, seed);
  return out;
}

}  // namespace tcprobe
