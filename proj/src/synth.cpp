#include "tcprobe/synth.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <unordered_set>

#include "tcprobe/errors.hpp"
#include "tcprobe/rng.hpp"

namespace tcprobe {

std::string_view to_string(SignalMode m) {
  switch (m) {
    case SignalMode::none: return "none";
    case SignalMode::positional_only: return "positional_only";
    case SignalMode::planted_linear: return "planted_linear";
    case SignalMode::planted_directional: return "planted_directional";
    case SignalMode::layer_localized: return "layer_localized";
    case SignalMode::hop_graded: return "hop_graded";
    case SignalMode::donor_contrast: return "donor_contrast";
  }
  return "none";
}

SignalMode signal_mode_from_string(std::string_view s) {
  for (auto m : {SignalMode::none, SignalMode::positional_only, SignalMode::planted_linear,
                 SignalMode::planted_directional, SignalMode::layer_localized, SignalMode::hop_graded,
                 SignalMode::donor_contrast}) {
    if (s == to_string(m)) return m;
  }
  throw ValidationError("unknown signal_mode '" + std::string(s) + "'");
}

void SynthConfig::validate() const {
  if (n_trajectories == 0) throw ValidationError("synth: n_trajectories must be positive");
  if (min_calls < 2 || max_calls < min_calls) {
    throw ValidationError("synth: n_calls range [" + std::to_string(min_calls) + ", " + std::to_string(max_calls) +
                          "] is infeasible (need 2 <= min <= max)");
  }
  if (hidden_dim == 0) throw ValidationError("synth: hidden_dim must be positive");
  if (layer_ids.empty() || !std::is_sorted(layer_ids.begin(), layer_ids.end()) ||
      std::adjacent_find(layer_ids.begin(), layer_ids.end()) != layer_ids.end()) {
    throw ValidationError("synth: layer_ids must be non-empty and strictly increasing");
  }
  if (!(edge_density > 0.0 && edge_density <= 1.0)) throw ValidationError("synth: edge_density must be in (0, 1]");
  if (!(noise_sd >= 0.0) || !(signal >= 0.0)) throw ValidationError("synth: signal and noise_sd must be >= 0");
  if (n_tools == 0) throw ValidationError("synth: n_tools must be positive");
  if (mode == SignalMode::layer_localized || planted_layer) {
    const int layer = planted_layer.value_or(kSingleLayerAblation);
    if (std::find(layer_ids.begin(), layer_ids.end(), layer) == layer_ids.end()) {
      throw ValidationError("synth: planted_layer " + std::to_string(layer) + " is not among layer_ids");
    }
  }
  if (mode == SignalMode::donor_contrast && (n_trajectories < 2 || max_calls < 3)) {
    throw ValidationError("synth: donor_contrast needs >= 2 trajectories and max_calls >= 3");
  }
}

Json SynthConfig::to_json() const {
  Json j = Json::object();
  j["n_trajectories"] = n_trajectories;
  j["min_calls"] = min_calls;
  j["max_calls"] = max_calls;
  j["hidden_dim"] = hidden_dim;
  j["layer_ids"] = layer_ids;
  j["edge_density"] = edge_density;
  j["signal_mode"] = to_string(mode);
  j["planted_layer"] = planted_layer ? Json(*planted_layer) : Json(nullptr);
  j["signal"] = signal;
  j["noise_sd"] = noise_sd;
  j["seed"] = seed;
  j["n_tools"] = n_tools;
  j["untyped_reference_rate"] = untyped_reference_rate;
  return j;
}

SynthConfig SynthConfig::from_json(const Json& j) {
  SynthConfig c;
  c.n_trajectories = j.value("n_trajectories", c.n_trajectories);
  c.min_calls = j.value("min_calls", c.min_calls);
  c.max_calls = j.value("max_calls", c.max_calls);
  c.hidden_dim = j.value("hidden_dim", c.hidden_dim);
  if (j.contains("layer_ids")) c.layer_ids = j.at("layer_ids").get<std::vector<int>>();
  c.edge_density = j.value("edge_density", c.edge_density);
  if (j.contains("signal_mode")) c.mode = signal_mode_from_string(j.at("signal_mode").get<std::string>());
  if (j.contains("planted_layer") && !j.at("planted_layer").is_null()) c.planted_layer = j.at("planted_layer").get<int>();
  c.signal = j.value("signal", c.signal);
  c.noise_sd = j.value("noise_sd", c.noise_sd);
  c.seed = j.value("seed", c.seed);
  c.n_tools = j.value("n_tools", c.n_tools);
  c.untyped_reference_rate = j.value("untyped_reference_rate", c.untyped_reference_rate);
  return c;
}

namespace {

constexpr std::string_view kTokenAlphabet = "ABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789";
constexpr std::size_t kTokenLength = 8;
constexpr std::uint64_t kDirectionStream = 0xd1'2ec7'10a5ULL;

bool is_bare_tool(std::size_t k) { return k % 4 == 3; }

std::string tool_name_for(std::size_t k) {
  return (is_bare_tool(k) ? "find_entity_" : "tool_") + std::to_string(k);
}

// Tokens share no 3-gram within one trajectory, so no two distinct tokens
// (nor a token and the surrounding JSON punctuation) can form a common
// substring of length 4.
class TokenPool {
 public:
  explicit TokenPool(Rng& rng) : rng_(rng) {}

  std::string draw() {
    for (;;) {
      std::string tok(kTokenLength, 'A');
      for (auto& c : tok) c = kTokenAlphabet[rng_.index(kTokenAlphabet.size())];
      bool clash = false;
      for (std::size_t p = 0; p + 3 <= tok.size() && !clash; ++p) clash = grams_.contains(tok.substr(p, 3));
      // a token repeating its own 3-gram could still pair up with itself
      std::unordered_set<std::string> own;
      for (std::size_t p = 0; p + 3 <= tok.size() && !clash; ++p) clash = !own.insert(tok.substr(p, 3)).second;
      if (clash) continue;
      for (std::size_t p = 0; p + 3 <= tok.size(); ++p) grams_.insert(tok.substr(p, 3));
      return tok;
    }
  }

 private:
  Rng& rng_;
  std::unordered_set<std::string> grams_;
};

/// Structure and planting coefficients of one trajectory, before any text.
struct Plan {
  int n = 0;
  std::vector<std::size_t> tools;
  EdgeSet edges;
  /// Planted magnitude along u and v for each call.
  std::vector<double> cu;
  std::vector<double> cv;
};

struct Membership {
  std::vector<char> source;
  std::vector<char> target;
};

EdgeSet bipartite_edges(const Membership& m) {
  EdgeSet e;
  const int n = static_cast<int>(m.source.size());
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      if (m.source[static_cast<std::size_t>(i)] && m.target[static_cast<std::size_t>(j)]) e.insert({i, j});
    }
  }
  return e;
}

void plant_membership(Plan& plan, const Membership& m, double signal) {
  for (int k = 0; k < plan.n; ++k) {
    plan.cu[static_cast<std::size_t>(k)] = m.source[static_cast<std::size_t>(k)] ? signal : 0.0;
    plan.cv[static_cast<std::size_t>(k)] = m.target[static_cast<std::size_t>(k)] ? signal : 0.0;
  }
}

Membership draw_membership(int n, const SynthConfig& cfg, Rng& rng, bool disjoint) {
  Membership m{std::vector<char>(static_cast<std::size_t>(n)), std::vector<char>(static_cast<std::size_t>(n))};
  const double p = std::min(0.5, std::sqrt(cfg.edge_density));
  for (int k = 0; k < n; ++k) {
    if (disjoint) {
      const double r = rng.uniform();
      m.source[static_cast<std::size_t>(k)] = r < p;
      m.target[static_cast<std::size_t>(k)] = r >= p && r < 2 * p;
    } else {
      m.source[static_cast<std::size_t>(k)] = rng.bernoulli(p);
      m.target[static_cast<std::size_t>(k)] = rng.bernoulli(p);
    }
  }
  return m;
}

Plan empty_plan(int n, const SynthConfig& cfg, Rng& rng) {
  Plan plan;
  plan.n = n;
  plan.cu.assign(static_cast<std::size_t>(n), 0.0);
  plan.cv.assign(static_cast<std::size_t>(n), 0.0);
  for (int k = 0; k < n; ++k) plan.tools.push_back(static_cast<std::size_t>(rng.index(cfg.n_tools)));
  return plan;
}

int draw_length(const SynthConfig& cfg, Rng& rng, int floor_calls = 2) {
  const int lo = std::max(cfg.min_calls, floor_calls);
  const int hi = std::max(cfg.max_calls, lo);
  return lo + static_cast<int>(rng.index(static_cast<std::uint64_t>(hi - lo + 1)));
}

/// Adjacent calls always depend; longer gaps depend on a fixed parity pattern
/// in (i, j, n) that no linear function of position reproduces.
bool positional_rule(int i, int j, int n) {
  const int gap = j - i;
  if (gap == 1) return true;
  if (gap == 2) return (i + n) % 2 == 0;
  if (gap == 3) return (i * j + n) % 3 == 0;
  return false;
}

/// `force_median_edge` makes call n/2 a source with call n/2 + 1 as a target,
/// so structural counterfactuals always remove at least one edge.
Plan plan_trajectory(const SynthConfig& cfg, Rng& rng, bool force_median_edge) {
  const int n = draw_length(cfg, rng, force_median_edge ? 3 : 2);
  Plan plan = empty_plan(n, cfg, rng);
  switch (cfg.mode) {
    case SignalMode::none: {
      for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
          if (rng.bernoulli(cfg.edge_density)) plan.edges.insert({i, j});
        }
      }
      break;
    }
    case SignalMode::positional_only: {
      // Edges are a fixed rule in (i, j); the parity term keeps a linear
      // positional probe from being perfect. The residual encodes k linearly,
      // so it carries nothing the positional block lacks.
      for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
          if (positional_rule(i, j, n)) plan.edges.insert({i, j});
        }
      }
      const double scale = cfg.signal / static_cast<double>(std::max(cfg.max_calls, 2));
      for (int k = 0; k < n; ++k) plan.cu[static_cast<std::size_t>(k)] = scale * k;
      break;
    }
    case SignalMode::planted_linear:
    case SignalMode::planted_directional:
    case SignalMode::layer_localized:
    case SignalMode::donor_contrast: {
      auto m = draw_membership(n, cfg, rng, cfg.mode == SignalMode::planted_directional);
      if (force_median_edge) {
        const auto med = static_cast<std::size_t>(n / 2);
        m.source[med] = 1;
        m.target[med + 1] = 1;
        if (cfg.mode == SignalMode::planted_directional) {
          m.target[med] = 0;
          m.source[med + 1] = 0;
        }
      }
      plan.edges = bipartite_edges(m);
      plant_membership(plan, m, cfg.signal);
      break;
    }
    case SignalMode::hop_graded: {
      // One chain through a random subset; source strength falls and target
      // strength rises with chain rank, so the planted score grows with hop.
      std::vector<int> chain;
      const double keep = std::clamp(std::sqrt(cfg.edge_density) + 0.2, 0.3, 1.0);
      for (int k = 0; k < n; ++k) {
        if (rng.bernoulli(keep)) chain.push_back(k);
      }
      if (force_median_edge) {
        chain.clear();
        for (int k = 0; k < n; ++k) chain.push_back(k);
      }
      const double step = cfg.signal / static_cast<double>(std::max(cfg.max_calls, 2));
      for (std::size_t r = 0; r < chain.size(); ++r) {
        const auto k = static_cast<std::size_t>(chain[r]);
        plan.cu[k] = cfg.signal - step * static_cast<double>(r);
        plan.cv[k] = cfg.signal + step * static_cast<double>(r);
        if (r + 1 < chain.size()) plan.edges.insert({chain[r], chain[r + 1]});
      }
      break;
    }
  }
  return plan;
}

/// Texts for a plan. `replace_token_of` swaps one call's token for a fresh one
/// everywhere; `empty_output_of` renders that call's response as "{}".
std::vector<ToolCall> realize(const Plan& plan, const SynthConfig& cfg, Rng& rng,
                              std::vector<std::string> tool_names, int replace_token_of = -1,
                              int empty_output_of = -1) {
  TokenPool pool(rng);
  const auto n = static_cast<std::size_t>(plan.n);
  std::vector<std::string> out_tok(n), fresh(n);
  for (std::size_t k = 0; k < n; ++k) {
    out_tok[k] = pool.draw();
    fresh[k] = pool.draw();
  }
  std::vector<char> untyped_draws;
  for (std::size_t k = 0; k < n * n; ++k) untyped_draws.push_back(rng.bernoulli(cfg.untyped_reference_rate));
  if (replace_token_of >= 0) out_tok[static_cast<std::size_t>(replace_token_of)] = pool.draw();

  std::vector<ToolCall> calls(n);
  for (std::size_t k = 0; k < n; ++k) {
    auto& c = calls[k];
    c.index = static_cast<int>(k);
    c.boundary_index = static_cast<int>(2 * k + 1);
    c.tool_name = tool_names[k];
    if (static_cast<int>(k) == empty_output_of) {
      c.output_text = "{}";
    } else if (tool_names[k].starts_with("find_entity_")) {
      c.output_text = out_tok[k];
    } else {
      c.output_text = "{\"out_id\":\"" + out_tok[k] + "\" }";
    }
    c.arguments = Json::object();
    c.arguments["q"] = fresh[k];
    std::vector<std::string> notes;
    int slot = 0;
    for (const auto& e : plan.edges) {
      if (e.to != static_cast<int>(k)) continue;
      const auto& tok = out_tok[static_cast<std::size_t>(e.from)];
      if (untyped_draws[static_cast<std::size_t>(e.from) * n + k]) {
        notes.push_back(tok);
      } else {
        c.arguments["in" + std::to_string(slot++) + "Ref"] = tok;
      }
    }
    if (!notes.empty()) {
      std::string text = "see";
      for (std::size_t t = 0; t < notes.size(); ++t) text += (t == 0 ? " " : " and ") + notes[t];
      c.arguments["note"] = text + " here";
    }
  }
  return calls;
}

std::vector<double> unit_vector(std::size_t d, Rng& rng) {
  std::vector<double> v(d);
  double norm = 0.0;
  for (auto& x : v) {
    x = rng.normal();
    norm += x * x;
  }
  norm = std::sqrt(norm);
  for (auto& x : v) x /= norm;
  return v;
}

ActivationStore activations(const std::string& id, const Plan& plan, const SynthConfig& cfg,
                            const std::vector<double>& u, const std::vector<double>& v, Rng& rng) {
  ActivationStore s;
  s.trajectory_id = id;
  s.layer_ids = cfg.layer_ids;
  s.n_boundaries = static_cast<std::size_t>(2 * plan.n + 1);
  s.hidden_dim = cfg.hidden_dim;
  s.values.resize(s.n_boundaries * s.n_layers() * s.hidden_dim);
  const bool localized = cfg.mode == SignalMode::layer_localized || cfg.planted_layer.has_value();
  const int planted_layer = cfg.planted_layer.value_or(kSingleLayerAblation);
  for (std::size_t b = 0; b < s.n_boundaries; ++b) {
    const bool is_call = b % 2 == 1;
    const std::size_t k = b / 2;
    for (std::size_t l = 0; l < s.n_layers(); ++l) {
      const bool planted = is_call && (!localized || s.layer_ids[l] == planted_layer);
      auto vec = s.vector(b, l);
      for (std::size_t d = 0; d < s.hidden_dim; ++d) {
        double x = cfg.noise_sd > 0 ? cfg.noise_sd * rng.normal() : 0.0;
        if (planted) x += plan.cu[k] * u[d] + plan.cv[k] * v[d];
        vec[d] = static_cast<float>(x);
      }
    }
  }
  return s;
}

std::string trajectory_id_for(std::size_t t) {
  std::string digits = std::to_string(t);
  return "syn-" + std::string(digits.size() < 5 ? 5 - digits.size() : 0, '0') + digits;
}

struct Directions {
  std::vector<double> u;
  std::vector<double> v;
};

Directions draw_directions(const SynthConfig& cfg) {
  Rng rng(derive_seed(cfg.seed, kDirectionStream));
  Directions d{unit_vector(cfg.hidden_dim, rng), unit_vector(cfg.hidden_dim, rng)};
  if (cfg.mode == SignalMode::planted_directional && cfg.hidden_dim > 1) {
    double proj = 0.0;
    for (std::size_t k = 0; k < cfg.hidden_dim; ++k) proj += d.u[k] * d.v[k];
    double norm = 0.0;
    for (std::size_t k = 0; k < cfg.hidden_dim; ++k) {
      d.v[k] -= proj * d.u[k];
      norm += d.v[k] * d.v[k];
    }
    norm = std::sqrt(norm);
    for (auto& x : d.v) x /= norm;
  }
  return d;
}

std::vector<std::string> names_of(const Plan& plan) {
  std::vector<std::string> out;
  for (auto k : plan.tools) out.push_back(tool_name_for(k));
  return out;
}

void fill_certificate(SynthCorpus& sc) {
  sc.certificate = sc.u;
  sc.certificate.insert(sc.certificate.end(), sc.v.begin(), sc.v.end());
}

// donor_contrast: trajectory pairs (A, B) with shared tool names; A has the
// edge (i, j) and B does not, and i's source planting exists only in A.
void contrast_pair(const SynthConfig& cfg, std::size_t pair, const Directions& dir, Corpus& out, std::size_t slot) {
  Rng rng(derive_seed(cfg.seed, pair));
  const int n = draw_length(cfg, rng, 3);
  Plan a = empty_plan(n, cfg, rng);
  const int i = static_cast<int>(rng.index(static_cast<std::uint64_t>(n - 1)));
  const int j = i + 1 + static_cast<int>(rng.index(static_cast<std::uint64_t>(n - 1 - i)));
  auto m = draw_membership(n, cfg, rng, false);
  for (int k = i + 1; k < n; ++k) m.target[static_cast<std::size_t>(k)] = k == j;
  m.source[static_cast<std::size_t>(i)] = 1;
  Plan b = a;
  a.edges = bipartite_edges(m);
  plant_membership(a, m, cfg.signal);
  m.source[static_cast<std::size_t>(i)] = 0;
  b.edges = bipartite_edges(m);
  plant_membership(b, m, cfg.signal);

  std::vector<std::string> names;
  for (int k = 0; k < n; ++k) {
    names.push_back("pair" + std::to_string(pair) + "_" + tool_name_for(a.tools[static_cast<std::size_t>(k)]) + "_" +
                    std::to_string(k));
  }
  const Plan* plans[2] = {&a, &b};
  for (int side = 0; side < 2; ++side) {
    const auto idx = slot + static_cast<std::size_t>(side);
    Trajectory t;
    t.trajectory_id = trajectory_id_for(idx);
    t.task_id = "task-pair" + std::to_string(pair) + (side == 0 ? "-a" : "-b");
    Rng text_rng(derive_seed(cfg.seed, 0x7e47'0000ULL + idx));
    t.calls = realize(*plans[side], cfg, text_rng, names);
    Rng act_rng(derive_seed(cfg.seed, 0xac7'0000'0000ULL + idx));
    out.stores[idx] = activations(t.trajectory_id, *plans[side], cfg, dir.u, dir.v, act_rng);
    out.graphs[idx] = DependencyGraph::from_direct(n, plans[side]->edges);
    out.trajectories[idx] = std::move(t);
  }
}

}  // namespace

TypedSchema synth_schema(const SynthConfig& config) {
  TypedSchema s;
  s.typed_key_suffixes = {"_id", "Ref"};
  for (std::size_t k = 0; k < config.n_tools; ++k) {
    if (is_bare_tool(k)) s.bare_entity_tools.push_back(tool_name_for(k));
  }
  return s;
}

SynthCorpus generate_corpus(const SynthConfig& config, const Exec& exec) {
  config.validate();
  SynthCorpus sc;
  sc.config = config;
  const auto dir = draw_directions(config);
  sc.u = dir.u;
  sc.v = dir.v;
  fill_certificate(sc);
  const std::size_t n = config.n_trajectories;
  sc.corpus.trajectories.resize(n);
  sc.corpus.stores.resize(n);
  sc.corpus.graphs.resize(n);

  if (config.mode == SignalMode::donor_contrast) {
    const std::size_t pairs = n / 2;
    parallel_for(pairs, exec, [&](std::size_t p) { contrast_pair(config, p, dir, sc.corpus, 2 * p); });
    if (n % 2 == 1) {
      // odd count: the last trajectory is an unpaired planted one
      SynthConfig solo = config;
      solo.mode = SignalMode::planted_linear;
      Rng rng(derive_seed(config.seed, n - 1));
      const Plan plan = plan_trajectory(solo, rng, false);
      Trajectory t;
      t.trajectory_id = trajectory_id_for(n - 1);
      t.task_id = "task-" + std::to_string(n - 1);
      t.calls = realize(plan, config, rng, names_of(plan));
      sc.corpus.stores[n - 1] = activations(t.trajectory_id, plan, config, dir.u, dir.v, rng);
      sc.corpus.graphs[n - 1] = DependencyGraph::from_direct(plan.n, plan.edges);
      sc.corpus.trajectories[n - 1] = std::move(t);
    }
    return sc;
  }

  parallel_for(n, exec, [&](std::size_t t) {
    Rng rng(derive_seed(config.seed, t));
    const Plan plan = plan_trajectory(config, rng, false);
    Trajectory traj;
    traj.trajectory_id = trajectory_id_for(t);
    traj.task_id = "task-" + std::to_string(t);
    traj.calls = realize(plan, config, rng, names_of(plan));
    sc.corpus.stores[t] = activations(traj.trajectory_id, plan, config, dir.u, dir.v, rng);
    sc.corpus.graphs[t] = DependencyGraph::from_direct(plan.n, plan.edges);
    sc.corpus.trajectories[t] = std::move(traj);
  });
  return sc;
}

SynthCounterfactual generate_counterfactual(const SynthConfig& config, CounterfactualKind kind, const Exec& exec) {
  config.validate();
  if (config.mode == SignalMode::donor_contrast) {
    throw ValidationError("synth: counterfactual corpora do not support donor_contrast");
  }
  if (config.max_calls < 3) throw ValidationError("synth: counterfactual corpora need max_calls >= 3");
  SynthCounterfactual out;
  auto& sc = out.clean;
  sc.config = config;
  const auto dir = draw_directions(config);
  sc.u = dir.u;
  sc.v = dir.v;
  fill_certificate(sc);
  const std::size_t n = config.n_trajectories;
  for (auto* c : {&sc.corpus, &out.counterpart}) {
    c->trajectories.resize(n);
    c->stores.resize(n);
    c->graphs.resize(n);
  }
  const bool structural = kind == CounterfactualKind::structural;
  parallel_for(n, exec, [&](std::size_t t) {
    Rng rng(derive_seed(config.seed, t));
    const Plan plan = plan_trajectory(config, rng, structural);
    const auto names = names_of(plan);
    const std::uint64_t text_seed = derive_seed(config.seed, 0x7e47'0000ULL + t);
    const int med = plan.n / 2;

    Trajectory clean;
    clean.trajectory_id = trajectory_id_for(t);
    clean.task_id = "task-" + std::to_string(t);
    Rng text_a(text_seed);
    clean.calls = realize(plan, config, text_a, names);
    sc.corpus.stores[t] = activations(clean.trajectory_id, plan, config, dir.u, dir.v, rng);
    sc.corpus.graphs[t] = DependencyGraph::from_direct(plan.n, plan.edges);

    Plan other = plan;
    Trajectory cf;
    cf.task_id = clean.task_id;
    Rng text_b(text_seed);
    if (structural) {
      std::erase_if(other.edges, [&](const Edge& e) { return e.from == med; });
      other.cu[static_cast<std::size_t>(med)] = 0.0;
      cf.condition = Condition::skip_tool;
      cf.calls = realize(other, config, text_b, names, -1, med);
    } else {
      cf.condition = Condition::value_corrupted;
      cf.calls = realize(other, config, text_b, names, med, -1);
    }
    cf.trajectory_id = clean.trajectory_id + (structural ? "-skip" : "-corrupt");
    Rng act_rng(derive_seed(config.seed, 0xcf'0000'0000ULL + t));
    out.counterpart.stores[t] = activations(cf.trajectory_id, other, config, dir.u, dir.v, act_rng);
    out.counterpart.graphs[t] = DependencyGraph::from_direct(other.n, other.edges);
    out.counterpart.trajectories[t] = std::move(cf);
    sc.corpus.trajectories[t] = std::move(clean);
  });
  return out;
}

void write_corpus(const std::filesystem::path& dir, const Corpus& corpus, const Json& manifest,
                  const TypedSchema& schema) {
  std::filesystem::create_directories(dir / "activations");
  write_log(dir / "log.jsonl", corpus.trajectories);
  for (const auto& s : corpus.stores) write_activations(activation_path(dir / "activations", s.trajectory_id), s);
  std::ofstream oracle(dir / "oracle.jsonl");
  for (std::size_t k = 0; k < corpus.size(); ++k) {
    oracle << graph_to_json(corpus.trajectories[k].trajectory_id, corpus.graphs[k]).dump() << '\n';
  }
  std::ofstream(dir / "schema.json") << schema.to_json().dump(2) << '\n';
  std::ofstream(dir / "synth.json") << manifest.dump(2) << '\n';
}

}  // namespace tcprobe
