#include <algorithm>
#include <cmath>
#include <map>

#include "doctest.h"
#include "helpers.hpp"
#include "oracles.hpp"
#include "tcprobe/cli.hpp"
#include "tcprobe/errors.hpp"
#include "tcprobe/evalsuite.hpp"
#include "tcprobe/synth.hpp"

using namespace tcprobe;
using helpers::small_config;

namespace {

bool same_corpus(const Corpus& a, const Corpus& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t k = 0; k < a.size(); ++k) {
    if (trajectory_to_json(a.trajectories[k]) != trajectory_to_json(b.trajectories[k])) return false;
    if (a.stores[k].values != b.stores[k].values) return false;
    if (!(a.graphs[k] == b.graphs[k])) return false;
  }
  return true;
}

const SignalMode kAllModes[] = {SignalMode::none,           SignalMode::positional_only,
                                SignalMode::planted_linear, SignalMode::planted_directional,
                                SignalMode::layer_localized, SignalMode::hop_graded,
                                SignalMode::donor_contrast};

}  // namespace

TEST_SUITE("synth") {
  TEST_CASE("generation is deterministic in the config and independent of workers") {
    for (auto mode : kAllModes) {
      auto cfg = small_config(mode, 12, 99);
      const auto a = generate_corpus(cfg, Exec::serial());
      const auto b = generate_corpus(cfg, Exec{4});
      CHECK(same_corpus(a.corpus, b.corpus));
      CHECK(a.u == b.u);
      cfg.seed = 100;
      CHECK_FALSE(same_corpus(a.corpus, generate_corpus(cfg).corpus));
    }
  }

  TEST_CASE("config JSON round trip and mode names") {
    auto cfg = small_config(SignalMode::layer_localized, 9, 3);
    cfg.planted_layer = 14;
    cfg.edge_density = 0.45;
    const auto back = SynthConfig::from_json(cfg.to_json());
    CHECK(back.to_json() == cfg.to_json());
    for (auto mode : kAllModes) CHECK(signal_mode_from_string(to_string(mode)) == mode);
    CHECK_THROWS_AS(signal_mode_from_string("loud"), ValidationError);
  }

  TEST_CASE("infeasible configs are rejected") {
    auto bad = [](auto&& edit) {
      auto c = small_config(SignalMode::planted_linear);
      edit(c);
      return c;
    };
    CHECK_THROWS_AS(generate_corpus(bad([](SynthConfig& c) { c.min_calls = 1; })), ValidationError);
    CHECK_THROWS_AS(generate_corpus(bad([](SynthConfig& c) { c.max_calls = 2, c.min_calls = 3; })), ValidationError);
    CHECK_THROWS_AS(generate_corpus(bad([](SynthConfig& c) { c.edge_density = 0.0; })), ValidationError);
    CHECK_THROWS_AS(generate_corpus(bad([](SynthConfig& c) { c.n_trajectories = 0; })), ValidationError);
    CHECK_THROWS_AS(generate_corpus(bad([](SynthConfig& c) { c.hidden_dim = 0; })), ValidationError);
    CHECK_THROWS_AS(generate_corpus(bad([](SynthConfig& c) { c.noise_sd = -1.0; })), ValidationError);
    CHECK_THROWS_AS(generate_corpus(bad([](SynthConfig& c) { c.layer_ids = {14, 0}; })), ValidationError);
    CHECK_THROWS_AS(generate_corpus(bad([](SynthConfig& c) {
                      c.mode = SignalMode::layer_localized;
                      c.planted_layer = 13;
                    })),
                    ValidationError);
    CHECK_THROWS_AS(generate_corpus(bad([](SynthConfig& c) {
                      c.mode = SignalMode::donor_contrast;
                      c.min_calls = c.max_calls = 2;
                    })),
                    ValidationError);
    CHECK_THROWS_AS(generate_counterfactual(bad([](SynthConfig& c) { c.mode = SignalMode::donor_contrast; }),
                                            CounterfactualKind::value),
                    ValidationError);
    CHECK_THROWS_AS(generate_counterfactual(bad([](SynthConfig& c) { c.min_calls = c.max_calls = 2; }),
                                            CounterfactualKind::structural),
                    ValidationError);
  }

  TEST_CASE("property: the substring oracle reproduces every generated DAG") {
    std::size_t n = 0, mismatches = 0, brute = 0;
    for (std::uint64_t c = 0; c < 140; ++c) {
      auto cfg = small_config(kAllModes[c % 7], 8, 500 + c);
      cfg.hidden_dim = 2;
      cfg.layer_ids = {0, 41};
      cfg.planted_layer.reset();
      if (cfg.mode == SignalMode::layer_localized) cfg.planted_layer = 41;
      cfg.max_calls = 3 + static_cast<int>(c % 6);
      cfg.edge_density = 0.1 + 0.15 * static_cast<double>(c % 6);
      cfg.untyped_reference_rate = 0.2 * static_cast<double>(c % 5);
      const auto sc = generate_corpus(cfg);
      for (std::size_t k = 0; k < sc.corpus.size(); ++k) {
        const auto& t = sc.corpus.trajectories[k];
        const auto fast = substring_edges(t).direct;
        mismatches += fast != sc.corpus.graphs[k].direct ? 1 : 0;
        if (k == 0) brute += fast != oracles::brute_substring_edges(t) ? 1 : 0;
        ++n;
      }
    }
    CHECK(n == 1120);
    CHECK(mismatches == 0);
    CHECK(brute == 0);
  }

  TEST_CASE("property: typed edges are a subset and grow back to the DAG without untyped references") {
    for (std::uint64_t c = 0; c < 20; ++c) {
      auto cfg = small_config(SignalMode::planted_linear, 10, 40 + c);
      cfg.hidden_dim = 2;
      cfg.untyped_reference_rate = c % 2 ? 0.5 : 0.0;
      const auto sc = generate_corpus(cfg);
      const auto schema = synth_schema(cfg);
      for (std::size_t k = 0; k < sc.corpus.size(); ++k) {
        const auto typed = typed_edges(sc.corpus.trajectories[k], schema).direct;
        const auto& truth = sc.corpus.graphs[k].direct;
        CHECK(std::includes(truth.begin(), truth.end(), typed.begin(), typed.end()));
        if (cfg.untyped_reference_rate == 0.0) CHECK(typed == truth);
      }
    }
  }

  TEST_CASE("noiseless planted corpora are separated by the certificate") {
    for (auto mode : {SignalMode::planted_linear, SignalMode::planted_directional}) {
      auto cfg = small_config(mode, 40, 12);
      cfg.noise_sd = 0.0;
      const auto sc = generate_corpus(cfg);
      const auto ds = sc.corpus.dataset(FeatureVariant::named("V1"));
      REQUIRE(sc.certificate.size() == ds.residual_width());
      double lo_pos = 1e300, hi_neg = -1e300;
      std::vector<double> s;
      std::vector<std::uint8_t> y;
      for (const auto& e : ds.examples) {
        double acc = 0.0;
        for (std::size_t c = 0; c < e.residual.size(); ++c) acc += sc.certificate[c] * e.residual[c];
        s.push_back(acc);
        y.push_back(e.label_direct);
        if (e.label_direct) lo_pos = std::min(lo_pos, acc);
        else hi_neg = std::max(hi_neg, acc);
      }
      CHECK(lo_pos > hi_neg);
      CHECK(auroc(s, y) == 1.0);
    }
  }

  TEST_CASE("the null mode is not learnable") {
    auto cfg = small_config(SignalMode::none, 100, 8);
    const auto ds = generate_corpus(cfg).corpus.dataset(FeatureVariant::named("V1"));
    const auto r = logo_cv(ds, task_labels(ds, Task::direct), FeatureFamily::residual_only(), LogoConfig{});
    CHECK(std::abs(r.auroc - 0.5) <= 0.05);
  }

  TEST_CASE("positional_only labels depend on (i, j, n) alone") {
    const auto sc = generate_corpus(small_config(SignalMode::positional_only, 60, 4));
    std::map<std::tuple<int, int, int>, bool> rule;
    for (const auto& g : sc.corpus.graphs) {
      for (int i = 0; i < g.n; ++i) {
        for (int j = i + 1; j < g.n; ++j) {
          const auto it = rule.emplace(std::tuple{i, j, g.n}, g.has_direct(i, j)).first;
          CHECK(it->second == g.has_direct(i, j));
        }
      }
    }
    CHECK(rule.size() > 10);
  }

  TEST_CASE("layer_localized plants only the chosen layer") {
    auto cfg = small_config(SignalMode::layer_localized, 10, 6);
    cfg.noise_sd = 0.0;
    cfg.planted_layer = 50;
    const auto sc = generate_corpus(cfg);
    for (const auto& s : sc.corpus.stores) {
      for (std::size_t b = 0; b < s.n_boundaries; ++b) {
        for (std::size_t l = 0; l < s.n_layers(); ++l) {
          const auto v = s.vector(b, l);
          const bool zero = std::all_of(v.begin(), v.end(), [](float x) { return x == 0.0f; });
          if (s.layer_ids[l] != 50 || b % 2 == 0) CHECK(zero);
        }
      }
    }
  }

  TEST_CASE("donor_contrast pairs differ in exactly one edge under a shared prefix") {
    auto cfg = small_config(SignalMode::donor_contrast, 21, 5);
    const auto sc = generate_corpus(cfg);
    const auto graphed = sc.corpus.graphed();
    const auto pairs = select_minimal_pairs(graphed);
    std::size_t adjacent = 0;
    for (const auto& p : pairs) {
      CHECK(p.donor_index < p.target_index);
      if (p.donor_index % 2 == 0 && p.target_index == p.donor_index + 1) {
        ++adjacent;
        CHECK(p.donor_has_edge);
      }
    }
    CHECK(adjacent == 10);
    // The trailing odd trajectory is an ordinary planted one.
    CHECK(sc.corpus.trajectories[20].task_id == "task-20");
  }

  TEST_CASE("counterfactual corpora keep tasks and change what they claim") {
    for (auto kind : {CounterfactualKind::value, CounterfactualKind::structural}) {
      auto cfg = small_config(SignalMode::planted_linear, 25, 31);
      cfg.min_calls = 3;
      const auto cf = generate_counterfactual(cfg, kind);
      const auto& clean = cf.clean.corpus;
      const auto& other = cf.counterpart;
      REQUIRE(clean.size() == other.size());
      for (std::size_t k = 0; k < clean.size(); ++k) {
        const auto& a = clean.trajectories[k];
        const auto& b = other.trajectories[k];
        const int med = static_cast<int>(a.calls.size() / 2);
        CHECK(a.task_id == b.task_id);
        CHECK(a.trajectory_id != b.trajectory_id);
        REQUIRE(a.calls.size() == b.calls.size());
        for (std::size_t c = 0; c < a.calls.size(); ++c) CHECK(a.calls[c].tool_name == b.calls[c].tool_name);
        CHECK(substring_edges(b).direct == other.graphs[k].direct);
        if (kind == CounterfactualKind::value) {
          CHECK(b.condition == Condition::value_corrupted);
          CHECK(other.graphs[k].direct == clean.graphs[k].direct);
          CHECK(a.calls[static_cast<std::size_t>(med)].output_text != b.calls[static_cast<std::size_t>(med)].output_text);
        } else {
          CHECK(b.condition == Condition::skip_tool);
          CHECK(b.calls[static_cast<std::size_t>(med)].output_text == "{}");
          CHECK(clean.graphs[k].has_direct(med, med + 1));
          EdgeSet expected = clean.graphs[k].direct;
          std::erase_if(expected, [&](const Edge& e) { return e.from == med; });
          CHECK(other.graphs[k].direct == expected);
        }
      }
    }
  }

  TEST_CASE("written corpora load back with the same graphs") {
    auto cfg = small_config(SignalMode::planted_linear, 6, 2);
    const auto sc = generate_corpus(cfg);
    const auto dir = helpers::scratch_dir("synth-write");
    write_corpus(dir, sc.corpus, cfg.to_json(), synth_schema(cfg));
    for (const char* oracle : {"substring", "typed"}) {
      const auto back = cli::load_corpus(dir / "log.jsonl", dir / "activations", oracle, dir / "schema.json");
      REQUIRE(back.size() == sc.corpus.size());
      for (std::size_t k = 0; k < back.size(); ++k) {
        CHECK(back.stores[k].values == sc.corpus.stores[k].values);
        if (std::string_view(oracle) == "substring") CHECK(back.graphs[k] == sc.corpus.graphs[k]);
      }
    }
    CHECK(std::filesystem::exists(dir / "oracle.jsonl"));
    CHECK(std::filesystem::exists(dir / "synth.json"));
  }
}
