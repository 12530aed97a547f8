#include "doctest.h"
#include "helpers.hpp"
#include "oracles.hpp"
#include "tcprobe/errors.hpp"
#include "tcprobe/oracle.hpp"
#include "tcprobe/synth.hpp"

using namespace tcprobe;
using helpers::make_traj;

namespace {

Json obj(std::initializer_list<std::pair<const char*, Json>> kv) {
  Json j = Json::object();
  for (const auto& [k, v] : kv) j[k] = v;
  return j;
}

/// Every ordered pair of trajectories, scanned the slow way.
std::size_t brute_minimal_pair_count(const std::vector<Trajectory>& ts, const std::vector<DependencyGraph>& gs) {
  std::size_t count = 0;
  for (std::size_t a = 0; a < ts.size(); ++a) {
    for (std::size_t b = a + 1; b < ts.size(); ++b) {
      std::size_t prefix = 0;
      while (prefix < ts[a].calls.size() && prefix < ts[b].calls.size() &&
             ts[a].calls[prefix].tool_name == ts[b].calls[prefix].tool_name) {
        ++prefix;
      }
      if (prefix < 2) continue;
      std::size_t differing = 0;
      for (std::size_t i = 0; i < prefix; ++i) {
        for (std::size_t j = i + 1; j < prefix; ++j) {
          const Edge e{static_cast<int>(i), static_cast<int>(j)};
          differing += gs[a].direct.contains(e) != gs[b].direct.contains(e) ? 1 : 0;
        }
      }
      count += differing == 1 ? 1 : 0;
    }
  }
  return count;
}

}  // namespace

TEST_SUITE("oracle") {
  TEST_CASE("normalize_text collapses whitespace runs and keeps case") {
    CHECK(normalize_text("  a\tb\n c ") == "a b c");
    CHECK(normalize_text("") == "");
    CHECK(normalize_text("AbC") == "AbC");
    CHECK(normalize_text(" \t\n ") == "");
    // NBSP, ideographic space, line separator, vertical tab and form feed.
    CHECK(normalize_text("x\xc2\xa0\xe3\x80\x80y\xe2\x80\xa8z\v\fw") == "x y z w");
    CHECK(normalize_text("caf\xc3\xa9  \xe2\x82\xac") == "caf\xc3\xa9 \xe2\x82\xac");
  }

  TEST_CASE("property: normalize_text is idempotent and leaves no double spaces") {
    Rng rng(1);
    for (int k = 0; k < 2000; ++k) {
      const auto s = oracles::random_text(rng, rng.index(30));
      const auto n = normalize_text(s);
      CHECK(normalize_text(n) == n);
      CHECK(n.find("  ") == std::string::npos);
      if (!n.empty()) {
        CHECK(n.front() != ' ');
        CHECK(n.back() != ' ');
      }
    }
  }

  TEST_CASE("serialize_args matches the reference serializer byte for byte") {
    // Expected strings were produced once by Python's json.dumps with default
    // settings and frozen here.
    CHECK(serialize_args(Json::parse(R"({"user_id": "123"})")) == R"({"user_id": "123"})");
    CHECK(serialize_args(Json::object()) == "{}");
    CHECK(serialize_args(Json::parse(R"({"a":{"b":1}})")) == R"({"a": {"b": 1}})");
    CHECK(serialize_args(Json::parse(R"({"z":1,"a":[1,2,{"k":null}],"t":true})")) ==
          R"({"z": 1, "a": [1, 2, {"k": null}], "t": true})");
    CHECK(serialize_args(obj({{"s", "caf\xc3\xa9 \xe2\x82\xac \"q\" \\ \n\t"}})) ==
          R"({"s": "caf\u00e9 \u20ac \"q\" \\ \n\t"})");
    CHECK(serialize_args(obj({{"f", 1.5}, {"g", -0.0}, {"h", 1e-7}, {"i", 1e21}, {"j", 0.1}})) ==
          R"({"f": 1.5, "g": -0.0, "h": 1e-07, "i": 1e+21, "j": 0.1})");
    CHECK(serialize_args(obj({{"e", "\xf0\x9f\x98\x80"}})) == R"({"e": "\ud83d\ude00"})");
    CHECK_THROWS_AS(serialize_args(obj({{"x", std::nan("")}})), ValidationError);
  }

  TEST_CASE("substring edge boundary cases at length four") {
    auto edge = [](const std::string& out, const Json& args) {
      const auto t = make_traj("t", {{"a", out}, {"b", "", args}});
      return substring_edges(t).has_direct(0, 1);
    };
    CHECK(edge("id: ABCD", obj({{"x", "ABCD"}})));
    CHECK(edge("ab c", obj({{"x", "ab c"}})));
    CHECK_FALSE(edge("xyz", obj({{"x", "xyz"}})));
    CHECK(edge("ab\n\n c", obj({{"x", "ab c"}})));   // normalisation on both sides
    CHECK_FALSE(edge("ABCD", obj({{"x", "abcd"}})));  // case-sensitive
    CHECK_FALSE(edge("{}", obj({{"x", "{}"}})));
    // Serialisation punctuation counts: the output contains `"k": ` verbatim.
    CHECK(edge(R"(say "k": now)", obj({{"k", 1}})));
  }

  TEST_CASE("property: substring_edges equals the four-window brute force") {
    Rng rng(2024);
    for (int k = 0; k < 3000; ++k) {
      const auto t = oracles::random_text_trajectory(rng, "p" + std::to_string(k));
      const auto g = substring_edges(t);
      REQUIRE(g.direct == oracles::brute_substring_edges(t));
      CHECK(g.closure == oracles::floyd_warshall(g.n, g.direct));
    }
  }

  TEST_CASE("property: longest common substring and maximal hits agree with the table oracle") {
    Rng rng(99);
    for (int k = 0; k < 2000; ++k) {
      const auto a = utf8_decode(oracles::random_text(rng, rng.index(20)));
      const auto b = utf8_decode(oracles::random_text(rng, rng.index(20)));
      const auto lcs = oracles::brute_lcs(a, b);
      CHECK(longest_common_substring(a, b) == lcs);
      const auto hits = maximal_hits(a, b, 2);
      std::size_t best = 0;
      for (const auto& h : hits) {
        REQUIRE(h.out_pos + h.length <= a.size());
        CHECK(h.length >= 2);
        CHECK(b.find(a.substr(h.out_pos, h.length)) != std::u32string::npos);
        best = std::max(best, h.length);
      }
      CHECK(best == (lcs >= 2 ? lcs : 0));
      CHECK(hits.empty() == (lcs < 2));
    }
  }

  TEST_CASE("typed edges need exact values under typed keys") {
    TypedSchema schema;
    schema.bare_entity_tools = {"find_user_id_by_email"};
    const auto t = make_traj("t", {{"get_user", R"({"user_id": "yusuf_rossi_9620"})"},
                                   {"get_orders", "[]", obj({{"user_id", "yusuf_rossi_9620"}})},
                                   {"note", "", obj({{"note", "user yusuf_rossi_9620 called"}})},
                                   {"find_user_id_by_email", "mei_kim_1234"},
                                   {"get_user", "", obj({{"user_id", "mei_kim_1234"}})},
                                   {"partial", "", obj({{"user_id", "yusuf_rossi"}})}});
    const auto g = typed_edges(t, schema);
    CHECK(g.direct == EdgeSet{{0, 1}, {3, 4}});
    // The untyped mention still counts for the substring oracle.
    CHECK(substring_edges(t).has_direct(0, 2));
  }

  TEST_CASE("typed values come from nested output fields and non-JSON outputs only via bare tools") {
    TypedSchema schema;
    const auto t = make_traj("t", {{"a", R"({"order": {"items": [{"item_id": 12345}]}})"},
                                   {"b", "not json item_id 12345"},
                                   {"c", "", obj({{"payload", obj({{"item_id", "12345"}})}})}});
    CHECK(produced_typed_values(t.calls[0], schema) == std::set<std::string>{"12345"});
    CHECK(produced_typed_values(t.calls[1], schema).empty());
    CHECK(consumed_typed_values(t.calls[2], schema) == std::set<std::string>{"12345"});
    CHECK(typed_edges(t, schema).direct == EdgeSet{{0, 2}});
  }

  TEST_CASE("schema JSON round-trip") {
    const auto s = TypedSchema::from_json(Json::parse(R"({"typed_key_suffixes": ["_id", "Ref"], "bare_entity_tools": ["x"]})"));
    CHECK(s.is_typed_key("orderRef"));
    CHECK(s.is_typed_key("user_id"));
    CHECK_FALSE(s.is_typed_key("id"));
    CHECK(s.is_bare_entity("x"));
    CHECK(TypedSchema::from_json(s.to_json()).to_json() == s.to_json());
    CHECK_THROWS_AS(TypedSchema::from_json(Json::parse(R"({"bare_entity_tools": "x"})")), ValidationError);
  }

  TEST_CASE("property: typed edges are a subset of substring edges on generated corpora") {
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
      auto c = helpers::small_config(SignalMode::none, 25, seed);
      c.untyped_reference_rate = 0.3;
      const auto sc = generate_corpus(c);
      const auto schema = synth_schema(c);
      std::vector<DependencyGraph> typed;
      for (std::size_t k = 0; k < sc.corpus.size(); ++k) {
        const auto g = typed_edges(sc.corpus.trajectories[k], schema);
        for (const auto& e : g.direct) CHECK(sc.corpus.graphs[k].has_direct(e.from, e.to));
        typed.push_back(g);
      }
      const auto agree = oracle_agreement(sc.corpus.graphs, typed);
      CHECK(agree.precision == 1.0);
      CHECK(agree.recall <= 1.0);
    }
  }

  TEST_CASE("closure examples and errors") {
    CHECK(transitive_closure({{0, 1}, {1, 2}}, 3) == EdgeSet{{0, 1}, {1, 2}, {0, 2}});
    CHECK(transitive_closure({}, 4).empty());
    const auto g = DependencyGraph::from_direct(3, {{0, 1}, {1, 2}});
    CHECK(g.transitive_only() == EdgeSet{{0, 2}});
    CHECK(g.hop_distance(0, 2) == 2);
    CHECK(g.hop_distance(0, 1) == 1);
    CHECK(g.hop_distance(2, 0) == 0);
    CHECK_THROWS_AS(transitive_closure({{1, 1}}, 3), ValidationError);
    CHECK_THROWS_AS(transitive_closure({{2, 1}}, 3), ValidationError);
    CHECK_THROWS_AS(transitive_closure({{0, 3}}, 3), ValidationError);
  }

  TEST_CASE("property: closure equals Floyd-Warshall, is idempotent and respects order") {
    Rng rng(17);
    for (int k = 0; k < 1000; ++k) {
      const int n = 1 + static_cast<int>(rng.index(10));
      const auto direct = oracles::random_dag(n, rng.uniform(), rng);
      const auto closure = transitive_closure(direct, n);
      REQUIRE(closure == oracles::floyd_warshall(n, direct));
      CHECK(transitive_closure(closure, n) == closure);
      for (const auto& e : closure) CHECK(e.from < e.to);
      for (const auto& e : direct) CHECK(closure.contains(e));
      const auto g = DependencyGraph::from_direct(n, direct);
      for (const auto& e : g.transitive_only()) {
        CHECK_FALSE(g.has_direct(e.from, e.to));
        CHECK(g.hop_distance(e.from, e.to) >= 2);
      }
    }
  }

  TEST_CASE("agreement conventions") {
    const auto a = DependencyGraph::from_direct(4, {{0, 1}, {1, 3}});
    const auto same = oracle_agreement(a, a);
    CHECK(same.precision == 1.0);
    CHECK(same.recall == 1.0);
    CHECK(same.f1 == 1.0);
    CHECK(same.agreement == 1.0);

    const auto empty = oracle_agreement(a, DependencyGraph::from_direct(4, {}));
    CHECK(empty.precision == 1.0);
    CHECK(empty.precision_vacuous);
    CHECK(empty.recall == 0.0);
    CHECK(empty.agreement == doctest::Approx(4.0 / 6.0));

    CHECK_THROWS_AS(oracle_agreement(a, DependencyGraph::from_direct(3, {})), ValidationError);
  }

  TEST_CASE("agreement ratios at the retail audit counts") {
    // 312 typed edges, all inside 414 substring edges, over 1,129 pairs.
    const auto s = AgreementStats::from_counts(312, 0, 102, 1129 - 414);
    CHECK(s.precision == 1.0);
    CHECK(s.recall == doctest::Approx(0.754).epsilon(0.001));
    CHECK(s.f1 == doctest::Approx(0.860).epsilon(0.001));
    CHECK(s.agreement == doctest::Approx(0.910).epsilon(0.001));
  }

  TEST_CASE("minimal pair on a shared three-call prefix") {
    const auto a = make_traj("A", {{"x", ""}, {"y", ""}, {"z", ""}});
    auto b = a;
    b.trajectory_id = "B";
    const auto ga = DependencyGraph::from_direct(3, {{0, 1}});
    const auto gb = DependencyGraph::from_direct(3, {{0, 1}, {0, 2}});
    std::vector<GraphedTrajectory> corpus{{&a, &ga}, {&b, &gb}};
    const auto pairs = select_minimal_pairs(corpus);
    REQUIRE(pairs.size() == 1);
    CHECK(pairs[0].donor_id == "A");
    CHECK(pairs[0].target_id == "B");
    CHECK(pairs[0].shared_prefix_len == 3);
    CHECK(pairs[0].differing_edge == Edge{0, 2});
    CHECK_FALSE(pairs[0].donor_has_edge);

    std::vector<GraphedTrajectory> same{{&a, &ga}, {&b, &ga}};
    CHECK(select_minimal_pairs(same).empty());
  }

  TEST_CASE("an engineered corpus holds exactly five minimal pairs") {
    // Family P: three trajectories over tools p,q,r; family S over s,t.
    std::vector<Trajectory> ts = {
        make_traj("p0", {{"p", ""}, {"q", ""}, {"r", ""}}), make_traj("p1", {{"p", ""}, {"q", ""}, {"r", ""}}),
        make_traj("p2", {{"p", ""}, {"q", ""}, {"r", ""}}), make_traj("s0", {{"s", ""}, {"t", ""}, {"u", ""}}),
        make_traj("s1", {{"s", ""}, {"t", ""}, {"v", ""}}), make_traj("s2", {{"s", ""}, {"t", ""}}),
        make_traj("lone", {{"s", ""}, {"p", ""}}), make_traj("p3", {{"p", ""}, {"q", ""}, {"r", ""}})};
    std::vector<DependencyGraph> gs = {
        DependencyGraph::from_direct(3, {{0, 1}}),          // p0
        DependencyGraph::from_direct(3, {{0, 1}, {1, 2}}),  // p1: one away from p0
        DependencyGraph::from_direct(3, {{0, 1}, {0, 2}}),  // p2: one from p0, two from p1
        DependencyGraph::from_direct(3, {{0, 1}}),          // s0
        DependencyGraph::from_direct(3, {}),                // s1: prefix (s,t) differs by (0,1)
        DependencyGraph::from_direct(2, {{0, 1}}),          // s2: equal to s0 on (s,t), differs from s1
        DependencyGraph::from_direct(2, {}),
        DependencyGraph::from_direct(3, {{1, 2}})};         // p3: one away from p1 only
    std::vector<GraphedTrajectory> corpus;
    for (std::size_t k = 0; k < ts.size(); ++k) corpus.push_back({&ts[k], &gs[k]});
    const auto pairs = select_minimal_pairs(corpus);
    CHECK(brute_minimal_pair_count(ts, gs) == 5);
    CHECK(pairs.size() == 5);
  }

  TEST_CASE("property: minimal pairs match the exhaustive scan on random corpora") {
    Rng rng(31);
    for (int rep = 0; rep < 200; ++rep) {
      std::vector<Trajectory> ts;
      std::vector<DependencyGraph> gs;
      const auto count = 2 + rng.index(8);
      for (std::size_t k = 0; k < count; ++k) {
        const int n = 2 + static_cast<int>(rng.index(4));
        std::vector<helpers::CallSpec> calls;
        for (int c = 0; c < n; ++c) calls.push_back({rng.bernoulli(0.85) ? "t" + std::to_string(c) : "w", ""});
        ts.push_back(make_traj("m" + std::to_string(k), calls));
        gs.push_back(DependencyGraph::from_direct(n, oracles::random_dag(n, 0.3, rng)));
      }
      std::vector<GraphedTrajectory> corpus;
      for (std::size_t k = 0; k < ts.size(); ++k) corpus.push_back({&ts[k], &gs[k]});
      const auto pairs = select_minimal_pairs(corpus);
      REQUIRE(pairs.size() == brute_minimal_pair_count(ts, gs));
      for (const auto& p : pairs) {
        CHECK(p.donor_index < p.target_index);
        CHECK(p.differing_edge.to < static_cast<int>(p.shared_prefix_len));
        CHECK(gs[p.donor_index].has_direct(p.differing_edge.from, p.differing_edge.to) == p.donor_has_edge);
        CHECK(gs[p.target_index].has_direct(p.differing_edge.from, p.differing_edge.to) != p.donor_has_edge);
      }
    }
  }

  TEST_CASE("edge lists export per trajectory") {
    const auto j = graph_to_json("t", DependencyGraph::from_direct(3, {{0, 1}, {1, 2}}));
    CHECK(j["trajectory_id"] == "t");
    CHECK(j["direct_edges"].size() == 2);
    CHECK(j["closure_edges"].size() == 3);
    CHECK(j["transitive_only_edges"] == Json::parse("[[0, 2]]"));
  }
}
