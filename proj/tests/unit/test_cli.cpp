#include <fstream>
#include <map>
#include <sstream>

#include "doctest.h"
#include "helpers.hpp"
#include "tcprobe/cli.hpp"
#include "tcprobe/errors.hpp"

using namespace tcprobe;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  int code = -1;
  std::string out;
  std::string err;
  /// Run directory printed on success.
  fs::path dir() const { return fs::path(out.substr(0, out.find('\n'))); }
};

Outcome run(std::vector<std::string> args, const std::map<std::string, std::string>& env = {}) {
  args.insert(args.begin(), "tcprobe");
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  std::ostringstream out, err;
  Outcome o;
  o.code = cli::main_entry(static_cast<int>(argv.size()), argv.data(), out, err, [&](const char* name) -> const char* {
    const auto it = env.find(name);
    return it == env.end() ? nullptr : it->second.c_str();
  });
  o.out = out.str();
  o.err = err.str();
  return o;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

Json read_json(const fs::path& p) { return Json::parse(slurp(p)); }

std::map<std::string, std::string> tree(const fs::path& root) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (e.is_regular_file()) files[fs::relative(e.path(), root).string()] = slurp(e.path());
  }
  return files;
}

/// Generated corpus directory for a small synthetic config.
fs::path synth(const fs::path& out, const std::string& mode, const std::string& n, const std::string& seed,
               std::vector<std::string> extra = {}) {
  std::vector<std::string> args{"synth", "--mode", mode, "--n-trajectories", n, "--hidden-dim", "16",
                                "--signal", "2.0", "--seed", seed, "--out", out.string()};
  args.insert(args.end(), extra.begin(), extra.end());
  const auto r = run(args);
  REQUIRE_MESSAGE(r.code == 0, r.err);
  return r.dir();
}

void write_file(const fs::path& p, const std::string& text) { std::ofstream(p) << text; }

}  // namespace

TEST_SUITE("cli") {
  TEST_CASE("parameters layer as defaults < config file < environment < flags") {
    const auto dir = helpers::scratch_dir("cli-precedence");
    write_file(dir / "cfg.json", R"({"n_trajectories": 5, "hidden_dim": 2, "signal": 0.5})");
    const std::map<std::string, std::string> env{{"TCPROBE_N_TRAJECTORIES", "6"}, {"TCPROBE_SIGNAL", "0.75"}};
    const std::vector<std::string> base{"synth", "--config", (dir / "cfg.json").string(), "--out", dir.string()};

    auto file_only = run(base);
    REQUIRE(file_only.code == 0);
    auto v = read_json(file_only.dir() / "config.json")["values"];
    CHECK(v["n_trajectories"] == 5);
    CHECK(v["signal"] == 0.5);
    CHECK(v["noise_sd"] == 1.0);  // default

    auto with_env = run(base, env);
    REQUIRE(with_env.code == 0);
    v = read_json(with_env.dir() / "config.json")["values"];
    CHECK(v["n_trajectories"] == 6);
    CHECK(v["signal"] == 0.75);

    auto args = base;
    args.insert(args.end(), {"--n-trajectories", "7"});
    auto with_flag = run(args, env);
    REQUIRE(with_flag.code == 0);
    v = read_json(with_flag.dir() / "config.json")["values"];
    CHECK(v["n_trajectories"] == 7);
    CHECK(v["signal"] == 0.75);
    CHECK(read_json(with_flag.dir() / "summary.json")["corpus"]["n_trajectories"] == 7);
  }

  TEST_CASE("RunConfig checks keys and types") {
    auto c = cli::RunConfig::defaults("probe");
    CHECK_THROWS_AS(c.merge(Json{{"n_perm", 3}}, "file"), ValidationError);
    CHECK_THROWS_AS(c.merge(Json{{"n_perms", "three"}}, "file"), ValidationError);
    CHECK_THROWS_AS(c.merge(Json::array(), "file"), ValidationError);
    c.merge(Json{{"C", 1}}, "file");
    CHECK(c.real("C") == 1.0);
    c.set_from_text("tasks", "direct", "flag");
    CHECK(c.strings("tasks") == std::vector<std::string>{"direct"});
    c.set_from_text("layers", "0, 14", "flag");
    CHECK(c.ints("layers") == std::vector<int>{0, 14});
    c.set_from_text("layers", "[28]", "flag");
    CHECK(c.ints("layers") == std::vector<int>{28});
    CHECK_THROWS_AS(c.set_from_text("layers", "a,b", "flag"), ValidationError);
    c.set_from_text("strata", "off", "flag");
    CHECK_FALSE(c.flag("strata"));
    CHECK_THROWS_AS(c.set_from_text("strata", "maybe", "flag"), ValidationError);
    CHECK_THROWS_AS(cli::RunConfig::defaults("train"), UsageError);

    // jobs and out do not enter the run id; everything else does.
    auto a = cli::RunConfig::defaults("probe");
    auto b = a;
    b.set_from_text("jobs", "3", "flag");
    b.set_from_text("out", "elsewhere", "flag");
    CHECK(a.run_id() == b.run_id());
    CHECK(a.run_id().size() == 16);
    b.set_from_text("seed", "43", "flag");
    CHECK(a.run_id() != b.run_id());
  }

  TEST_CASE("usage and validation failures exit with 2") {
    const auto dir = helpers::scratch_dir("cli-errors");
    write_file(dir / "unknown.json", R"({"n_trajectoriez": 5})");
    write_file(dir / "broken.json", R"({"n_trajectories": )");
    write_file(dir / "empty.jsonl", "");
    const auto o = dir.string();
    CHECK(run({"synth", "--config", (dir / "unknown.json").string(), "--out", o}).code == 2);
    CHECK(run({"synth", "--config", (dir / "broken.json").string(), "--out", o}).code == 2);
    CHECK(run({"synth", "--config", (dir / "missing.json").string(), "--out", o}).code == 2);
    CHECK(run({"synth", "--bogus", "1", "--out", o}).code == 2);
    CHECK(run({"synth", "--n-trajectories", "lots", "--out", o}).code == 2);
    CHECK(run({"synth", "--min-calls", "1", "--out", o}).code == 2);
    CHECK(run({"synth", "--mode", "loud", "--out", o}).code == 2);
    CHECK(run({}).code == 2);
    const auto typed = run({"oracle", (dir / "empty.jsonl").string(), "--oracle", "typed", "--out", o});
    CHECK(typed.code == 2);
    CHECK(typed.err.find("--schema") != std::string::npos);
    CHECK(run({"probe", "--out", o}).code == 2);
    CHECK(run({"controls", "--log", (dir / "empty.jsonl").string(), "--random-init", "--out", o}).code == 2);
    CHECK(run({"sweep", "--out", o}).code == 2);
    CHECK(run({"probe", "--log", (dir / "empty.jsonl").string(), "--variant", "V9", "--out", o}).code == 2);
    CHECK(run({"probe", "--log", (dir / "empty.jsonl").string(), "--tasks", "indirect", "--out", o}).code == 2);
  }

  TEST_CASE("an empty log is a valid oracle run") {
    const auto dir = helpers::scratch_dir("cli-empty");
    write_file(dir / "empty.jsonl", "");
    const auto r = run({"oracle", (dir / "empty.jsonl").string(), "--out", dir.string()});
    REQUIRE(r.code == 0);
    const auto s = read_json(r.dir() / "summary.json");
    CHECK(s["n_trajectories"] == 0);
    CHECK(s["n_direct_edges"] == 0);
    CHECK(slurp(r.dir() / "edges.jsonl").empty());
    CHECK(slurp(r.dir() / "edges.csv") == "trajectory_id,from,to,kind\n");
  }

  TEST_CASE("oracle on a generated corpus reports typed agreement") {
    const auto dir = helpers::scratch_dir("cli-oracle");
    const auto corpus = synth(dir, "planted_linear", "10", "3") / "corpus";
    const auto r = run({"oracle", "--corpus", corpus.string(), "--oracle", "typed", "--schema",
                        (corpus / "schema.json").string(), "--out", dir.string()});
    REQUIRE_MESSAGE(r.code == 0, r.err);
    const auto s = read_json(r.dir() / "summary.json");
    CHECK(s["n_trajectories"] == 10);
    CHECK(s["typed_vs_substring"]["precision"] == 1.0);
  }

  TEST_CASE("probe runs are byte-identical, echo their config and mark untestable tasks") {
    const auto dir = helpers::scratch_dir("cli-probe");
    const auto corpus = synth(dir, "planted_linear", "30", "5") / "corpus";
    const std::vector<std::string> args{"probe", "--corpus", corpus.string(), "--n-resamples", "100",
                                        "--n-perms", "5", "--out", (dir / "a").string()};
    const auto a = run(args);
    REQUIRE_MESSAGE(a.code == 0, a.err);
    auto args_b = args;
    args_b.back() = (dir / "b").string();
    args_b.insert(args_b.end(), {"--jobs", "3"});
    const auto b = run(args_b);
    REQUIRE(b.code == 0);
    CHECK(a.dir().filename() == b.dir().filename());
    const auto ta = tree(a.dir());
    CHECK(ta.size() >= 5);
    const auto tb = tree(b.dir());
    for (const auto& [name, bytes] : ta) {
      if (name == "config.json") continue;  // records jobs and out
      CHECK_MESSAGE(tb.at(name) == bytes, name);
    }

    const auto cfg = read_json(a.dir() / "config.json");
    CHECK(cfg["command"] == "probe");
    CHECK(cfg["run_id"] == a.dir().filename().string().substr(6));
    CHECK(cfg["values"]["n_resamples"] == 100);
    CHECK(cfg["values"]["corpus"] == corpus.string());

    const auto rep = read_json(a.dir() / "report.json");
    REQUIRE(rep["evaluations"].size() == 2);
    CHECK(rep["evaluations"][0]["testable"] == true);
    CHECK(rep["evaluations"][1]["testable"] == false);
    const auto csv = slurp(a.dir() / "summary.csv");
    CHECK(csv.find("transitive_only,residual,false") != std::string::npos);
    CHECK(csv.find("no positive pairs") != std::string::npos);
  }

  TEST_CASE("controls without a random-init directory exit 2, with one they report the gap") {
    const auto dir = helpers::scratch_dir("cli-controls");
    const auto corpus = synth(dir, "planted_linear", "20", "6") / "corpus";
    const auto noise = synth(dir, "none", "20", "6") / "corpus";
    const std::vector<std::string> base{"controls", "--corpus", corpus.string(), "--n-perms", "5",
                                        "--n-resamples", "50", "--out", dir.string()};
    auto args = base;
    args.push_back("--random-init");
    CHECK(run(args).code == 2);
    args.insert(args.end(), {"--random-init-dir", (noise / "activations").string()});
    const auto r = run(args);
    REQUIRE_MESSAGE(r.code == 0, r.err);
    const auto rep = read_json(r.dir() / "report.json");
    CHECK(rep.contains("random_init"));
    CHECK(rep["trained_minus_random"].get<double>() > 0.2);
    CHECK(rep["baselines"].contains("surface"));
  }

  TEST_CASE("identity patching gives zero deltas") {
    const auto dir = helpers::scratch_dir("cli-patch");
    const auto corpus = synth(dir, "donor_contrast", "20", "8") / "corpus";
    const auto r = run({"patch", "--corpus", corpus.string(), "--identity", "--patch-layers", "41,64",
                        "--n-resamples", "50", "--out", dir.string()});
    REQUIRE_MESSAGE(r.code == 0, r.err);
    const auto rep = read_json(r.dir() / "report.json");
    CHECK(rep["n_pairs"].get<int>() >= 10);
    REQUIRE(rep["layers"].size() == 2);
    for (const auto& l : rep["layers"]) {
      CHECK(l["mean"] == 0.0);
      for (const auto& d : l["per_pair_delta"]) CHECK(d == 0.0);
    }
  }

  TEST_CASE("sweep over three corpora gives three rows and a trend") {
    const auto dir = helpers::scratch_dir("cli-sweep");
    std::string list;
    for (const auto& [mode, seed] : {std::pair{"planted_linear", "1"}, {"positional_only", "2"}, {"hop_graded", "3"}}) {
      list += (list.empty() ? "" : ",") + (synth(dir, mode, "20", seed) / "corpus").string();
    }
    const auto r = run({"sweep", "--corpora", list, "--min-groups", "10", "--n-resamples", "50", "--out", dir.string()});
    REQUIRE_MESSAGE(r.code == 0, r.err);
    const auto rep = read_json(r.dir() / "report.json");
    CHECK(rep["rows"].size() == 3);
    CHECK(rep["spearman_rho_baseline_vs_delta"].is_number());
    const auto csv = slurp(r.dir() / "sweep.csv");
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 4);
  }

  TEST_CASE("structural counterfactuals shift the decoded plan") {
    const auto dir = helpers::scratch_dir("cli-counterfactual");
    const auto root = synth(dir, "planted_linear", "30", "9", {"--counterfactual", "structural", "--min-calls", "4"});
    const auto r = run({"counterfactual", "--corpus", (root / "corpus").string(), "--counterpart",
                        (root / "counterpart").string(), "--group-by", "task", "--out", dir.string()});
    REQUIRE_MESSAGE(r.code == 0, r.err);
    const auto rep = read_json(r.dir() / "report.json");
    CHECK(rep["n_pairs"] == 30);
    CHECK(rep["plan_shift"]["cohens_d"]["d"].get<double>() > 0.5);

    const auto d = run({"decode", "--corpus", (root / "corpus").string(), "--out", dir.string()});
    REQUIRE_MESSAGE(d.code == 0, d.err);
    CHECK(read_json(d.dir() / "report.json").contains("transitive_consistency"));
  }
}
