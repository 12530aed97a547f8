#include <fstream>
#include <map>
#include <ostream>

#include <CLI11.hpp>

#include "tcprobe/cli.hpp"
#include "tcprobe/errors.hpp"
#include "tcprobe/synth.hpp"

namespace tcprobe::cli {

namespace fs = std::filesystem;

namespace {

void write_json(const fs::path& path, const Json& j) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

// Shortest round-trip text; NaN and absent values render empty.
std::string num(double v) { return std::isfinite(v) ? Json(v).dump() : std::string(); }

class Csv {
 public:
  Csv(const fs::path& path, const std::string& header) : out_(path) {
    if (!out_) throw std::runtime_error("cannot write " + path.string());
    out_ << header << '\n';
  }
  template <class... T>
  void row(const T&... cells) {
    bool first = true;
    ((out_ << (first ? "" : ",") << cells, first = false), ...);
    out_ << '\n';
  }

 private:
  std::ofstream out_;
};

struct CorpusPaths {
  fs::path log;
  fs::path activations;
};

CorpusPaths corpus_paths(const RunConfig& c, const std::string& dir_key, const std::string& log_key,
                         const std::string& act_key) {
  CorpusPaths p;
  const fs::path dir = c.str(dir_key);
  p.log = c.str(log_key).empty() ? (dir.empty() ? fs::path() : dir / "log.jsonl") : fs::path(c.str(log_key));
  p.activations =
      c.str(act_key).empty() ? (dir.empty() ? fs::path() : dir / "activations") : fs::path(c.str(act_key));
  if (p.log.empty()) throw UsageError(c.command + ": give --" + dir_key + " or --" + log_key);
  return p;
}

CorpusPaths main_paths(const RunConfig& c) { return corpus_paths(c, "corpus", "log", "activations"); }

void check_oracle(std::string_view oracle, const fs::path& schema) {
  if (oracle != "substring" && oracle != "typed") {
    throw UsageError("--oracle must be substring or typed, got '" + std::string(oracle) + "'");
  }
  if (oracle == "typed" && schema.empty()) throw UsageError("--oracle typed requires --schema");
}

std::optional<TypedSchema> schema_for(std::string_view oracle, const fs::path& schema) {
  check_oracle(oracle, schema);
  if (oracle == "substring") return std::nullopt;
  return load_schema(schema);
}

DependencyGraph oracle_graph(const Trajectory& t, const std::optional<TypedSchema>& schema) {
  return schema ? typed_edges(t, *schema) : substring_edges(t);
}

EvalOptions eval_options(const RunConfig& c) {
  EvalOptions o;
  o.logo.probe.C = c.real("C");
  o.logo.probe.grad_tol = c.real("grad_tol");
  o.logo.probe.max_iter = static_cast<int>(c.integer("max_iter"));
  o.logo.exec.jobs = static_cast<int>(c.integer("jobs"));
  o.n_resamples = static_cast<std::size_t>(c.integer("n_resamples"));
  o.seed = static_cast<std::uint64_t>(c.integer("seed"));
  return o;
}

FeatureVariant variant_of(const RunConfig& c) {
  const auto layers = c.ints("layers");
  return FeatureVariant::named(c.str("variant"), layers.empty() ? kDefaultLayers : layers);
}

GroupBy group_by_of(const RunConfig& c) {
  const auto g = c.str("group_by");
  if (g == "trajectory") return GroupBy::trajectory;
  if (g == "task") return GroupBy::task;
  throw ValidationError("group_by must be trajectory or task, got '" + g + "'");
}

Corpus load_main(const RunConfig& c) {
  const auto p = main_paths(c);
  return load_corpus(p.log, p.activations, c.str("oracle"), c.str("schema"));
}

Json eval_row_json(const std::string& name, const EvalReport& r) {
  Json j = r.to_json();
  j["name"] = name;
  return j;
}

void eval_csv_row(Csv& csv, const std::string& name, const EvalReport& r) {
  const bool ok = r.testable && r.logo.auroc_defined;
  csv.row(name, to_string(r.task), r.family, r.testable ? "true" : "false", r.n_pairs, r.n_positive, r.n_groups,
          ok ? num(r.logo.auroc) : std::string("n/a"), r.ci ? num(r.ci->lo) : std::string(),
          r.ci ? num(r.ci->hi) : std::string(), r.permutation ? num(r.permutation->p_value) : std::string(),
          r.permutation ? num(r.permutation->p_smoothed) : std::string(), r.untestable_reason);
}

const char* kEvalHeader = "name,task,family,testable,n_pairs,n_positive,n_groups,auroc,ci_lo,ci_hi,p_value,p_smoothed,note";

// ---------------------------------------------------------------------------

void cmd_oracle(const RunConfig& c, const fs::path& dir) {
  const auto paths = main_paths(c);
  const auto schema = schema_for(c.str("oracle"), c.str("schema"));
  const auto trajectories = parse_log(paths.log);
  std::ofstream edges(dir / "edges.jsonl");
  Csv csv(dir / "edges.csv", "trajectory_id,from,to,kind");
  std::size_t n_direct = 0, n_trans = 0;
  std::vector<DependencyGraph> typed, substring;
  for (const auto& t : trajectories) {
    const auto g = oracle_graph(t, schema);
    edges << graph_to_json(t.trajectory_id, g).dump() << '\n';
    for (const auto& e : g.direct) csv.row(t.trajectory_id, e.from, e.to, "direct");
    const auto trans = g.transitive_only();
    for (const auto& e : trans) csv.row(t.trajectory_id, e.from, e.to, "transitive_only");
    n_direct += g.direct.size();
    n_trans += trans.size();
    if (schema) {
      typed.push_back(g);
      substring.push_back(substring_edges(t));
    }
  }
  Json summary = {{"oracle", c.str("oracle")},
                  {"n_trajectories", trajectories.size()},
                  {"n_direct_edges", n_direct},
                  {"n_transitive_only_edges", n_trans}};
  if (schema) {
    const auto a = oracle_agreement(substring, typed);
    summary["typed_vs_substring"] = {{"precision", a.precision}, {"recall", a.recall}, {"f1", a.f1},
                                     {"agreement", a.agreement}, {"precision_vacuous", a.precision_vacuous}};
  }
  write_json(dir / "summary.json", summary);
}

void cmd_probe(const RunConfig& c, const fs::path& dir) {
  const auto corpus = load_main(c);
  const auto variant = variant_of(c);
  const auto group_by = group_by_of(c);
  const auto ds = corpus.dataset(variant, group_by);
  const auto family = FeatureFamily::parse(c.str("family"));
  const auto baseline = FeatureFamily::parse(c.str("baseline"));
  auto opts = eval_options(c);
  opts.n_perms = static_cast<std::size_t>(c.integer("n_perms"));

  Json report = Json::object();
  report["n_trajectories"] = corpus.size();
  report["variant"] = variant.to_json();
  Json evals = Json::array(), gaps = Json::array();
  Csv summary(dir / "summary.csv", kEvalHeader);
  Csv gap_csv(dir / "conditional_gaps.csv", "task,baseline,residual,baseline_auroc,joint_auroc,delta,lo,hi,p_delta_le_0");
  std::map<std::string, std::vector<double>> scores;
  for (const auto& task_name : c.strings("tasks")) {
    const Task task = task_from_string(task_name);
    auto task_opts = opts;
    task_opts.logo.score_reversed = task == Task::direct && family.residual && variant.reversible();
    const auto rep = evaluate(ds, task, family, task_opts);
    evals.push_back(eval_row_json(task_name, rep));
    eval_csv_row(summary, task_name, rep);
    if (!rep.testable) continue;
    scores[task_name] = rep.logo.oof_scores;
    if (task == Task::direct && c.flag("strata")) {
      const auto labels = task_labels(ds, task);
      report["strata"] = stratified_report(ds, labels, rep.logo.oof_scores, rep.logo.reversed_scores).to_json();
    }
    if (c.flag("conditional")) {
      const auto gap = conditional_gap(ds, task, family, baseline, opts);
      Json g = gap.to_json();
      g["task"] = task_name;
      gaps.push_back(g);
      gap_csv.row(task_name, gap.baseline, gap.residual, num(gap.baseline_run.auroc), num(gap.joint_run.auroc),
                  num(gap.delta.delta.point), num(gap.delta.delta.lo), num(gap.delta.delta.hi),
                  num(gap.delta.p_delta_le_0));
    }
  }
  report["evaluations"] = std::move(evals);
  report["conditional_gaps"] = std::move(gaps);
  if (c.flag("layer_profile")) {
    Json prof = Json::array();
    Csv csv(dir / "layer_profile.csv", "layer,raw_auroc,resolved_auroc,flipped");
    for (const auto& e : per_layer_profile(corpus, variant.layer_ids, Task::direct, group_by, opts.logo)) {
      prof.push_back({{"layer", e.layer}, {"raw_auroc", e.raw_auroc}, {"resolved_auroc", e.resolved_auroc},
                      {"flipped", e.flipped}});
      csv.row(e.layer, num(e.raw_auroc), num(e.resolved_auroc), e.flipped ? "true" : "false");
    }
    report["layer_profile"] = std::move(prof);
  }
  {
    Csv csv(dir / "scores.csv", "trajectory_id,i,j,hop,label_direct,label_transitive_only,score_direct,score_transitive_only");
    const auto col = [&](const char* name, std::size_t r) {
      auto it = scores.find(name);
      return it == scores.end() ? std::string() : num(it->second[r]);
    };
    for (std::size_t r = 0; r < ds.examples.size(); ++r) {
      const auto& e = ds.examples[r];
      csv.row(e.trajectory_id, e.i, e.j, e.hop, e.label_direct ? 1 : 0, e.label_transitive_only ? 1 : 0,
              col("direct", r), col("transitive_only", r));
    }
  }
  if (c.flag("export_features")) export_residual_features(dir / "features", ds);
  write_json(dir / "report.json", report);
}

void cmd_controls(const RunConfig& c, const fs::path& dir) {
  const auto corpus = load_main(c);
  const auto variant = variant_of(c);
  const auto ds = corpus.dataset(variant, group_by_of(c));
  const Task task = task_from_string(c.str("task"));
  const auto opts = eval_options(c);
  auto perm_opts = opts;
  perm_opts.n_perms = static_cast<std::size_t>(c.integer("n_perms"));

  Json report = Json::object();
  Csv csv(dir / "controls.csv", kEvalHeader);
  const auto residual = evaluate(ds, task, FeatureFamily::residual_only(), perm_opts);
  report["residual"] = eval_row_json("residual", residual);
  eval_csv_row(csv, "residual", residual);
  if (residual.permutation) {
    write_values_csv(dir / "permutation_null.csv", "null_auroc", residual.permutation->null_values);
  }
  const std::vector<std::pair<std::string, FeatureFamily>> baselines = {
      {"positional", FeatureFamily::parse("positional")},
      {"scaffold", FeatureFamily::parse("scaffold")},
      {"surface", FeatureFamily::parse("surface")}};
  Json base = Json::object(), gaps = Json::array();
  for (const auto& [name, fam] : baselines) {
    const auto r = evaluate(ds, task, fam, opts);
    base[name] = eval_row_json(name, r);
    eval_csv_row(csv, name, r);
    if (residual.testable && r.testable) {
      gaps.push_back(conditional_gap(ds, task, FeatureFamily::residual_only(), fam, opts).to_json());
    }
  }
  report["baselines"] = std::move(base);
  report["conditional_gaps"] = std::move(gaps);
  if (c.flag("random_init")) {
    const auto p = main_paths(c);
    const auto random = load_corpus(p.log, c.str("random_init_dir"), c.str("oracle"), c.str("schema"));
    const auto r = evaluate(random.dataset(variant, group_by_of(c)), task, FeatureFamily::residual_only(), opts);
    report["random_init"] = eval_row_json("random_init", r);
    eval_csv_row(csv, "random_init", r);
    if (residual.testable && r.testable) report["trained_minus_random"] = residual.logo.auroc - r.logo.auroc;
  }
  write_json(dir / "report.json", report);
}

void cmd_decode(const RunConfig& c, const fs::path& dir) {
  const auto corpus = load_main(c);
  const auto opts = eval_options(c);
  const auto dec = decode_corpus(corpus, variant_of(c), FeatureFamily::parse(c.str("family")), opts.logo, opts.seed);
  std::map<std::string, std::size_t, std::less<>> index;
  for (std::size_t k = 0; k < corpus.size(); ++k) index.emplace(corpus.trajectories[k].trajectory_id, k);
  Csv csv(dir / "sd.csv", "trajectory_id,n_agent,decoded_edges,oracle_edges,sd_to_oracle,acyclic");
  for (std::size_t t = 0; t < dec.decoded.size(); ++t) {
    const auto k = index.at(dec.trajectory_ids[t]);
    csv.row(dec.trajectory_ids[t], corpus.trajectories[k].n_agent(), dec.decoded[t].graph.direct.size(),
            corpus.graphs[k].direct.size(), dec.sd_to_oracle[t], dec.decoded[t].acyclic ? "true" : "false");
  }
  write_json(dir / "report.json", dec.to_json());
}

void cmd_counterfactual(const RunConfig& c, const fs::path& dir) {
  const auto clean = load_main(c);
  const auto p = corpus_paths(c, "counterpart", "counterpart_log", "counterpart_activations");
  const auto other = load_corpus(p.log, p.activations, c.str("oracle"), c.str("schema"));
  const auto opts = eval_options(c);
  const auto rep =
      counterfactual_analysis(clean, other, variant_of(c), FeatureFamily::parse(c.str("family")), opts.logo);
  Csv csv(dir / "sd.csv", "pair,sd_clean,sd_counterpart,sd_shift,plan_shift");
  for (std::size_t k = 0; k < rep.n_pairs; ++k) {
    csv.row(k, rep.decoded_vs_oracle.sd_clean[k], rep.decoded_vs_oracle.sd_counterpart[k],
            num(rep.decoded_vs_oracle.shift[k]), num(rep.plan_shift.shift[k]));
  }
  write_json(dir / "report.json", rep.to_json());
}

void cmd_patch(const RunConfig& c, const fs::path& dir) {
  const auto corpus = load_main(c);
  const auto variant = variant_of(c);
  const auto opts = eval_options(c);
  const auto ds = corpus.dataset(variant);
  const auto labels = task_labels(ds, Task::direct);
  const auto probe = fit_full(fixed_design(ds, FeatureFamily::residual_only()), labels, opts.logo.probe);
  const auto graphed = corpus.graphed();
  auto pairs = select_minimal_pairs(graphed);
  if (c.flag("identity")) {
    for (auto& p : pairs) {
      p.donor_index = p.target_index;
      p.donor_id = p.target_id;
    }
  }
  auto layers = c.ints("patch_layers");
  if (layers.empty() && !corpus.stores.empty()) layers = corpus.stores.front().layer_ids;

  Json report = Json::object();
  report["n_pairs"] = pairs.size();
  report["identity"] = c.flag("identity");
  Json listed = Json::array();
  for (const auto& p : pairs) {
    listed.push_back({{"donor", p.donor_id}, {"target", p.target_id},
                      {"edge", Json::array({p.differing_edge.from, p.differing_edge.to})},
                      {"donor_has_edge", p.donor_has_edge}});
  }
  report["pairs"] = std::move(listed);
  Json per_layer = Json::array();
  Csv csv(dir / "patch.csv", "layer,n_pairs,mean,ci_lo,ci_hi,frac_toward_donor,structural_zero");
  Csv deltas(dir / "deltas.csv", "layer,pair,delta");
  if (!pairs.empty()) {
    for (int layer : layers) {
      const auto r = patch_estimate(pairs, corpus, probe, variant, layer, opts.n_resamples, opts.seed, opts.logo.exec);
      per_layer.push_back(r.to_json());
      csv.row(layer, pairs.size(), num(r.mean), num(r.ci.lo), num(r.ci.hi), num(r.frac_toward_donor),
              r.structural_zero ? "true" : "false");
      for (std::size_t k = 0; k < r.per_pair_delta.size(); ++k) deltas.row(layer, k, num(r.per_pair_delta[k]));
    }
  }
  report["layers"] = std::move(per_layer);
  write_json(dir / "report.json", report);
}

void cmd_sweep(const RunConfig& c, const fs::path& dir) {
  const auto corpora = c.strings("corpora");
  if (corpora.empty()) throw UsageError("sweep: give --corpora DIR[,DIR...]");
  std::vector<NamedDataset> named;
  const auto variant = variant_of(c);
  for (const auto& root : corpora) {
    const fs::path p(root);
    const auto corpus = load_corpus(p / "log.jsonl", p / "activations", c.str("oracle"), c.str("schema"));
    named.push_back({root, corpus.dataset(variant, group_by_of(c))});
  }
  SweepConfig sc;
  sc.min_transitive_positives = static_cast<std::size_t>(c.integer("min_transitive_positives"));
  sc.min_groups = static_cast<std::size_t>(c.integer("min_groups"));
  sc.position_trivial_baseline = c.real("position_trivial_baseline");
  sc.eval = eval_options(c);
  const auto table = benchmark_sweep(named, sc);
  write_json(dir / "report.json", table.to_json());
  std::ofstream(dir / "sweep.csv") << table.to_csv();
}

SynthConfig synth_config_of(const RunConfig& c) {
  SynthConfig s;
  s.mode = signal_mode_from_string(c.str("mode"));
  s.n_trajectories = static_cast<std::size_t>(c.integer("n_trajectories"));
  s.min_calls = static_cast<int>(c.integer("min_calls"));
  s.max_calls = static_cast<int>(c.integer("max_calls"));
  s.hidden_dim = static_cast<std::size_t>(c.integer("hidden_dim"));
  s.layer_ids = c.ints("layer_ids");
  s.edge_density = c.real("edge_density");
  if (c.integer("planted_layer") >= 0) s.planted_layer = static_cast<int>(c.integer("planted_layer"));
  s.signal = c.real("signal");
  s.noise_sd = c.real("noise_sd");
  s.seed = static_cast<std::uint64_t>(c.integer("seed"));
  s.n_tools = static_cast<std::size_t>(c.integer("n_tools"));
  s.untyped_reference_rate = c.real("untyped_reference_rate");
  s.validate();
  return s;
}

Json synth_manifest(const SynthCorpus& sc) {
  return {{"config", sc.config.to_json()}, {"u", sc.u}, {"v", sc.v}};
}

Json corpus_summary(const Corpus& corpus) {
  std::size_t direct = 0, trans = 0;
  for (const auto& g : corpus.graphs) {
    direct += g.direct.size();
    trans += g.transitive_only().size();
  }
  return {{"n_trajectories", corpus.size()}, {"n_direct_edges", direct}, {"n_transitive_only_edges", trans}};
}

void cmd_synth(const RunConfig& c, const fs::path& dir) {
  const auto cfg = synth_config_of(c);
  const Exec exec{static_cast<int>(c.integer("jobs"))};
  const auto schema = synth_schema(cfg);
  const auto kind = c.str("counterfactual");
  Json summary = Json::object();
  if (kind.empty()) {
    const auto sc = generate_corpus(cfg, exec);
    write_corpus(dir / "corpus", sc.corpus, synth_manifest(sc), schema);
    summary["corpus"] = corpus_summary(sc.corpus);
  } else {
    CounterfactualKind k;
    if (kind == "value") {
      k = CounterfactualKind::value;
    } else if (kind == "structural") {
      k = CounterfactualKind::structural;
    } else {
      throw ValidationError("counterfactual must be value or structural, got '" + kind + "'");
    }
    const auto cf = generate_counterfactual(cfg, k, exec);
    write_corpus(dir / "corpus", cf.clean.corpus, synth_manifest(cf.clean), schema);
    write_corpus(dir / "counterpart", cf.counterpart, synth_manifest(cf.clean), schema);
    summary["corpus"] = corpus_summary(cf.clean.corpus);
    summary["counterpart"] = corpus_summary(cf.counterpart);
  }
  write_json(dir / "summary.json", summary);
}

// Usage errors are raised before the run directory exists.
void precheck(const RunConfig& c) {
  if (c.values.contains("oracle")) check_oracle(c.str("oracle"), c.str("schema"));
  if (c.command == "controls" && c.flag("random_init") && c.str("random_init_dir").empty()) {
    throw UsageError("--random-init requires --random-init-dir");
  }
  if (c.values.contains("corpus")) main_paths(c);
  if (c.command == "counterfactual") corpus_paths(c, "counterpart", "counterpart_log", "counterpart_activations");
  if (c.values.contains("tasks")) {
    for (const auto& t : c.strings("tasks")) task_from_string(t);
  }
  if (c.values.contains("family")) FeatureFamily::parse(c.str("family"));
  if (c.values.contains("variant")) variant_of(c);
  if (c.values.contains("group_by")) group_by_of(c);
  if (c.command == "synth") synth_config_of(c);
}

}  // namespace

Corpus load_corpus(const fs::path& log, const fs::path& activations, std::string_view oracle,
                   const fs::path& schema_path) {
  const auto schema = schema_for(oracle, schema_path);
  Corpus corpus;
  corpus.trajectories = filter_probeable(parse_log(log));
  for (const auto& t : corpus.trajectories) {
    const auto path = activation_path(activations, t.trajectory_id);
    if (!fs::exists(path)) {
      throw ValidationError("missing activation file for trajectory '" + t.trajectory_id + "': " + path.string());
    }
    corpus.stores.push_back(load_activations(path, t));
    corpus.graphs.push_back(oracle_graph(t, schema));
  }
  return corpus;
}

fs::path execute(const RunConfig& config) {
  precheck(config);
  const auto dir = config.run_dir();
  fs::create_directories(dir);
  write_json(dir / "config.json", Json{{"command", config.command}, {"run_id", config.run_id()},
                                       {"values", config.values}});
  const auto& cmd = config.command;
  if (cmd == "oracle") cmd_oracle(config, dir);
  else if (cmd == "probe") cmd_probe(config, dir);
  else if (cmd == "controls") cmd_controls(config, dir);
  else if (cmd == "decode") cmd_decode(config, dir);
  else if (cmd == "counterfactual") cmd_counterfactual(config, dir);
  else if (cmd == "patch") cmd_patch(config, dir);
  else if (cmd == "sweep") cmd_sweep(config, dir);
  else if (cmd == "synth") cmd_synth(config, dir);
  else throw UsageError("unknown command '" + cmd + "'");
  return dir;
}

int main_entry(int argc, char** argv, std::ostream& out, std::ostream& err,
               const std::function<const char*(const char*)>& env_lookup) {
  CLI::App app{"Probes tool-call dependency structure in agent activations."};
  app.require_subcommand(1);
  app.set_version_flag("--version", "tcprobe 0.1.0");

  std::map<std::string, RunConfig> defaults;
  std::map<std::string, std::string> config_file;
  std::map<std::string, std::string> positional_log;
  std::map<std::string, std::map<std::string, std::string>> text;
  std::map<std::string, std::map<std::string, CLI::Option*>> options;
  for (const auto& name : command_names()) {
    defaults.emplace(name, RunConfig::defaults(name));
    auto* sub = app.add_subcommand(name);
    sub->add_option("--config", config_file[name], "JSON file of parameter values");
    if (name == "oracle") sub->add_option("in", positional_log[name], "Trajectory log (same as --log)");
    const Json& vals = defaults.at(name).values;
    for (auto it = vals.begin(); it != vals.end(); ++it) {
      std::string flag = it.key();
      std::replace(flag.begin(), flag.end(), '_', '-');
      auto& slot = text[name][it.key()];
      const std::string help = "default " + it.value().dump();
      options[name][it.key()] = it.value().is_boolean() ? sub->add_flag("--" + flag + "{true}", slot, help)
                                                        : sub->add_option("--" + flag, slot, help);
    }
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? 0 : 2;
  }

  try {
    const auto* sub = app.get_subcommands().front();
    const std::string name = sub->get_name();
    RunConfig cfg = defaults.at(name);
    if (!config_file[name].empty()) {
      std::ifstream in(config_file[name]);
      if (!in) throw ValidationError("cannot open config " + config_file[name]);
      const Json file = Json::parse(in, nullptr, false);
      if (file.is_discarded()) throw ValidationError("config " + config_file[name] + " is not valid JSON");
      cfg.merge(file, config_file[name]);
    }
    cfg.apply_env(env_lookup);
    if (!positional_log[name].empty()) cfg.set_from_text("log", positional_log[name], "argument");
    for (const auto& [key, opt] : options[name]) {
      if (opt->count() > 0) cfg.set_from_text(key, text[name][key], opt->get_name());
    }
    out << execute(cfg).string() << '\n';
    return 0;
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << '\n';
    return 2;
  } catch (const ValidationError& e) {
    err << "validation error: " << e.what() << '\n';
    return 2;
  } catch (const SingleClassError& e) {
    err << "validation error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace tcprobe::cli
