#include "tcprobe/evalsuite.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>

#include "logo_kernel.hpp"
#include "tcprobe/errors.hpp"

namespace tcprobe {

std::string_view to_string(Task t) { return t == Task::direct ? "direct" : "transitive_only"; }

Task task_from_string(std::string_view s) {
  if (s == "direct") return Task::direct;
  if (s == "transitive_only" || s == "transitive") return Task::transitive_only;
  throw ValidationError("unknown task '" + std::string(s) + "' (expected direct or transitive_only)");
}

std::vector<std::uint8_t> task_labels(const PairDataset& dataset, Task task) {
  std::vector<std::uint8_t> y;
  y.reserve(dataset.examples.size());
  for (const auto& e : dataset.examples) {
    y.push_back(task == Task::direct ? e.label_direct : e.label_transitive_only);
  }
  return y;
}

// ---------------------------------------------------------------------------
// Feature families
// ---------------------------------------------------------------------------

FeatureFamily FeatureFamily::parse(std::string_view spec) {
  FeatureFamily f;
  std::size_t start = 0;
  while (start <= spec.size()) {
    const auto end = std::min(spec.find('+', start), spec.size());
    const auto part = spec.substr(start, end - start);
    if (part == "residual") f.residual = true;
    else if (part == "positional") f.positional = true;
    else if (part == "scaffold") f.scaffold = true;
    else if (part == "surface") f.surface = true;
    else throw ValidationError("unknown feature family '" + std::string(part) + "'");
    start = end + 1;
  }
  return f;
}

std::string FeatureFamily::name() const {
  std::string out;
  auto add = [&](bool on, const char* part) {
    if (!on) return;
    if (!out.empty()) out += '+';
    out += part;
  };
  add(residual, "residual");
  add(positional, "positional");
  add(surface, "surface");
  add(scaffold, "scaffold");
  return out;
}

Matrix fixed_design(const PairDataset& dataset, const FeatureFamily& family) {
  const std::size_t rw = family.residual ? dataset.residual_width() : 0;
  const std::size_t pw = family.positional ? kPositionalWidth : 0;
  const std::size_t sw = family.surface ? kSurfaceWidth : 0;
  Matrix X(dataset.examples.size(), rw + pw + sw);
  for (std::size_t r = 0; r < dataset.examples.size(); ++r) {
    const auto& e = dataset.examples[r];
    auto row = X.row(r);
    std::size_t c = 0;
    if (family.residual) {
      if (e.residual.size() != rw) throw ValidationError("fixed_design: residual width differs across rows");
      for (double v : e.residual) row[c++] = v;
    }
    if (family.positional) {
      for (double v : e.positional) row[c++] = v;
    }
    if (family.surface) {
      for (double v : e.surface) row[c++] = v;
    }
  }
  return X;
}

PairDataset Corpus::dataset(const FeatureVariant& variant, GroupBy group_by) const {
  return build_dataset(trajectories, stores, graphs, variant, group_by);
}

std::vector<GraphedTrajectory> Corpus::graphed() const {
  std::vector<GraphedTrajectory> out;
  out.reserve(size());
  for (std::size_t k = 0; k < size(); ++k) out.push_back({&trajectories[k], &graphs[k]});
  return out;
}

// ---------------------------------------------------------------------------
// LOGO
// ---------------------------------------------------------------------------

namespace detail {

Matrix reversed_design(const PairDataset& dataset, const FeatureFamily& family) {
  Matrix X = fixed_design(dataset, family);
  if (!family.residual) return X;
  const std::size_t d = dataset.hidden_dim;
  for (std::size_t r = 0; r < dataset.examples.size(); ++r) {
    const auto rev = reverse_direction(dataset.examples[r], dataset.variant, d);
    std::copy(rev.residual.begin(), rev.residual.end(), X.row(r).begin());
  }
  return X;
}

namespace {

bool single_class(std::span<const std::uint8_t> y) {
  std::size_t n1 = 0;
  for (auto v : y) n1 += v ? 1 : 0;
  return n1 == 0 || n1 == y.size();
}

Matrix scaffold_block(const PairDataset& ds, const ScaffoldVocab& vocab, std::span<const std::size_t> rows) {
  Matrix out(rows.size(), vocab.width());
  for (std::size_t k = 0; k < rows.size(); ++k) {
    const auto& e = ds.examples[rows[k]];
    const auto enc = vocab.encode(e.tool_i, e.tool_j, e.i, e.j, e.n_agent);
    std::copy(enc.begin(), enc.end(), out.row(k).begin());
  }
  return out;
}

}  // namespace

FoldOutput run_fold(const FoldInputs& in, std::span<const std::size_t> train_rows,
                    std::span<const std::size_t> test_rows, std::size_t held_out_group) {
  FoldOutput out;
  out.test_rows.assign(test_rows.begin(), test_rows.end());
  std::vector<std::uint8_t> y_train;
  y_train.reserve(train_rows.size());
  for (auto r : train_rows) y_train.push_back(in.labels[r]);
  if (train_rows.empty() || single_class(y_train)) {
    out.skipped = true;
    return out;
  }

  Matrix X_train = in.fixed->select_rows(train_rows);
  Matrix X_test = in.fixed->select_rows(test_rows);
  Matrix X_rev;
  if (in.reversed != nullptr) X_rev = in.reversed->select_rows(test_rows);
  ScaffoldVocab vocab;
  if (in.family->scaffold) {
    std::vector<std::pair<std::string, std::string>> tool_pairs;
    tool_pairs.reserve(train_rows.size());
    for (auto r : train_rows) {
      tool_pairs.emplace_back(in.dataset->examples[r].tool_i, in.dataset->examples[r].tool_j);
    }
    vocab = ScaffoldVocab::fit(tool_pairs);
    X_train = X_train.hconcat(scaffold_block(*in.dataset, vocab, train_rows));
    const auto test_block = scaffold_block(*in.dataset, vocab, test_rows);
    X_test = X_test.hconcat(test_block);
    if (in.reversed != nullptr) X_rev = X_rev.hconcat(test_block);
  }

  const auto standardizer = Standardizer::fit(X_train);
  standardizer.transform_inplace(X_train);
  std::optional<ProbeModel> warm;
  if (in.config->warm_start && in.warm != nullptr && in.warm_standardizer != nullptr &&
      in.warm->weights.size() == X_train.cols()) {
    // same decision function, re-expressed in this fold's standardised units
    const auto& full = *in.warm_standardizer;
    warm = *in.warm;
    for (std::size_t c = 0; c < X_train.cols(); ++c) {
      const double w = in.warm->weights[c];
      warm->weights[c] = w * standardizer.scales[c] / full.scales[c];
      warm->bias += w * (standardizer.means[c] - full.means[c]) / full.scales[c];
    }
  }
  const auto model = fit_logistic(X_train, y_train, in.config->probe, warm ? &*warm : nullptr, in.preconditioner);
  out.converged = model.converged;

  standardizer.transform_inplace(X_test);
  out.scores = predict_standardized(model, X_test);
  if (in.reversed != nullptr) {
    standardizer.transform_inplace(X_rev);
    out.reversed = predict_standardized(model, X_rev);
  }
  if (in.extra != nullptr) {
    for (std::size_t r = 0; r < in.extra->group.size(); ++r) {
      if (in.extra->group[r] == held_out_group) out.extra_rows.push_back(r);
    }
    if (!out.extra_rows.empty()) {
      Matrix X_extra = in.extra->fixed.select_rows(out.extra_rows);
      standardizer.transform_inplace(X_extra);
      out.extra_scores = predict_standardized(model, X_extra);
    }
  }
  return out;
}

}  // namespace detail

std::vector<double> LogoResult::scored_values(std::span<const double> v) const {
  std::vector<double> out;
  for (std::size_t r = 0; r < v.size(); ++r) {
    if (scored[r]) out.push_back(v[r]);
  }
  return out;
}

std::vector<std::uint8_t> LogoResult::scored_labels() const {
  std::vector<std::uint8_t> out;
  for (std::size_t r = 0; r < labels.size(); ++r) {
    if (scored[r]) out.push_back(labels[r]);
  }
  return out;
}

std::vector<std::size_t> LogoResult::scored_groups() const {
  std::vector<std::size_t> out;
  for (std::size_t r = 0; r < group_of_row.size(); ++r) {
    if (scored[r]) out.push_back(group_of_row[r]);
  }
  return out;
}

FittedProbe fit_full(const Matrix& X, std::span<const std::uint8_t> labels, const ProbeConfig& config) {
  FittedProbe fp;
  fp.standardizer = Standardizer::fit(X);
  const Matrix Xs = fp.standardizer.transform(X);
  fp.model = fit_logistic(Xs, labels, config);
  return fp;
}

namespace detail {

void finish_auroc(LogoResult& res) {
  const auto s = res.scored_values(res.oof_scores);
  const auto l = res.scored_labels();
  std::size_t n1 = 0;
  for (auto v : l) n1 += v ? 1 : 0;
  res.auroc_defined = n1 > 0 && n1 < l.size();
  res.auroc = res.auroc_defined ? auroc(s, l) : 0.5;
}

LogoSetup prepare(const PairDataset& dataset, std::span<const std::uint8_t> labels, const FeatureFamily& family,
                  const LogoConfig& config, LogoResult& res) {
  if (family.empty()) throw ValidationError("logo_cv: empty feature family");
  if (labels.size() != dataset.examples.size()) throw ValidationError("logo_cv: label count differs from pairs");
  LogoSetup s;
  s.group_names = dataset.groups();
  if (s.group_names.size() < 2) {
    throw ValidationError("logo_cv: need at least 2 groups, got " + std::to_string(s.group_names.size()));
  }
  res.group_of_row = dataset.group_index();
  res.labels.assign(labels.begin(), labels.end());
  res.oof_scores.assign(labels.size(), 0.5);
  res.scored.assign(labels.size(), 0);
  if (config.score_reversed) res.reversed_scores.assign(labels.size(), 0.5);
  s.rows_of_group = rows_by_group(res.group_of_row);
  s.fixed = fixed_design(dataset, family);
  if (config.score_reversed) s.reversed = detail::reversed_design(dataset, family);
  if (config.warm_start && !family.scaffold) {
    std::size_t n1 = 0;
    for (auto v : labels) n1 += v ? 1 : 0;
    if (n1 > 0 && n1 < labels.size()) {
      Matrix Xs = s.fixed;
      s.warm_standardizer = Standardizer::fit(Xs);
      s.warm_standardizer.transform_inplace(Xs);
      s.warm = fit_logistic(Xs, labels, config.probe);
      if (config.precondition) s.preconditioner = Preconditioner::at_model(Xs, labels, config.probe, *s.warm);
    }
  }
  return s;
}

std::vector<std::size_t> complement_rows(const std::vector<std::vector<std::size_t>>& rows_of_group,
                                         std::size_t held_out) {
  std::vector<std::size_t> train;
  for (std::size_t g = 0; g < rows_of_group.size(); ++g) {
    if (g == held_out) continue;
    train.insert(train.end(), rows_of_group[g].begin(), rows_of_group[g].end());
  }
  std::sort(train.begin(), train.end());
  return train;
}

void merge_fold(LogoResult& res, const detail::FoldOutput& fold, const std::string& group_name) {
  if (fold.skipped) {
    res.skipped_groups.push_back(group_name);
    return;
  }
  if (!fold.converged) ++res.nonconverged_folds;
  for (std::size_t k = 0; k < fold.test_rows.size(); ++k) {
    const auto r = fold.test_rows[k];
    res.oof_scores[r] = fold.scores[k];
    res.scored[r] = 1;
    if (!fold.reversed.empty()) res.reversed_scores[r] = fold.reversed[k];
  }
  for (std::size_t k = 0; k < fold.extra_rows.size(); ++k) {
    res.extra_scores[fold.extra_rows[k]] = fold.extra_scores[k];
  }
}

}  // namespace detail

LogoResult logo_cv(const PairDataset& dataset, std::span<const std::uint8_t> labels, const FeatureFamily& family,
                   const LogoConfig& config, const ExtraRows* extra) {
  using namespace detail;
  LogoResult res;
  auto setup = prepare(dataset, labels, family, config, res);
  if (extra != nullptr) {
    if (family.scaffold) throw ValidationError("logo_cv: extra rows cannot carry scaffold features");
    if (extra->fixed.cols() != setup.fixed.cols()) throw ValidationError("logo_cv: extra rows have the wrong width");
    res.extra_scores.assign(extra->group.size(), 0.5);
  }
  const std::size_t n_groups = setup.group_names.size();
  res.n_folds = n_groups;

  detail::FoldInputs in;
  in.dataset = &dataset;
  in.fixed = &setup.fixed;
  in.reversed = config.score_reversed ? &setup.reversed : nullptr;
  in.extra = extra;
  in.labels = labels;
  in.family = &family;
  in.config = &config;
  in.warm = setup.warm ? &*setup.warm : nullptr;
  in.warm_standardizer = &setup.warm_standardizer;
  in.preconditioner = setup.preconditioner ? &*setup.preconditioner : nullptr;

  std::vector<detail::FoldOutput> folds(n_groups);
  parallel_for(n_groups, config.exec, [&](std::size_t g) {
    const auto train = complement_rows(setup.rows_of_group, g);
    const auto& test = setup.rows_of_group[g];
    for (auto r : test) {
      if (std::binary_search(train.begin(), train.end(), r)) {
        throw std::logic_error("logo_cv: group '" + setup.group_names[g] + "' appears in train and test");
      }
    }
    folds[g] = detail::run_fold(in, train, test, g);
  });
  for (std::size_t g = 0; g < n_groups; ++g) merge_fold(res, folds[g], setup.group_names[g]);
  finish_auroc(res);
  return res;
}

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

Json EvalReport::to_json() const {
  Json j = Json::object();
  j["task"] = to_string(task);
  j["family"] = family;
  j["variant"] = variant;
  j["n_pairs"] = n_pairs;
  j["n_positive"] = n_positive;
  j["n_groups"] = n_groups;
  j["testable"] = testable;
  if (!testable) {
    j["untestable_reason"] = untestable_reason;
    return j;
  }
  j["auroc"] = logo.auroc;
  j["auroc_defined"] = logo.auroc_defined;
  j["n_folds"] = logo.n_folds;
  j["skipped_folds"] = logo.skipped_groups;
  j["nonconverged_folds"] = logo.nonconverged_folds;
  j["ci"] = ci ? ci->to_json() : Json(nullptr);
  j["permutation"] = permutation ? permutation->to_json() : Json(nullptr);
  return j;
}

namespace {

BootstrapResult oof_bca(const LogoResult& res, std::size_t n_resamples, std::uint64_t seed, const Exec& exec) {
  const auto scores = res.scored_values(res.oof_scores);
  const auto labels = res.scored_labels();
  const auto groups = res.scored_groups();
  const auto rows = rows_by_group(groups);
  const GroupStatistic stat = [&](std::span<const std::size_t> draw) {
    return grouped_auroc(scores, labels, rows, draw);
  };
  auto ci = bca_ci(rows.size(), stat, n_resamples, seed, exec);
  ci.resample_unit = "group";
  return ci;
}

}  // namespace

EvalReport evaluate(const PairDataset& dataset, Task task, const FeatureFamily& family, const EvalOptions& options) {
  EvalReport rep;
  rep.task = task;
  rep.family = family.name();
  rep.variant = dataset.variant.name;
  const auto labels = task_labels(dataset, task);
  rep.n_pairs = labels.size();
  for (auto v : labels) rep.n_positive += v ? 1 : 0;
  rep.n_groups = dataset.groups().size();
  if (rep.n_positive == 0 || rep.n_positive == rep.n_pairs) {
    rep.testable = false;
    rep.untestable_reason = rep.n_positive == 0 ? "no positive pairs for this task" : "no negative pairs for this task";
    return rep;
  }
  if (rep.n_groups < 2) {
    rep.testable = false;
    rep.untestable_reason = "fewer than 2 groups";
    return rep;
  }
  rep.logo = logo_cv(dataset, labels, family, options.logo);
  if (rep.logo.auroc_defined && options.n_resamples > 0) {
    rep.ci = oof_bca(rep.logo, options.n_resamples, options.seed, options.logo.exec);
  }
  if (options.n_perms > 0 && rep.logo.auroc_defined) {
    LogoConfig inner = options.logo;
    const LabelPipeline pipeline = [&](std::span<const std::uint8_t> y) {
      const auto r = logo_cv(dataset, y, family, inner);
      return r.auroc;
    };
    rep.permutation =
        permutation_control(labels, pipeline, options.n_perms, options.seed, options.logo.exec, rep.logo.auroc);
  }
  return rep;
}

Json ConditionalGap::to_json() const {
  Json j = Json::object();
  j["baseline"] = baseline;
  j["residual"] = residual;
  j["baseline_auroc"] = baseline_run.auroc;
  j["joint_auroc"] = joint_run.auroc;
  j["residual_only_auroc"] = residual_run.auroc;
  j["delta"] = delta.to_json();
  return j;
}

ConditionalGap conditional_gap(const PairDataset& dataset, Task task, const FeatureFamily& residual,
                               const FeatureFamily& baseline, const EvalOptions& options) {
  if (residual.empty() || baseline.empty()) throw ValidationError("conditional_gap: empty feature family");
  ConditionalGap gap;
  gap.baseline = baseline.name();
  gap.residual = residual.name();
  const auto labels = task_labels(dataset, task);
  gap.baseline_run = logo_cv(dataset, labels, baseline, options.logo);
  gap.joint_run = logo_cv(dataset, labels, baseline | residual, options.logo);
  gap.residual_run = logo_cv(dataset, labels, residual, options.logo);

  std::vector<double> a, b;
  std::vector<std::uint8_t> y;
  std::vector<std::size_t> g;
  for (std::size_t r = 0; r < labels.size(); ++r) {
    if (!gap.baseline_run.scored[r] || !gap.joint_run.scored[r]) continue;
    a.push_back(gap.joint_run.oof_scores[r]);
    b.push_back(gap.baseline_run.oof_scores[r]);
    y.push_back(labels[r]);
    g.push_back(gap.joint_run.group_of_row[r]);
  }
  gap.delta = paired_bootstrap_delta(a, b, y, g, options.n_resamples, options.seed, options.logo.exec);
  return gap;
}

std::vector<LayerProfileEntry> per_layer_profile(const Corpus& corpus, std::span<const int> layer_ids, Task task,
                                                 GroupBy group_by, const LogoConfig& config) {
  std::vector<LayerProfileEntry> out;
  for (int layer : layer_ids) {
    const auto ds = corpus.dataset(FeatureVariant::single_layer(layer), group_by);
    const auto labels = task_labels(ds, task);
    const auto res = logo_cv(ds, labels, FeatureFamily::residual_only(), config);
    LayerProfileEntry e;
    e.layer = layer;
    e.raw_auroc = res.auroc;
    e.flipped = res.auroc < 0.5;
    e.resolved_auroc = e.flipped ? 1.0 - res.auroc : res.auroc;
    out.push_back(e);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Strata
// ---------------------------------------------------------------------------

namespace {

Stratum make_stratum(std::string name, std::span<const std::size_t> rows, std::span<const std::uint8_t> labels,
                     std::span<const double> scores) {
  Stratum s;
  s.name = std::move(name);
  s.n = rows.size();
  std::vector<double> sc;
  std::vector<std::uint8_t> lb;
  for (auto r : rows) {
    sc.push_back(scores[r]);
    lb.push_back(labels[r]);
    s.n_positive += labels[r] ? 1 : 0;
  }
  if (s.n_positive > 0 && s.n_positive < s.n) s.auroc = auroc(sc, lb);
  return s;
}

Json strata_json(const std::vector<Stratum>& strata) {
  Json arr = Json::array();
  for (const auto& s : strata) {
    Json j = Json::object();
    j["name"] = s.name;
    j["n"] = s.n;
    j["n_positive"] = s.n_positive;
    j["auroc"] = s.auroc ? Json(*s.auroc) : Json(nullptr);
    j["skipped_single_class"] = !s.auroc.has_value() && s.n > 0;
    arr.push_back(std::move(j));
  }
  return arr;
}

Json optional_json(const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); }

}  // namespace

Json StrataReport::to_json() const {
  Json j = Json::object();
  j["hop"] = strata_json(hop);
  j["length"] = strata_json(length);
  j["tool_pair"] = strata_json(tool_pair);
  j["within_tool_pair_auroc"] = optional_json(within_tool_pair_auroc);
  j["n_tool_pair_strata"] = n_tool_pair_strata;
  j["forward_auroc"] = optional_json(forward_auroc);
  j["reversed_auroc"] = optional_json(reversed_auroc);
  return j;
}

StrataReport stratified_report(const PairDataset& dataset, std::span<const std::uint8_t> labels,
                               std::span<const double> scores, std::span<const double> reversed_scores) {
  const auto& ex = dataset.examples;
  if (labels.size() != ex.size() || scores.size() != ex.size()) {
    throw ValidationError("stratified_report: scores and labels must cover every pair");
  }
  StrataReport rep;

  std::vector<std::uint8_t> reach(ex.size());
  for (std::size_t r = 0; r < ex.size(); ++r) reach[r] = ex[r].hop > 0;
  const char* hop_names[] = {"1-hop", "2-hop", "3+-hop"};
  for (int b = 0; b < 3; ++b) {
    std::vector<std::size_t> rows;
    bool any_reachable = false;
    for (std::size_t r = 0; r < ex.size(); ++r) {
      const int h = ex[r].hop;
      const int bin = h == 0 ? -1 : std::min(h, 3) - 1;
      if (bin == b) any_reachable = true;
      if (bin == b || bin == -1) rows.push_back(r);
    }
    if (!any_reachable) continue;
    rep.hop.push_back(make_stratum(hop_names[b], rows, reach, scores));
  }

  const char* len_names[] = {"2-3", "4-6", "7+"};
  for (int b = 0; b < 3; ++b) {
    std::vector<std::size_t> rows;
    for (std::size_t r = 0; r < ex.size(); ++r) {
      const int n = ex[r].n_agent;
      const int bin = n <= 3 ? 0 : n <= 6 ? 1 : 2;
      if (bin == b) rows.push_back(r);
    }
    if (!rows.empty()) rep.length.push_back(make_stratum(len_names[b], rows, labels, scores));
  }

  std::map<std::pair<std::string, std::string>, std::vector<std::size_t>> by_tools;
  for (std::size_t r = 0; r < ex.size(); ++r) by_tools[{ex[r].tool_i, ex[r].tool_j}].push_back(r);
  double weighted = 0.0;
  std::size_t weight = 0;
  for (const auto& [key, rows] : by_tools) {
    auto s = make_stratum(key.first + "->" + key.second, rows, labels, scores);
    if (s.auroc) {
      weighted += *s.auroc * static_cast<double>(s.n);
      weight += s.n;
      ++rep.n_tool_pair_strata;
    }
    rep.tool_pair.push_back(std::move(s));
  }
  if (weight > 0) rep.within_tool_pair_auroc = weighted / static_cast<double>(weight);

  std::size_t n1 = 0;
  for (auto v : labels) n1 += v ? 1 : 0;
  if (n1 > 0 && n1 < labels.size()) {
    rep.forward_auroc = auroc(scores, labels);
    if (!reversed_scores.empty()) rep.reversed_auroc = auroc(reversed_scores, labels);
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Sweep
// ---------------------------------------------------------------------------

Json SweepTable::to_json() const {
  Json arr = Json::array();
  for (const auto& r : rows) {
    Json j = Json::object();
    j["name"] = r.name;
    j["n_groups"] = r.n_groups;
    j["n_pairs"] = r.n_pairs;
    j["n_direct_positive"] = r.n_direct_positive;
    j["n_transitive_positive"] = r.n_transitive_positive;
    j["direct_auroc"] = optional_json(r.direct_auroc);
    j["transitive_auroc"] = optional_json(r.transitive_auroc);
    j["baseline_auroc"] = optional_json(r.baseline_auroc);
    j["delta"] = r.delta ? r.delta->to_json() : Json(nullptr);
    j["underpowered"] = r.underpowered;
    j["position_trivial"] = r.position_trivial;
    arr.push_back(std::move(j));
  }
  Json out = Json::object();
  out["rows"] = std::move(arr);
  out["spearman_rho_baseline_vs_delta"] = optional_json(spearman_rho);
  out["trend_note"] = "descriptive only";
  return out;
}

std::string SweepTable::to_csv() const {
  std::ostringstream out;
  out.precision(10);
  out << "name,n_groups,n_pairs,direct_auroc,transitive_auroc,baseline_auroc,delta,delta_lo,delta_hi,"
         "p_delta_le_0,underpowered,position_trivial\n";
  auto opt = [&](const std::optional<double>& v) {
    if (v) out << *v;
    else out << "n/a";
  };
  for (const auto& r : rows) {
    out << r.name << ',' << r.n_groups << ',' << r.n_pairs << ',';
    opt(r.direct_auroc);
    out << ',';
    opt(r.transitive_auroc);
    out << ',';
    opt(r.baseline_auroc);
    out << ',';
    if (r.delta) {
      out << r.delta->delta.point << ',' << r.delta->delta.lo << ',' << r.delta->delta.hi << ','
          << r.delta->p_delta_le_0;
    } else {
      out << "n/a,n/a,n/a,n/a";
    }
    out << ',' << (r.underpowered ? 1 : 0) << ',' << (r.position_trivial ? 1 : 0) << '\n';
  }
  return out.str();
}

SweepTable benchmark_sweep(std::span<const NamedDataset> corpora, const SweepConfig& config) {
  SweepTable table;
  std::vector<double> baselines, deltas;
  for (const auto& c : corpora) {
    SweepRow row;
    row.name = c.name;
    row.n_groups = c.dataset.groups().size();
    row.n_pairs = c.dataset.examples.size();
    const auto direct = task_labels(c.dataset, Task::direct);
    const auto trans = task_labels(c.dataset, Task::transitive_only);
    for (auto v : direct) row.n_direct_positive += v ? 1 : 0;
    for (auto v : trans) row.n_transitive_positive += v ? 1 : 0;
    const bool direct_ok = row.n_direct_positive > 0 && row.n_direct_positive < row.n_pairs && row.n_groups >= 2;
    row.underpowered = row.n_groups < config.min_groups || !direct_ok;
    if (direct_ok) {
      const auto gap = conditional_gap(c.dataset, Task::direct, FeatureFamily::residual_only(),
                                       FeatureFamily::positional_only(), config.eval);
      row.direct_auroc = gap.residual_run.auroc;
      row.baseline_auroc = gap.baseline_run.auroc;
      row.delta = gap.delta;
      row.position_trivial = gap.baseline_run.auroc > config.position_trivial_baseline;
      if (row.n_transitive_positive >= config.min_transitive_positives &&
          row.n_transitive_positive < row.n_pairs) {
        row.transitive_auroc =
            logo_cv(c.dataset, trans, FeatureFamily::residual_only(), config.eval.logo).auroc;
      }
      if (!row.underpowered) {
        baselines.push_back(*row.baseline_auroc);
        deltas.push_back(row.delta->delta.point);
      }
    }
    table.rows.push_back(std::move(row));
  }
  if (baselines.size() >= 2) {
    const double rho = tcprobe::spearman_rho(baselines, deltas);
    if (std::isfinite(rho)) table.spearman_rho = rho;
  }
  return table;
}

}  // namespace tcprobe
