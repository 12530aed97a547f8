#include <algorithm>
#include <cctype>
#include <map>

#include "tcprobe/errors.hpp"
#include "tcprobe/evalsuite.hpp"

namespace tcprobe {

namespace {

struct IdField {
  Json::json_pointer pointer;
  std::string value;
};

bool ends_with_id(std::string_view key) { return key.size() >= 3 && key.substr(key.size() - 3) == "_id"; }

void collect_id_fields(const Json& node, const Json::json_pointer& at, std::vector<IdField>& out) {
  if (node.is_object()) {
    for (auto it = node.begin(); it != node.end(); ++it) {
      const auto child = at / it.key();
      if (ends_with_id(it.key()) && it->is_string()) out.push_back({child, it->get<std::string>()});
      collect_id_fields(*it, child, out);
    }
  } else if (node.is_array()) {
    for (std::size_t k = 0; k < node.size(); ++k) collect_id_fields(node[k], at / k, out);
  }
}

char replacement_for(char c, Rng& rng) {
  const char* pool = std::isdigit(static_cast<unsigned char>(c))   ? "0123456789"
                     : std::islower(static_cast<unsigned char>(c)) ? "abcdefghijklmnopqrstuvwxyz"
                                                                   : "ABCDEFGHIJKLMNOPQRSTUVWXYZ";
  const std::size_t len = std::char_traits<char>::length(pool);
  char r = c;
  while (r == c) r = pool[rng.index(len)];
  return r;
}

// Flips 2 or 3 distinct alphanumeric positions, keeping each character class.
std::string flip_alnum(const std::string& value, Rng& rng) {
  std::vector<std::size_t> positions;
  for (std::size_t k = 0; k < value.size(); ++k) {
    if (std::isalnum(static_cast<unsigned char>(value[k]))) positions.push_back(k);
  }
  const std::size_t want = std::min<std::size_t>(2 + rng.index(2), positions.size());
  rng.shuffle(std::span<std::size_t>(positions));
  std::string out = value;
  for (std::size_t k = 0; k < want; ++k) out[positions[k]] = replacement_for(out[positions[k]], rng);
  return out;
}

}  // namespace

CorruptionResult corrupt_id_field(const Trajectory& traj, const DependencyGraph& oracle, Rng& rng) {
  if (traj.calls.empty()) throw ValidationError("corrupt_id_field: trajectory '" + traj.trajectory_id + "' has no calls");
  CorruptionResult res;
  res.trajectory = traj;
  res.trajectory.condition = Condition::value_corrupted;
  const auto m = traj.calls.size() / 2;
  auto& call = res.trajectory.calls[m];
  Json output;
  try {
    output = Json::parse(call.output_text);
  } catch (const nlohmann::json::exception&) {
    return res;
  }
  std::vector<IdField> fields;
  collect_id_fields(output, Json::json_pointer{}, fields);
  std::vector<IdField> referenced;
  for (const auto& f : fields) {
    if (f.value.empty()) continue;
    for (const auto& e : oracle.direct) {
      if (e.from != static_cast<int>(m)) continue;
      const auto args = serialize_args(traj.calls[static_cast<std::size_t>(e.to)].arguments);
      if (args.find(f.value) != std::string::npos) {
        referenced.push_back(f);
        break;
      }
    }
  }
  std::vector<IdField> candidates = referenced.empty() ? fields : referenced;
  std::erase_if(candidates, [](const IdField& f) {
    return std::none_of(f.value.begin(), f.value.end(), [](char c) { return std::isalnum(static_cast<unsigned char>(c)); });
  });
  if (candidates.empty()) return res;
  const auto& chosen = candidates[rng.index(candidates.size())];
  output[chosen.pointer] = flip_alnum(chosen.value, rng);
  call.output_text = output.dump();
  res.hit = !referenced.empty();
  res.changed = true;
  res.field_path = chosen.pointer.to_string();
  return res;
}

Trajectory skip_tool_rewrite(const Trajectory& traj) {
  if (traj.calls.size() < 2) {
    throw ValidationError("skip_tool_rewrite: trajectory '" + traj.trajectory_id + "' has fewer than 2 calls");
  }
  Trajectory out = traj;
  out.condition = Condition::skip_tool;
  out.calls[traj.calls.size() / 2].output_text = "{}";
  return out;
}

// ---------------------------------------------------------------------------
// Counterfactual pipeline
// ---------------------------------------------------------------------------

Json CounterfactualReport::to_json() const {
  Json j = Json::object();
  j["n_pairs"] = n_pairs;
  j["excluded_task_ids"] = excluded_task_ids;
  j["threshold"] = threshold;
  j["decoded_vs_oracle"] = decoded_vs_oracle.to_json();
  j["plan_shift"] = plan_shift.to_json();
  return j;
}

namespace {

std::map<std::string, std::vector<std::size_t>, std::less<>> rows_by_trajectory(const PairDataset& ds) {
  std::map<std::string, std::vector<std::size_t>, std::less<>> out;
  for (std::size_t r = 0; r < ds.examples.size(); ++r) out[ds.examples[r].trajectory_id].push_back(r);
  return out;
}

}  // namespace

CounterfactualReport counterfactual_analysis(const Corpus& clean, const Corpus& counterpart,
                                             const FeatureVariant& variant, const FeatureFamily& family,
                                             const LogoConfig& config) {
  const auto pairing = pair_corpus(clean.trajectories, counterpart.trajectories);
  CounterfactualReport rep;
  rep.excluded_task_ids = pairing.excluded_task_ids;
  if (pairing.pairs.empty()) throw ValidationError("counterfactual: no probeable clean/counterpart pairs");

  const auto clean_ds = clean.dataset(variant, GroupBy::task);
  const auto other_ds = counterpart.dataset(variant, GroupBy::task);
  const auto groups = clean_ds.groups();
  std::map<std::string, std::size_t, std::less<>> group_of_task;
  for (std::size_t g = 0; g < groups.size(); ++g) group_of_task.emplace(groups[g], g);

  ExtraRows extra;
  extra.fixed = fixed_design(other_ds, family);
  for (const auto& e : other_ds.examples) {
    auto it = group_of_task.find(e.group);
    extra.group.push_back(it == group_of_task.end() ? static_cast<std::size_t>(-1) : it->second);
  }
  const auto labels = task_labels(clean_ds, Task::direct);
  const auto logo = logo_cv(clean_ds, labels, family, config, &extra);
  rep.threshold = f1_threshold(logo.scored_values(logo.oof_scores), logo.scored_labels()).threshold;

  const auto clean_rows = rows_by_trajectory(clean_ds);
  const auto other_rows = rows_by_trajectory(other_ds);
  std::vector<std::pair<DecodedTrajectory, DecodedTrajectory>> decoded;
  for (const auto& [ci, pi] : pairing.pairs) {
    const auto& ct = clean.trajectories[ci];
    const auto& pt = counterpart.trajectories[pi];
    const auto& cr = clean_rows.at(ct.trajectory_id);
    const auto& pr = other_rows.at(pt.trajectory_id);
    if (!std::all_of(cr.begin(), cr.end(), [&](std::size_t r) { return logo.scored[r] != 0; })) continue;
    if (extra.group[pr.front()] == static_cast<std::size_t>(-1)) continue;
    std::vector<double> cs, ps;
    for (auto r : cr) cs.push_back(logo.oof_scores[r]);
    for (auto r : pr) ps.push_back(logo.extra_scores[r]);
    DecodedTrajectory a{&ct, &clean.graphs[ci], decode_dag(static_cast<int>(ct.n_agent()), cs, rep.threshold)};
    DecodedTrajectory b{&pt, &counterpart.graphs[pi], decode_dag(static_cast<int>(pt.n_agent()), ps, rep.threshold)};
    decoded.emplace_back(std::move(a), std::move(b));
  }
  rep.n_pairs = decoded.size();
  rep.decoded_vs_oracle = compare_paired_sd(decoded, SDMode::decoded_vs_oracle);
  rep.plan_shift = compare_paired_sd(decoded, SDMode::plan_shift);
  return rep;
}

}  // namespace tcprobe
