#include "tcprobe/trajlog.hpp"

#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <sstream>

#include "tcprobe/errors.hpp"

namespace tcprobe {

namespace {

[[noreturn]] void fail(const std::string& trajectory_id, const std::string& field,
                       const std::string& message) {
  throw ValidationError("trajectory '" + trajectory_id + "': field '" + field + "': " + message);
}

const Json& require(const Json& j, const char* key, const std::string& id, const std::string& where) {
  auto it = j.find(key);
  if (it == j.end()) fail(id, where + key, "missing");
  return *it;
}

std::string require_string(const Json& j, const char* key, const std::string& id,
                           const std::string& where = "") {
  const Json& v = require(j, key, id, where);
  if (!v.is_string()) fail(id, where + key, "expected string");
  return v.get<std::string>();
}

int require_index(const Json& j, const char* key, const std::string& id, const std::string& where) {
  const Json& v = require(j, key, id, where);
  if (!v.is_number_integer()) fail(id, where + key, "expected integer");
  const auto value = v.get<std::int64_t>();
  if (value < 0 || value > std::numeric_limits<int>::max()) fail(id, where + key, "out of range");
  return static_cast<int>(value);
}

}  // namespace

std::string_view to_string(Condition c) {
  switch (c) {
    case Condition::clean: return "clean";
    case Condition::value_corrupted: return "value_corrupted";
    case Condition::skip_tool: return "skip_tool";
  }
  return "clean";
}

Condition condition_from_string(std::string_view s) {
  if (s == "clean") return Condition::clean;
  if (s == "value_corrupted") return Condition::value_corrupted;
  if (s == "skip_tool") return Condition::skip_tool;
  throw ValidationError("unknown condition '" + std::string(s) + "'");
}

Json trajectory_to_json(const Trajectory& t) {
  Json j = Json::object();
  j["trajectory_id"] = t.trajectory_id;
  j["task_id"] = t.task_id;
  j["condition"] = std::string(to_string(t.condition));
  j["reward"] = t.reward ? Json(*t.reward) : Json(nullptr);
  Json calls = Json::array();
  for (const auto& c : t.calls) {
    Json cj = Json::object();
    cj["index"] = c.index;
    cj["tool_name"] = c.tool_name;
    cj["arguments"] = c.arguments;
    cj["output_text"] = c.output_text;
    cj["boundary_index"] = c.boundary_index;
    calls.push_back(std::move(cj));
  }
  j["calls"] = std::move(calls);
  return j;
}

Trajectory trajectory_from_json(const Json& j) {
  if (!j.is_object()) throw ValidationError("log record is not a JSON object");
  Trajectory t;
  {
    auto it = j.find("trajectory_id");
    if (it == j.end() || !it->is_string()) fail("<unknown>", "trajectory_id", "missing or not a string");
    t.trajectory_id = it->get<std::string>();
  }
  const std::string& id = t.trajectory_id;
  if (id.empty()) fail(id, "trajectory_id", "empty");
  t.task_id = require_string(j, "task_id", id);
  try {
    t.condition = condition_from_string(require_string(j, "condition", id));
  } catch (const ValidationError& e) {
    if (std::string(e.what()).rfind("trajectory", 0) == 0) throw;
    fail(id, "condition", e.what());
  }
  if (auto it = j.find("reward"); it != j.end() && !it->is_null()) {
    if (!it->is_boolean()) fail(id, "reward", "expected bool or null");
    t.reward = it->get<bool>();
  }
  const Json& calls = require(j, "calls", id, "");
  if (!calls.is_array()) fail(id, "calls", "expected array");

  std::set<int> boundaries;
  int previous_index = -1;
  for (std::size_t k = 0; k < calls.size(); ++k) {
    const Json& cj = calls[k];
    const std::string where = "calls[" + std::to_string(k) + "].";
    if (!cj.is_object()) fail(id, "calls[" + std::to_string(k) + "]", "expected object");
    ToolCall c;
    c.index = require_index(cj, "index", id, where);
    if (c.index <= previous_index) fail(id, where + "index", "not strictly increasing");
    previous_index = c.index;
    c.tool_name = require_string(cj, "tool_name", id, where);
    if (c.tool_name.empty()) fail(id, where + "tool_name", "empty");
    const Json& args = require(cj, "arguments", id, where);
    if (!args.is_object()) fail(id, where + "arguments", "expected object");
    c.arguments = args;
    c.output_text = require_string(cj, "output_text", id, where);
    c.boundary_index = require_index(cj, "boundary_index", id, where);
    if (!boundaries.insert(c.boundary_index).second) {
      fail(id, where + "boundary_index", "duplicate boundary_index " + std::to_string(c.boundary_index));
    }
    t.calls.push_back(std::move(c));
  }
  return t;
}

std::vector<Trajectory> parse_log(std::istream& in) {
  std::vector<Trajectory> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;
    Json j;
    try {
      j = Json::parse(line);
    } catch (const Json::parse_error& e) {
      throw ParseError("line " + std::to_string(line_no) + ": malformed JSON: " + e.what(), line_no);
    }
    try {
      out.push_back(trajectory_from_json(j));
    } catch (const ValidationError& e) {
      throw ValidationError("line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

std::vector<Trajectory> parse_log(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open log file " + path.string());
  return parse_log(in);
}

void write_log(std::ostream& out, std::span<const Trajectory> trajectories) {
  for (const auto& t : trajectories) out << trajectory_to_json(t).dump() << '\n';
}

void write_log(const std::filesystem::path& path, std::span<const Trajectory> trajectories) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write log file " + path.string());
  write_log(out, trajectories);
}

std::vector<Trajectory> filter_probeable(std::span<const Trajectory> trajectories) {
  std::vector<Trajectory> out;
  for (const auto& t : trajectories) {
    if (t.probeable()) out.push_back(t);
  }
  return out;
}

CorpusPairing pair_corpus(std::span<const Trajectory> clean, std::span<const Trajectory> counterpart) {
  auto index_by_task = [](std::span<const Trajectory> side, const char* label) {
    std::map<std::string, std::size_t> index;
    for (std::size_t k = 0; k < side.size(); ++k) {
      if (!index.emplace(side[k].task_id, k).second) {
        throw ValidationError(std::string("duplicate task_id '") + side[k].task_id + "' in " + label +
                              " condition");
      }
    }
    return index;
  };
  const auto clean_index = index_by_task(clean, "clean");
  const auto other_index = index_by_task(counterpart, "counterpart");

  CorpusPairing result;
  std::set<std::string> paired;
  for (std::size_t k = 0; k < clean.size(); ++k) {
    auto it = other_index.find(clean[k].task_id);
    if (it == other_index.end()) continue;
    if (clean[k].probeable() && counterpart[it->second].probeable()) {
      result.pairs.emplace_back(k, it->second);
      paired.insert(clean[k].task_id);
    }
  }
  std::set<std::string> excluded;
  for (const auto& [task, _] : clean_index) {
    if (!paired.contains(task)) excluded.insert(task);
  }
  for (const auto& [task, _] : other_index) {
    if (!paired.contains(task)) excluded.insert(task);
  }
  result.excluded_task_ids.assign(excluded.begin(), excluded.end());
  return result;
}

}  // namespace tcprobe
