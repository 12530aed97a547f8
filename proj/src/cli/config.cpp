#include <algorithm>
#include <cstdio>
#include <set>
#include <sstream>

#include "tcprobe/cli.hpp"
#include "tcprobe/errors.hpp"
#include "tcprobe/synth.hpp"

namespace tcprobe::cli {

namespace {

const std::set<std::string, std::less<>> kIntListKeys = {"layers", "patch_layers", "layer_ids"};

Json corpus_keys() {
  return Json{{"corpus", ""}, {"log", ""}, {"activations", ""}, {"oracle", "substring"}, {"schema", ""}};
}

Json eval_keys() {
  return Json{{"variant", "V1"},    {"layers", Json::array()}, {"group_by", "trajectory"},
              {"C", 0.01},          {"n_resamples", 2000},     {"max_iter", 2000},
              {"grad_tol", 1e-6}};
}

Json common_keys() { return Json{{"seed", 42}, {"jobs", 0}, {"out", "runs"}}; }

void append(Json& into, const Json& from) {
  for (auto it = from.begin(); it != from.end(); ++it) into[it.key()] = it.value();
}

Json synth_keys() {
  const SynthConfig d;
  Json j = Json::object();
  j["mode"] = std::string(to_string(d.mode));
  j["n_trajectories"] = d.n_trajectories;
  j["min_calls"] = d.min_calls;
  j["max_calls"] = d.max_calls;
  j["hidden_dim"] = d.hidden_dim;
  j["layer_ids"] = d.layer_ids;
  j["edge_density"] = d.edge_density;
  j["planted_layer"] = -1;
  j["signal"] = d.signal;
  j["noise_sd"] = d.noise_sd;
  j["n_tools"] = d.n_tools;
  j["untyped_reference_rate"] = d.untyped_reference_rate;
  j["counterfactual"] = "";
  return j;
}

enum class Kind { boolean, integer, real, string, int_list, string_list };

Kind kind_of(const std::string& key, const Json& v) {
  if (v.is_boolean()) return Kind::boolean;
  if (v.is_number_integer() || v.is_number_unsigned()) return Kind::integer;
  if (v.is_number_float()) return Kind::real;
  if (v.is_string()) return Kind::string;
  return kIntListKeys.count(key) ? Kind::int_list : Kind::string_list;
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t");
  if (a == std::string::npos) return {};
  return s.substr(a, s.find_last_not_of(" \t") - a + 1);
}

Json checked(const std::string& key, Kind kind, const Json& v, std::string_view source) {
  const auto fail = [&] {
    return ValidationError(std::string(source) + ": bad value for '" + key + "': " + v.dump());
  };
  switch (kind) {
    case Kind::boolean:
      if (!v.is_boolean()) throw fail();
      return v;
    case Kind::integer:
      if (!(v.is_number_integer() || v.is_number_unsigned())) throw fail();
      return v;
    case Kind::real:
      if (!v.is_number()) throw fail();
      return Json(v.get<double>());
    case Kind::string:
      if (!v.is_string()) throw fail();
      return v;
    case Kind::int_list:
      if (!v.is_array()) throw fail();
      for (const auto& e : v) {
        if (!e.is_number_integer()) throw fail();
      }
      return v;
    case Kind::string_list:
      if (!v.is_array()) throw fail();
      for (const auto& e : v) {
        if (!e.is_string()) throw fail();
      }
      return v;
  }
  throw fail();
}

}  // namespace

const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names = {"oracle", "probe", "controls", "decode",
                                                 "counterfactual", "patch", "sweep", "synth"};
  return names;
}

RunConfig RunConfig::defaults(std::string_view command) {
  RunConfig c;
  c.command = std::string(command);
  Json& v = c.values;
  append(v, common_keys());
  if (command == "oracle") {
    append(v, corpus_keys());
  } else if (command == "probe") {
    append(v, corpus_keys());
    append(v, eval_keys());
    append(v, Json{{"tasks", Json::array({"direct", "transitive_only"})},
                   {"family", "residual"},
                   {"baseline", "positional"},
                   {"n_perms", 0},
                   {"conditional", true},
                   {"strata", true},
                   {"layer_profile", false},
                   {"export_features", false}});
  } else if (command == "controls") {
    append(v, corpus_keys());
    append(v, eval_keys());
    append(v, Json{{"task", "direct"}, {"n_perms", 200}, {"random_init", false}, {"random_init_dir", ""}});
  } else if (command == "decode") {
    append(v, corpus_keys());
    append(v, eval_keys());
    append(v, Json{{"family", "residual"}});
  } else if (command == "counterfactual") {
    append(v, corpus_keys());
    append(v, eval_keys());
    append(v, Json{{"family", "residual"},
                   {"counterpart", ""},
                   {"counterpart_log", ""},
                   {"counterpart_activations", ""}});
  } else if (command == "patch") {
    append(v, corpus_keys());
    append(v, eval_keys());
    append(v, Json{{"patch_layers", Json::array()}, {"identity", false}});
  } else if (command == "sweep") {
    append(v, eval_keys());
    append(v, Json{{"corpora", Json::array()},
                   {"oracle", "substring"},
                   {"schema", ""},
                   {"min_transitive_positives", 30},
                   {"min_groups", 15},
                   {"position_trivial_baseline", 0.85}});
  } else if (command == "synth") {
    append(v, synth_keys());
  } else {
    throw UsageError("unknown command '" + std::string(command) + "'");
  }
  return c;
}

void RunConfig::merge(const Json& overrides, std::string_view source) {
  if (!overrides.is_object()) throw ValidationError(std::string(source) + ": config must be a JSON object");
  for (auto it = overrides.begin(); it != overrides.end(); ++it) {
    if (!values.contains(it.key())) {
      throw ValidationError(std::string(source) + ": unknown key '" + it.key() + "' for " + command);
    }
    values[it.key()] = checked(it.key(), kind_of(it.key(), values[it.key()]), it.value(), source);
  }
}

void RunConfig::set_from_text(const std::string& key, const std::string& text, std::string_view source) {
  if (!values.contains(key)) throw UsageError(std::string(source) + ": unknown key '" + key + "'");
  const Kind kind = kind_of(key, values[key]);
  Json parsed;
  switch (kind) {
    case Kind::boolean: {
      const auto t = lower(trim(text));
      if (t == "true" || t == "1" || t == "yes" || t == "on") {
        parsed = true;
      } else if (t == "false" || t == "0" || t == "no" || t == "off") {
        parsed = false;
      } else {
        throw ValidationError(std::string(source) + ": '" + key + "' expects a boolean, got '" + text + "'");
      }
      break;
    }
    case Kind::integer:
    case Kind::real:
      parsed = Json::parse(trim(text), nullptr, false);
      if (parsed.is_discarded()) {
        throw ValidationError(std::string(source) + ": '" + key + "' expects a number, got '" + text + "'");
      }
      break;
    case Kind::string:
      parsed = text;
      break;
    case Kind::int_list:
    case Kind::string_list: {
      const auto t = trim(text);
      if (!t.empty() && t.front() == '[') {
        parsed = Json::parse(t, nullptr, false);
        if (parsed.is_discarded()) throw ValidationError(std::string(source) + ": '" + key + "' is not a JSON list");
        break;
      }
      parsed = Json::array();
      std::stringstream ss(t);
      std::string item;
      while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (item.empty()) continue;
        if (kind == Kind::string_list) {
          parsed.push_back(item);
        } else {
          const Json n = Json::parse(item, nullptr, false);
          if (!n.is_number_integer()) {
            throw ValidationError(std::string(source) + ": '" + key + "' expects integers, got '" + item + "'");
          }
          parsed.push_back(n);
        }
      }
      break;
    }
  }
  values[key] = checked(key, kind, parsed, source);
}

void RunConfig::apply_env(const std::function<const char*(const char*)>& lookup) {
  std::vector<std::string> keys;
  for (auto it = values.begin(); it != values.end(); ++it) keys.push_back(it.key());
  for (const auto& key : keys) {
    std::string name = "TCPROBE_" + key;
    std::transform(name.begin(), name.end(), name.begin(),
                   [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
    if (const char* v = lookup(name.c_str()); v != nullptr) set_from_text(key, v, name);
  }
}

std::string RunConfig::str(const std::string& key) const { return values.at(key).get<std::string>(); }
std::int64_t RunConfig::integer(const std::string& key) const { return values.at(key).get<std::int64_t>(); }
double RunConfig::real(const std::string& key) const { return values.at(key).get<double>(); }
bool RunConfig::flag(const std::string& key) const { return values.at(key).get<bool>(); }
std::vector<std::string> RunConfig::strings(const std::string& key) const {
  return values.at(key).get<std::vector<std::string>>();
}
std::vector<int> RunConfig::ints(const std::string& key) const { return values.at(key).get<std::vector<int>>(); }

std::string RunConfig::run_id() const {
  Json hashed = values;
  hashed.erase("jobs");
  hashed.erase("out");
  const std::string text = command + '\n' + hashed.dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::filesystem::path RunConfig::run_dir() const {
  return std::filesystem::path(str("out")) / (command + "-" + run_id());
}

}  // namespace tcprobe::cli
