#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "tcprobe/evalsuite.hpp"
#include "tcprobe/trajlog.hpp"

namespace tcprobe::cli {

/// oracle, probe, controls, decode, counterfactual, patch, sweep, synth.
const std::vector<std::string>& command_names();

/// Parameters of one command. The key set and each value's JSON type are
/// fixed by defaults(command); every override is checked against them.
struct RunConfig {
  std::string command;
  Json values = Json::object();

  static RunConfig defaults(std::string_view command);

  /// Overlays an object of known keys. `source` names the origin in errors.
  void merge(const Json& overrides, std::string_view source);
  /// Parses text as the key's type: bool, integer, number, string, or a list
  /// given as JSON or comma-separated.
  void set_from_text(const std::string& key, const std::string& text, std::string_view source);
  /// TCPROBE_<KEY> for every key, e.g. TCPROBE_N_PERMS.
  void apply_env(const std::function<const char*(const char*)>& lookup);

  std::string str(const std::string& key) const;
  std::int64_t integer(const std::string& key) const;
  double real(const std::string& key) const;
  bool flag(const std::string& key) const;
  std::vector<std::string> strings(const std::string& key) const;
  std::vector<int> ints(const std::string& key) const;

  /// 16 hex digits of FNV-1a over the command and every value except jobs
  /// and out. Identical parameters give the same id on every run.
  std::string run_id() const;
  std::filesystem::path run_dir() const;
};

/// Runs the command and writes its artifacts plus config.json into
/// run_dir(). Returns that directory.
std::filesystem::path execute(const RunConfig& config);

/// Full entry point: argument parsing, config file, environment, dispatch.
/// Returns the process exit code (0 ok, 1 internal error, 2 usage or
/// validation error).
int main_entry(int argc, char** argv, std::ostream& out, std::ostream& err,
               const std::function<const char*(const char*)>& env_lookup);

/// Probeable trajectories of a corpus directory (or explicit log and
/// activation paths) with their oracle graphs.
Corpus load_corpus(const std::filesystem::path& log, const std::filesystem::path& activations,
                   std::string_view oracle, const std::filesystem::path& schema);

}  // namespace tcprobe::cli
