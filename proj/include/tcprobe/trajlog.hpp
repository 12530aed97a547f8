#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

namespace tcprobe {

/// JSON value type that keeps object keys in insertion order.
using Json = nlohmann::ordered_json;

enum class Condition { clean, value_corrupted, skip_tool };

std::string_view to_string(Condition c);
Condition condition_from_string(std::string_view s);

struct ToolCall {
  int index = 0;
  std::string tool_name;
  Json arguments = Json::object();
  std::string output_text;
  int boundary_index = 0;

  bool operator==(const ToolCall&) const = default;
};

struct Trajectory {
  std::string trajectory_id;
  std::string task_id;
  Condition condition = Condition::clean;
  std::vector<ToolCall> calls;
  std::optional<bool> reward;

  std::size_t n_agent() const { return calls.size(); }
  /// Probing needs at least one ordered call pair.
  bool probeable() const { return calls.size() >= 2; }

  bool operator==(const Trajectory&) const = default;
};

// ---------------------------------------------------------------------------
// Trajectory logs (JSON-lines, one trajectory per line)
// ---------------------------------------------------------------------------

Json trajectory_to_json(const Trajectory& t);

/// Validates and converts one decoded log record. Throws ValidationError
/// naming the trajectory and the offending field.
Trajectory trajectory_from_json(const Json& j);

std::vector<Trajectory> parse_log(std::istream& in);
std::vector<Trajectory> parse_log(const std::filesystem::path& path);

void write_log(std::ostream& out, std::span<const Trajectory> trajectories);
void write_log(const std::filesystem::path& path, std::span<const Trajectory> trajectories);

/// Keeps trajectories with n_agent >= 2, in order, untouched.
std::vector<Trajectory> filter_probeable(std::span<const Trajectory> trajectories);

// ---------------------------------------------------------------------------
// Activation dumps
// ---------------------------------------------------------------------------

/// Dense [boundary][layer][dim] float32 block. The same layout doubles as the
/// generic tensor container for exported feature matrices and probe weights.
struct ActivationStore {
  std::string trajectory_id;
  std::vector<int> layer_ids;
  std::size_t n_boundaries = 0;
  std::size_t hidden_dim = 0;
  std::vector<float> values;

  std::size_t n_layers() const { return layer_ids.size(); }
  /// Position of a layer id in layer_ids, or nullopt.
  std::optional<std::size_t> layer_position(int layer_id) const;

  std::span<const float> vector(std::size_t boundary, std::size_t layer_pos) const;
  std::span<float> vector(std::size_t boundary, std::size_t layer_pos);

  bool operator==(const ActivationStore&) const = default;
};

inline constexpr std::uint32_t kActivationFormatVersion = 1;

void write_activations(std::ostream& out, const ActivationStore& store);
void write_activations(const std::filesystem::path& path, const ActivationStore& store);

/// Reads any well-formed dump. Checks magic, version, payload length and
/// finiteness, but not the pairing with a trajectory.
ActivationStore read_activations(std::istream& in);
ActivationStore read_activations(const std::filesystem::path& path);

/// Reads a dump and checks it against the trajectory it belongs to.
ActivationStore load_activations(const std::filesystem::path& path, const Trajectory& expected);

/// Conventional on-disk location of a trajectory's dump inside a directory.
std::filesystem::path activation_path(const std::filesystem::path& dir,
                                      std::string_view trajectory_id);

// ---------------------------------------------------------------------------
// Paired conditions
// ---------------------------------------------------------------------------

struct CorpusPairing {
  /// (index into clean, index into counterpart), in clean order.
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  /// task_ids present on either side that did not form a probeable pair.
  std::vector<std::string> excluded_task_ids;
};

/// Matches trajectories by task_id and keeps pairs where both members have
/// n_agent >= 2.
CorpusPairing pair_corpus(std::span<const Trajectory> clean, std::span<const Trajectory> counterpart);

}  // namespace tcprobe
