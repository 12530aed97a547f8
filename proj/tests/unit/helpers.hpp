#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "tcprobe/rng.hpp"
#include "tcprobe/synth.hpp"
#include "tcprobe/trajlog.hpp"

namespace helpers {

struct CallSpec {
  std::string tool;
  std::string output;
  tcprobe::Json args = tcprobe::Json::object();
};

inline tcprobe::Trajectory make_traj(const std::string& id, const std::vector<CallSpec>& calls) {
  tcprobe::Trajectory t;
  t.trajectory_id = id;
  t.task_id = id;
  for (std::size_t k = 0; k < calls.size(); ++k) {
    tcprobe::ToolCall c;
    c.index = static_cast<int>(k);
    c.boundary_index = static_cast<int>(k);
    c.tool_name = calls[k].tool;
    c.output_text = calls[k].output;
    c.arguments = calls[k].args;
    t.calls.push_back(std::move(c));
  }
  return t;
}

inline tcprobe::ActivationStore random_store(tcprobe::Rng& rng, const std::string& id, std::size_t boundaries,
                                             std::vector<int> layers, std::size_t dim) {
  tcprobe::ActivationStore s;
  s.trajectory_id = id;
  s.layer_ids = std::move(layers);
  s.n_boundaries = boundaries;
  s.hidden_dim = dim;
  s.values.resize(boundaries * s.layer_ids.size() * dim);
  for (auto& v : s.values) v = static_cast<float>(rng.normal() * 3.0);
  return s;
}

/// Small fast corpus; callers override the fields they care about.
inline tcprobe::SynthConfig small_config(tcprobe::SignalMode mode, std::size_t n = 30, std::uint64_t seed = 7) {
  tcprobe::SynthConfig c;
  c.mode = mode;
  c.n_trajectories = n;
  c.hidden_dim = 16;
  c.seed = seed;
  return c;
}

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("tcprobe-unit-" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace helpers
