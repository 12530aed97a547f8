#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "tcprobe/evalsuite.hpp"
#include "tcprobe/features.hpp"
#include "tcprobe/oracle.hpp"
#include "tcprobe/parallel.hpp"
#include "tcprobe/trajlog.hpp"

namespace tcprobe {

enum class SignalMode {
  none,
  positional_only,
  planted_linear,
  planted_directional,
  layer_localized,
  hop_graded,
  donor_contrast,
};

std::string_view to_string(SignalMode m);
SignalMode signal_mode_from_string(std::string_view s);

struct SynthConfig {
  std::size_t n_trajectories = 100;
  int min_calls = 3;
  int max_calls = 6;
  std::size_t hidden_dim = 64;
  std::vector<int> layer_ids = kDefaultLayers;
  /// Target fraction of i<j pairs that are direct edges.
  double edge_density = 0.3;
  SignalMode mode = SignalMode::planted_linear;
  /// Planting layer for layer_localized (and for donor_contrast when set).
  std::optional<int> planted_layer;
  double signal = 1.0;
  double noise_sd = 1.0;
  std::uint64_t seed = 42;
  std::size_t n_tools = 8;
  /// Share of edges carried in free text rather than under a typed key.
  double untyped_reference_rate = 0.2;

  void validate() const;
  Json to_json() const;
  static SynthConfig from_json(const Json& j);
};

struct SynthCorpus {
  SynthConfig config;
  Corpus corpus;
  /// Unit planting directions for source and target endpoints.
  std::vector<double> u;
  std::vector<double> v;
  /// Weight vector over V1 features ([u; v]) that separates edges exactly
  /// when noise_sd is 0 (planted_linear and planted_directional).
  std::vector<double> certificate;
};

/// Typed-ID conventions of generated logs: "_id" output keys, "Ref" argument
/// keys, raw-token outputs from find_entity_* tools.
TypedSchema synth_schema(const SynthConfig& config);

/// Deterministic in the config; trajectories are generated in parallel from
/// per-trajectory derived seeds.
SynthCorpus generate_corpus(const SynthConfig& config, const Exec& exec = {});

enum class CounterfactualKind { value, structural };

struct SynthCounterfactual {
  SynthCorpus clean;
  Corpus counterpart;
};

/// Clean corpus plus matched counterparts (same task_id). `value` rewrites
/// the median call's token everywhere it appears, leaving the DAG intact;
/// `structural` empties that call's output and drops its out-edges.
SynthCounterfactual generate_counterfactual(const SynthConfig& config, CounterfactualKind kind,
                                            const Exec& exec = {});

/// <dir>/log.jsonl, <dir>/activations/<id>.tcpr, <dir>/oracle.jsonl,
/// <dir>/schema.json, <dir>/synth.json.
void write_corpus(const std::filesystem::path& dir, const Corpus& corpus, const Json& manifest,
                  const TypedSchema& schema);

}  // namespace tcprobe
