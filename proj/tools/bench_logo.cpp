#include <benchmark/benchmark.h>

#include "tcprobe/evalsuite.hpp"
#include "tcprobe/synth.hpp"

using namespace tcprobe;

namespace {

const PairDataset& dataset() {
  static const PairDataset ds = [] {
    SynthConfig cfg;
    cfg.n_trajectories = 60;
    cfg.hidden_dim = 32;
    cfg.signal = 2.0;
    return generate_corpus(cfg).corpus.dataset(FeatureVariant::named("V1"));
  }();
  return ds;
}

void BM_LogoReference(benchmark::State& state) {
  const auto& ds = dataset();
  const auto labels = task_labels(ds, Task::direct);
  LogoConfig cfg;
  for (auto _ : state) benchmark::DoNotOptimize(logo_cv_reference(ds, labels, FeatureFamily::residual_only(), cfg));
}

// Arg: worker count.
void BM_LogoParallel(benchmark::State& state) {
  const auto& ds = dataset();
  const auto labels = task_labels(ds, Task::direct);
  LogoConfig cfg;
  cfg.exec = Exec{static_cast<int>(state.range(0))};
  for (auto _ : state) benchmark::DoNotOptimize(logo_cv(ds, labels, FeatureFamily::residual_only(), cfg));
}

void BM_GroupBootstrap(benchmark::State& state) {
  const auto& ds = dataset();
  const auto labels = task_labels(ds, Task::direct);
  const auto res = logo_cv(ds, labels, FeatureFamily::residual_only(), LogoConfig{});
  const auto a = res.scored_values(res.oof_scores);
  const auto y = res.scored_labels();
  const auto g = res.scored_groups();
  const Exec exec{static_cast<int>(state.range(0))};
  for (auto _ : state) benchmark::DoNotOptimize(paired_bootstrap_delta(a, a, y, g, 2000, 42, exec));
}

void BM_Permutation(benchmark::State& state) {
  const auto& ds = dataset();
  const auto labels = task_labels(ds, Task::direct);
  const Exec exec{static_cast<int>(state.range(0))};
  LogoConfig inner;
  inner.exec = Exec::serial();
  const LabelPipeline pipeline = [&](std::span<const std::uint8_t> y) {
    return logo_cv(ds, y, FeatureFamily::residual_only(), inner).auroc;
  };
  for (auto _ : state) benchmark::DoNotOptimize(permutation_control(labels, pipeline, 8, 42, exec, 0.5));
}

}  // namespace

BENCHMARK(BM_LogoReference)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_LogoParallel)->Arg(1)->Arg(2)->Arg(4)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_GroupBootstrap)->Arg(1)->Arg(4)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Permutation)->Arg(1)->Arg(4)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
