// Serial reference path (workers = 1) against the OpenMP path for the
// parallel kernels. The second range argument is the worker count.

#include <benchmark/benchmark.h>

#include "craqreg/detection.hpp"
#include "craqreg/junction_backend.hpp"
#include "craqreg/kernels.hpp"
#include "craqreg/matching.hpp"
#include "craqreg/pipeline.hpp"
#include "craqreg/synthetic.hpp"

using namespace craqreg;

namespace {

const ImageBuffer& scene_image(int size) {
  static std::map<int, ImageBuffer> cache;
  auto it = cache.find(size);
  if (it == cache.end()) it = cache.emplace(size, synth::CraquelureScene(size).render_reference(size, size)).first;
  return it->second;
}

void BM_CrackStrength(benchmark::State& state) {
  const ImageBuffer& img = scene_image(static_cast<int>(state.range(0)));
  const Exec exec{static_cast<int>(state.range(1))};
  for (auto _ : state) benchmark::DoNotOptimize(crack_strength(img, exec));
}

void BM_Thinning(benchmark::State& state) {
  const ImageBuffer& img = scene_image(static_cast<int>(state.range(0)));
  const auto mask = crack_mask(crack_strength(img));
  const Exec exec{static_cast<int>(state.range(1))};
  for (auto _ : state) {
    auto m = mask;
    thin_zhang_suen(m, img.width(), img.height(), exec);
    benchmark::DoNotOptimize(m.data());
  }
}

void BM_UpsampleHeatmap(benchmark::State& state) {
  const ImageBuffer& img = scene_image(static_cast<int>(state.range(0)));
  const ScalarMap heat = junction_heatmap(crack_strength(img));
  const Exec exec{static_cast<int>(state.range(1))};
  for (auto _ : state) benchmark::DoNotOptimize(upsample_heatmap(heat, kHeadStride, exec));
}

void BM_Warp(benchmark::State& state) {
  const ImageBuffer& img = scene_image(static_cast<int>(state.range(0)));
  const Homography h = synth::mild_homography(img.width(), img.height(), 1);
  const Exec exec{static_cast<int>(state.range(1))};
  for (auto _ : state) benchmark::DoNotOptimize(warp_image(img, h, img.width(), img.height(), exec));
}

void BM_DetectImage(benchmark::State& state) {
  const ImageBuffer& img = scene_image(static_cast<int>(state.range(0)));
  RegistrationConfig cfg;
  cfg.workers = static_cast<int>(state.range(1));
  for (auto _ : state) benchmark::DoNotOptimize(detect_image(img, cfg));
}

void BM_MutualNN(benchmark::State& state) {
  const ImageBuffer& img = scene_image(1024);
  RegistrationConfig cfg;
  const DetectionResult a = detect_image(img, cfg);
  const DetectionResult b = detect_image(synth::apply_modality(img, synth::Modality::Inverted, 1), cfg);
  const Exec exec{static_cast<int>(state.range(1))};
  for (auto _ : state) benchmark::DoNotOptimize(match_mutual_nn(a, b, exec));
}

void worker_args(benchmark::internal::Benchmark* b) {
  for (int size : {1024, 2048})
    for (int workers : {1, 2, 4}) b->Args({size, workers});
  b->Unit(benchmark::kMillisecond)->UseRealTime();
}

}  // namespace

BENCHMARK(BM_CrackStrength)->Apply(worker_args);
BENCHMARK(BM_Thinning)->Apply(worker_args);
BENCHMARK(BM_UpsampleHeatmap)->Apply(worker_args);
BENCHMARK(BM_Warp)->Apply(worker_args);
BENCHMARK(BM_DetectImage)->Apply(worker_args);
BENCHMARK(BM_MutualNN)->Args({1024, 1})->Args({1024, 2})->Args({1024, 4})->Unit(benchmark::kMillisecond)->UseRealTime();

BENCHMARK_MAIN();
