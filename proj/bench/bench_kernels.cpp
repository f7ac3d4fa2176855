// Copyright 2026 The swa Authors
// SPDX-License-Identifier: Apache-2.0

#include <benchmark/benchmark.h>

#include <cmath>
#include <random>

#include "../tests/stores.hpp"
#include "swa/pipeline.hpp"
#include "swa/plfit.hpp"

namespace {

std::vector<double> spectrum(int n) {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> v(static_cast<std::size_t>(n));
  for (auto& x : v) x = std::pow(1.0 - u(rng), -1.0 / 1.8);
  std::sort(v.begin(), v.end());
  return v;
}

void BM_FitSerial(benchmark::State& state) {
  const auto ev = spectrum(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(swa::fit_power_law_serial(ev));
}

void BM_FitParallel(benchmark::State& state) {
  const auto ev = spectrum(static_cast<int>(state.range(0)));
  swa::PLFitOptions opts;
  opts.jobs = static_cast<int>(state.range(1));
  for (auto _ : state) benchmark::DoNotOptimize(swa::fit_power_law(std::span<const double>(ev), opts));
}

std::vector<swa::LayerMatrix> layers() {
  const auto store = swa::testing::heavy_store(3, 12, 128);
  return swa::extract_layer_matrices(store, {}).matrices;
}

void BM_AnalyzeSerial(benchmark::State& state) {
  const auto m = layers();
  for (auto _ : state) benchmark::DoNotOptimize(swa::analyze_matrices_serial(m, {}));
}

void BM_AnalyzeParallel(benchmark::State& state) {
  const auto m = layers();
  const int jobs = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(swa::analyze_matrices(m, {}, jobs));
}

}  // namespace

BENCHMARK(BM_FitSerial)->Arg(1000)->Arg(4000);
BENCHMARK(BM_FitParallel)->Args({1000, 1})->Args({1000, 4})->Args({4000, 1})->Args({4000, 4});
BENCHMARK(BM_AnalyzeSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_AnalyzeParallel)->Arg(1)->Arg(4)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
