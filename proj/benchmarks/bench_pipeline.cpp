// Copyright 2026 The actplan Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <benchmark/benchmark.h>

#include "actplan/pipeline_sim.hpp"

namespace {

using namespace actplan;

void BM_Build1F1B(benchmark::State& state) {
  const std::int64_t p = state.range(0);
  const std::int64_t n_mb = 4 * p;
  for (auto _ : state) {
    benchmark::DoNotOptimize(pipeline::build_1f1b(p, n_mb));
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations()) * p * n_mb * 2);
}
BENCHMARK(BM_Build1F1B)->Arg(8)->Arg(35)->Arg(64);

void BM_SimulateMemory530B(benchmark::State& state) {
  const TrainConfig& cfg = *find_preset("530b");
  RecomputeStrategy strategy = RecomputeStrategy::parse("selective+seq");
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        pipeline::simulate_memory(cfg.shape, cfg.layout, strategy, /*dealloc=*/true));
  }
}
BENCHMARK(BM_SimulateMemory530B)->Unit(benchmark::kMillisecond);

void BM_WindowPlan(benchmark::State& state) {
  const TrainConfig& cfg = *find_preset("175b");
  RecomputeStrategy inner = RecomputeStrategy::parse("selective+seq");
  const std::int64_t budget = std::int64_t{16} << 30;
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        pipeline::microbatch_window_plan(cfg.shape, cfg.layout, inner, budget));
  }
}
BENCHMARK(BM_WindowPlan);

}  // namespace
