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

#include "actplan/activation_memory.hpp"
#include "actplan/flops.hpp"
#include "actplan/planner.hpp"

namespace {

using namespace actplan;

void BM_PerLayerBytes(benchmark::State& state) {
  const TrainConfig& cfg = *find_preset("530b");
  RecomputeStrategy strategy = RecomputeStrategy::parse("selective+seq");
  for (auto _ : state) {
    benchmark::DoNotOptimize(per_layer_bytes(cfg.shape, cfg.layout, strategy));
  }
}
BENCHMARK(BM_PerLayerBytes);

void BM_MemoryReport(benchmark::State& state) {
  const TrainConfig& cfg = *find_preset("530b");
  RecomputeStrategy strategy = RecomputeStrategy::parse("selective+seq");
  for (auto _ : state) {
    benchmark::DoNotOptimize(memory_report(cfg.shape, cfg.layout, strategy));
  }
}
BENCHMARK(BM_MemoryReport);

void BM_ModelFlops(benchmark::State& state) {
  const TrainConfig& cfg = *find_preset("1t");
  for (auto _ : state) {
    benchmark::DoNotOptimize(model_flops(cfg.shape, iteration_batch(cfg.layout)));
  }
}
BENCHMARK(BM_ModelFlops);

void BM_EnumeratePlans(benchmark::State& state) {
  const TrainConfig& cfg = *find_preset("530b");
  planner::SearchSpace space;
  space.tensor = {1, 2, 4, 8};
  space.pipeline = {1, 5, 7, 35};
  space.interleave = {1, 3};
  space.microbatch = {1, 2};
  space.strategies = {RecomputeStrategy::parse("none+seq"),
                      RecomputeStrategy::parse("selective+seq"),
                      RecomputeStrategy::parse("full+seq")};
  space.global_batch = 280;
  for (auto _ : state) {
    benchmark::DoNotOptimize(planner::enumerate_plans(cfg.shape, cfg.hardware, space));
  }
}
BENCHMARK(BM_EnumeratePlans)->Unit(benchmark::kMillisecond);

}  // namespace
