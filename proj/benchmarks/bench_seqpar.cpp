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

#include "actplan/seqpar/block.hpp"
#include "actplan/seqpar/rng.hpp"

namespace {

using namespace actplan::seqpar;

BlockConfig bench_config() {
  BlockConfig cfg;
  cfg.heads = 8;
  cfg.hidden = 64;
  cfg.seq = 32;
  cfg.batch = 2;
  cfg.seed = 42;
  return cfg;
}

void BM_SeqparForward(benchmark::State& state) {
  const std::int64_t t = state.range(0);
  const BlockConfig cfg = bench_config();
  const LayerParams params = LayerParams::random(cfg, 1);
  const Tensor x = random_uniform(2, {cfg.seq, cfg.batch, cfg.hidden}, -1, 1);
  const std::vector<Tensor> shards = split(x, 0, t);
  for (auto _ : state) {
    benchmark::DoNotOptimize(seqpar_block_forward(shards, params, t, cfg));
  }
}
BENCHMARK(BM_SeqparForward)->Arg(1)->Arg(2)->Arg(4);

void BM_SeqparForwardBackward(benchmark::State& state) {
  const std::int64_t t = state.range(0);
  const BlockConfig cfg = bench_config();
  const LayerParams params = LayerParams::random(cfg, 1);
  const Tensor x = random_uniform(2, {cfg.seq, cfg.batch, cfg.hidden}, -1, 1);
  const Tensor dy = random_uniform(3, {cfg.seq, cfg.batch, cfg.hidden}, -1, 1);
  const std::vector<Tensor> x_shards = split(x, 0, t);
  const std::vector<Tensor> dy_shards = split(dy, 0, t);
  for (auto _ : state) {
    const SeqparForward fwd = seqpar_block_forward(x_shards, params, t, cfg);
    benchmark::DoNotOptimize(seqpar_block_backward(dy_shards, fwd, params));
  }
}
BENCHMARK(BM_SeqparForwardBackward)->Arg(1)->Arg(2)->Arg(4);

}  // namespace
