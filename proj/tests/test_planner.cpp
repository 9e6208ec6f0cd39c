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

#include "actplan/planner.hpp"

#include <limits>

#include <doctest.h>

#include "actplan/activation_memory.hpp"
#include "actplan/flops.hpp"

using namespace actplan;
using namespace actplan::planner;

namespace {

RecomputeStrategy strat(const char* name) { return RecomputeStrategy::parse(name); }

SearchSpace space_530b() {
  SearchSpace space;
  space.tensor = {8};
  space.pipeline = {35};
  space.interleave = {1, 3};
  space.microbatch = {1};
  space.strategies = {strat("none+seq"), strat("selective+seq"), strat("full+seq")};
  space.global_batch = 280;
  return space;
}

}  // namespace

TEST_CASE("530B on 80 GiB devices: no-recompute infeasible, seq+selective feasible") {
  const TrainConfig& cfg = *find_preset("530b");
  const PlanResult result = enumerate_plans(cfg.shape, cfg.hardware, space_530b());
  REQUIRE(!result.candidates.empty());
  CHECK(result.any_feasible);

  bool saw_none = false, saw_selective = false;
  for (const PlanCandidate& c : result.candidates) {
    if (c.strategy == strat("none+seq")) {
      saw_none = true;
      CHECK(!c.feasible);
    }
    if (c.strategy == strat("selective+seq")) {
      saw_selective = true;
      CHECK(c.feasible);
    }
    CHECK(c.feasible ==
          (c.peak_bytes + c.params_bytes + c.optimizer_bytes <= cfg.hardware.device_mem));
    CHECK(c.headroom ==
          cfg.hardware.device_mem - (c.peak_bytes + c.params_bytes + c.optimizer_bytes));
  }
  CHECK(saw_none);
  CHECK(saw_selective);
}

TEST_CASE("a single already-feasible configuration comes back ranked first") {
  const TrainConfig& cfg = *find_preset("530b");
  SearchSpace space = space_530b();
  space.interleave = {3};
  space.strategies = {strat("selective+seq")};
  const PlanResult result = enumerate_plans(cfg.shape, cfg.hardware, space);
  REQUIRE(result.candidates.size() == 1);
  CHECK(result.candidates[0].feasible);
  CHECK(result.candidates[0].strategy == strat("selective+seq"));
  CHECK(result.candidates[0].layout.interleave == 3);
}

TEST_CASE("hardware FLOPs order none < selective < full at a fixed layout") {
  const TrainConfig& cfg = *find_preset("175b");
  SearchSpace space;
  space.tensor = {8};
  space.pipeline = {8};
  space.interleave = {1};
  space.microbatch = {1};
  space.strategies = {strat("full"), strat("none"), strat("selective")};
  space.global_batch = 64;
  const PlanResult result = enumerate_plans(cfg.shape, cfg.hardware, space);
  REQUIRE(result.candidates.size() == 3);

  auto flops_of = [&result](const char* name) {
    for (const auto& c : result.candidates) {
      if (c.strategy == strat(name)) return c.hardware_flops;
    }
    FAIL("strategy not found");
    return BigInt(0);
  };
  CHECK(flops_of("none") < flops_of("selective"));
  CHECK(flops_of("selective") < flops_of("full"));
}

TEST_CASE("ranking is deterministic and prefers fewer hardware FLOPs") {
  const TrainConfig& cfg = *find_preset("530b");
  const PlanResult a = enumerate_plans(cfg.shape, cfg.hardware, space_530b());
  const PlanResult b = enumerate_plans(cfg.shape, cfg.hardware, space_530b());
  REQUIRE(a.candidates.size() == b.candidates.size());
  for (std::size_t i = 0; i < a.candidates.size(); ++i) {
    CHECK(a.candidates[i].layout == b.candidates[i].layout);
    CHECK(a.candidates[i].strategy == b.candidates[i].strategy);
  }
  for (std::size_t i = 0; i + 1 < a.candidates.size(); ++i) {
    const auto& hi = a.candidates[i];
    const auto& lo = a.candidates[i + 1];
    if (hi.feasible && lo.feasible) CHECK(hi.hardware_flops <= lo.hardware_flops);
    if (!hi.feasible) CHECK(!lo.feasible);
  }
}

TEST_CASE("adding device memory never removes a feasible candidate") {
  const TrainConfig& cfg = *find_preset("530b");
  Hardware small = cfg.hardware;
  small.device_mem = std::int64_t{48} << 30;
  Hardware large = cfg.hardware;
  large.device_mem = std::int64_t{96} << 30;

  const PlanResult tight = enumerate_plans(cfg.shape, small, space_530b());
  const PlanResult roomy = enumerate_plans(cfg.shape, large, space_530b());
  for (const PlanCandidate& c : tight.candidates) {
    if (!c.feasible) continue;
    bool still_feasible = false;
    for (const PlanCandidate& r : roomy.candidates) {
      if (r.layout == c.layout && r.strategy == c.strategy) still_feasible = r.feasible;
    }
    CHECK(still_feasible);
  }
}

TEST_CASE("an infeasible search reports the minimum shortfall") {
  const TrainConfig& cfg = *find_preset("530b");
  Hardware tiny = cfg.hardware;
  tiny.device_mem = std::int64_t{8} << 30;
  const PlanResult result = enumerate_plans(cfg.shape, tiny, space_530b());
  CHECK(!result.any_feasible);
  CHECK(result.min_shortfall_bytes > 0);
  std::int64_t best = std::numeric_limits<std::int64_t>::max();
  for (const auto& c : result.candidates) {
    best = std::min(best, c.peak_bytes + c.params_bytes + c.optimizer_bytes - tiny.device_mem);
  }
  CHECK(result.min_shortfall_bytes == best);
}

TEST_CASE("candidates honor the global batch and device count") {
  const TrainConfig& cfg = *find_preset("175b");
  SearchSpace space;
  space.tensor = {1, 2, 4, 8};
  space.pipeline = {1, 2, 4, 8, 16};
  space.interleave = {1};
  space.microbatch = {1, 2};
  space.strategies = {strat("selective+seq")};
  space.global_batch = 64;
  const PlanResult result = enumerate_plans(cfg.shape, cfg.hardware, space);
  CHECK(!result.candidates.empty());
  for (const PlanCandidate& c : result.candidates) {
    CHECK(iteration_batch(c.layout) == 64);
    CHECK(c.layout.tensor * c.layout.pipeline * c.layout.data_parallel == cfg.hardware.devices);
    CHECK(c.layout.microbatches_per_iter >= c.layout.pipeline);
  }
}

TEST_CASE("microbatch-level candidates pick up the windowed recompute fraction") {
  const TrainConfig& cfg = *find_preset("175b");
  SearchSpace space;
  space.tensor = {8};
  space.pipeline = {8};
  space.interleave = {1};
  space.microbatch = {1};
  space.strategies = {strat("selective+seq"), strat("selective+seq+mblevel")};
  space.global_batch = 64;

  // Memory chosen so the window can fully store some microbatches.
  Hardware hw = cfg.hardware;
  hw.device_mem = std::int64_t{60} << 30;
  const PlanResult result = enumerate_plans(cfg.shape, hw, space);
  REQUIRE(result.candidates.size() == 2);

  const PlanCandidate* windowed = nullptr;
  const PlanCandidate* plain = nullptr;
  for (const auto& c : result.candidates) {
    (c.strategy.microbatch_level ? windowed : plain) = &c;
  }
  REQUIRE(windowed != nullptr);
  REQUIRE(plain != nullptr);
  CHECK(windowed->recomputed_fraction < Rational(1));
  CHECK(windowed->hardware_flops <= plain->hardware_flops);
  CHECK(windowed->feasible);
  // Fewer recomputed microbatches means the windowed plan ranks first.
  CHECK(result.candidates[0].strategy.microbatch_level);
}

TEST_CASE("degenerate search spaces are rejected") {
  const TrainConfig& cfg = *find_preset("22b");
  SearchSpace empty;
  CHECK_THROWS_AS(enumerate_plans(cfg.shape, cfg.hardware, empty), std::invalid_argument);
  SearchSpace no_batch = space_530b();
  no_batch.global_batch = 0;
  CHECK_THROWS_AS(enumerate_plans(cfg.shape, cfg.hardware, no_batch), std::invalid_argument);
}
