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

#include "actplan/pipeline_sim.hpp"

#include <limits>
#include <map>

#include <doctest.h>

#include <nlohmann/json.hpp>

#include "actplan/activation_memory.hpp"
#include "actplan/flops.hpp"

using namespace actplan;
using namespace actplan::pipeline;

namespace {

RecomputeStrategy strat(RecomputeKind kind, bool seq = false) {
  RecomputeStrategy s;
  s.kind = kind;
  s.sequence_parallel = seq;
  return s;
}

std::vector<std::pair<EventKind, int>> rank_sequence(const std::vector<ScheduleEvent>& events,
                                                     int rank) {
  std::vector<std::pair<EventKind, int>> out;
  for (const auto& ev : events) {
    if (ev.rank == rank) out.emplace_back(ev.kind, ev.microbatch);
  }
  return out;
}

const ModelShape kToy{2, 8, 8, 4, 16};

ParallelLayout toy_layout(std::int64_t p, std::int64_t n_mb) {
  ParallelLayout layout;
  layout.pipeline = p;
  layout.microbatches_per_iter = n_mb;
  return layout;
}

}  // namespace

TEST_CASE("in-flight bound is max(0, p - S)") {
  CHECK(in_flight(35, 0) == 35);
  CHECK(in_flight(4, 4) == 0);
  CHECK(in_flight(4, 2) == 2);
  CHECK(in_flight(4, 9) == 0);
  CHECK_THROWS_AS(in_flight(4, -1), std::invalid_argument);
}

TEST_CASE("1F1B with p=4, n_mb=9 warms rank 0 up with four forwards") {
  const auto events = build_1f1b(4, 9);
  const auto rank0 = rank_sequence(events, 0);
  REQUIRE(rank0.size() == 18);
  for (int i = 0; i < 4; ++i) {
    CHECK(rank0[i].first == EventKind::Forward);
    CHECK(rank0[i].second == i + 1);
  }
  CHECK(rank0[4] == std::pair{EventKind::Backward, 1});
  CHECK(rank0[5] == std::pair{EventKind::Forward, 5});
}

TEST_CASE("1F1B with p=1 strictly alternates forward and backward") {
  const auto events = build_1f1b(1, 5);
  const auto rank0 = rank_sequence(events, 0);
  REQUIRE(rank0.size() == 10);
  for (int mb = 1; mb <= 5; ++mb) {
    CHECK(rank0[2 * (mb - 1)] == std::pair{EventKind::Forward, mb});
    CHECK(rank0[2 * mb - 1] == std::pair{EventKind::Backward, mb});
  }
}

TEST_CASE("1F1B with p=2, n_mb=2 matches the hand-enumerated schedule") {
  const auto events = build_1f1b(2, 2);
  CHECK(rank_sequence(events, 0) ==
        std::vector<std::pair<EventKind, int>>{{EventKind::Forward, 1},
                                               {EventKind::Forward, 2},
                                               {EventKind::Backward, 1},
                                               {EventKind::Backward, 2}});
  CHECK(rank_sequence(events, 1) ==
        std::vector<std::pair<EventKind, int>>{{EventKind::Forward, 1},
                                               {EventKind::Backward, 1},
                                               {EventKind::Forward, 2},
                                               {EventKind::Backward, 2}});
}

TEST_CASE("a pipeline that cannot fill is rejected") {
  CHECK_THROWS_WITH_AS(build_1f1b(4, 3), doctest::Contains("pipeline cannot be filled"),
                       std::invalid_argument);
}

TEST_CASE("schedule conservation: forwards match backwards, recomputes match checkpoints") {
  for (const auto& [p, n_mb] : std::vector<std::pair<std::int64_t, std::int64_t>>{
           {1, 1}, {2, 5}, {4, 9}, {7, 13}}) {
    CAPTURE(p);
    CAPTURE(n_mb);
    StoredModeAssignment modes(static_cast<std::size_t>(p),
                               std::vector<StoredMode>(static_cast<std::size_t>(n_mb),
                                                       StoredMode::Checkpointed));
    // Leave one microbatch fully stored per rank to mix modes.
    for (auto& row : modes) row[0] = StoredMode::FullyStored;
    const auto events = build_1f1b(p, n_mb, modes, /*emit_recompute=*/true);

    for (int rank = 0; rank < p; ++rank) {
      const auto seq = rank_sequence(events, rank);
      std::map<int, int> fwd_at, bwd_at, rec_at;
      int forwards = 0, backwards = 0, recomputes = 0, in_flight_now = 0, peak = 0;
      for (std::size_t i = 0; i < seq.size(); ++i) {
        const auto [kind, mb] = seq[i];
        if (kind == EventKind::Forward) {
          ++forwards;
          fwd_at[mb] = static_cast<int>(i);
          peak = std::max(peak, ++in_flight_now);
        } else if (kind == EventKind::Backward) {
          ++backwards;
          bwd_at[mb] = static_cast<int>(i);
          --in_flight_now;
        } else {
          ++recomputes;
          rec_at[mb] = static_cast<int>(i);
        }
      }
      CHECK(forwards == n_mb);
      CHECK(backwards == n_mb);
      CHECK(recomputes == n_mb - 1);  // all but the fully stored microbatch
      CHECK(rec_at.count(1) == 0);    // fully stored => no recompute event
      CHECK(peak == in_flight(p, rank));
      for (int mb = 1; mb <= n_mb; ++mb) {
        CHECK(fwd_at[mb] < bwd_at[mb]);
        if (rec_at.count(mb) != 0) CHECK(rec_at[mb] == bwd_at[mb] - 1);
      }
    }
  }
}

TEST_CASE("single-stage peak equals per-layer times L plus extras") {
  ParallelLayout layout = toy_layout(1, 3);
  layout.microbatch = 2;
  const RecomputeStrategy s = strat(RecomputeKind::None, true);
  const MemoryTimeline timeline = simulate_memory(kToy, layout, s, /*dealloc=*/true);
  CHECK(timeline.peak_per_rank[0] ==
        per_layer_bytes(kToy, layout, s) * kToy.layers + extras_bytes(kToy, layout).sum());
}

TEST_CASE("rank-0 peak agrees with the closed-form total for all presets") {
  for (const auto& name : preset_names()) {
    const TrainConfig& cfg = *find_preset(name);
    CAPTURE(name);
    const RecomputeStrategy s = strat(RecomputeKind::None, true);
    const MemoryTimeline timeline =
        simulate_memory(cfg.shape, cfg.layout, s, /*dealloc=*/true);
    ParallelLayout plain = cfg.layout;
    plain.interleave = 1;  // the simulator models the non-interleaved schedule
    CHECK(timeline.peak_per_rank[0] ==
          total_first_stage_bytes(cfg.shape, plain, s) +
              extras_bytes(cfg.shape, cfg.layout).sum());
  }
}

TEST_CASE("all-checkpointed full recompute peaks at 2sbhL plus extras") {
  const TrainConfig& cfg = *find_preset("530b");
  const MemoryTimeline timeline =
      simulate_memory(cfg.shape, cfg.layout, strat(RecomputeKind::Full), /*dealloc=*/true);
  const std::int64_t sbh =
      cfg.shape.seq_len * cfg.layout.microbatch * cfg.shape.hidden;
  CHECK(timeline.peak_per_rank[0] ==
        2 * sbh * cfg.shape.layers + extras_bytes(cfg.shape, cfg.layout).sum());
}

TEST_CASE("deallocating stage outputs saves exactly the modeled bytes on every rank") {
  const TrainConfig& cfg = *find_preset("530b");
  const RecomputeStrategy s = strat(RecomputeKind::Selective, true);
  const MemoryTimeline on = simulate_memory(cfg.shape, cfg.layout, s, /*dealloc=*/true);
  const MemoryTimeline off = simulate_memory(cfg.shape, cfg.layout, s, /*dealloc=*/false);
  CHECK(off.peak_per_rank[0] - on.peak_per_rank[0] == 2'936'012'800);
  for (std::int64_t rank = 0; rank < cfg.layout.pipeline; ++rank) {
    CHECK(off.peak_per_rank[static_cast<std::size_t>(rank)] -
              on.peak_per_rank[static_cast<std::size_t>(rank)] ==
          dealloc_savings_bytes(cfg.shape, cfg.layout, rank));
  }
}

TEST_CASE("rank peaks decrease linearly beyond the first stage") {
  const TrainConfig& cfg = *find_preset("530b");
  const MemoryTimeline timeline = simulate_memory(cfg.shape, cfg.layout,
                                                  strat(RecomputeKind::None, true),
                                                  /*dealloc=*/true);
  const std::int64_t step = timeline.peak_per_rank[1] - timeline.peak_per_rank[2];
  CHECK(step > 0);
  for (std::size_t rank = 1; rank + 1 < timeline.peak_per_rank.size(); ++rank) {
    CHECK(timeline.peak_per_rank[rank] - timeline.peak_per_rank[rank + 1] == step);
  }
}

TEST_CASE("activation bytes stay non-negative and drain to zero") {
  ParallelLayout layout = toy_layout(4, 9);
  const MemoryTimeline timeline =
      simulate_memory(kToy, layout, strat(RecomputeKind::Selective), /*dealloc=*/false);
  for (const auto& rank_points : timeline.per_rank) {
    REQUIRE(!rank_points.empty());
    for (const auto& point : rank_points) CHECK(point.bytes >= 0);
    CHECK(rank_points.back().bytes == 0);
  }
}

TEST_CASE("timelines are bit-identical across runs") {
  ParallelLayout layout = toy_layout(4, 9);
  const auto a = simulate_memory(kToy, layout, strat(RecomputeKind::Full), true);
  const auto b = simulate_memory(kToy, layout, strat(RecomputeKind::Full), true);
  CHECK(timeline_csv(a) == timeline_csv(b));
  CHECK(timeline_json(a) == timeline_json(b));
}

TEST_CASE("interleave settings do not change the simulated schedule") {
  ModelShape shape = kToy;
  shape.layers = 8;
  ParallelLayout plain = toy_layout(4, 9);
  ParallelLayout interleaved = plain;
  interleaved.interleave = 2;
  const auto a = simulate_memory(shape, plain, strat(RecomputeKind::Full), true);
  const auto b = simulate_memory(shape, interleaved, strat(RecomputeKind::Full), true);
  CHECK(timeline_csv(a) == timeline_csv(b));
}

TEST_CASE("microbatch-level strategies require an explicit window plan") {
  RecomputeStrategy windowed = strat(RecomputeKind::Full);
  windowed.microbatch_level = true;
  CHECK_THROWS_AS(simulate_memory(kToy, toy_layout(4, 9), windowed, true),
                  std::invalid_argument);
}

TEST_CASE("timeline CSV column layout is fixed") {
  ParallelLayout layout = toy_layout(2, 2);
  const auto timeline = simulate_memory(kToy, layout, strat(RecomputeKind::None), true);
  const std::string csv = timeline_csv(timeline);
  CHECK(csv.rfind("rank,step,event,microbatch,stored_mode,bytes_after_event\n", 0) == 0);
  CHECK(csv.find("0,0,forward,1,fully_stored,") != std::string::npos);
}

TEST_CASE("window plan reproduces the moving-window scenario at p=4, n_mb=9") {
  ModelShape shape = kToy;  // L=8, p=4 -> 2 layers per stage
  ParallelLayout layout = toy_layout(4, 9);
  const RecomputeStrategy inner = strat(RecomputeKind::Full);

  // Budget that fits exactly one fully stored microbatch next to the
  // checkpointed steady state on rank 0.
  const std::int64_t layers_per_stage = shape.layers / layout.pipeline;
  const std::int64_t full_mb =
      per_layer_bytes(shape, layout, strat(RecomputeKind::None)) * layers_per_stage +
      floor_bytes(first_stage_extras_per_microbatch(shape, layout));
  const std::int64_t ckpt_mb =
      per_layer_bytes(shape, layout, inner) * layers_per_stage +
      floor_bytes(first_stage_extras_per_microbatch(shape, layout));
  const std::int64_t budget = full_mb + 3 * ckpt_mb;

  const WindowPlan plan = microbatch_window_plan(shape, layout, inner, budget);
  std::vector<int> fully_stored_rank0;
  for (int mb = 1; mb <= 9; ++mb) {
    if (plan.modes[0][static_cast<std::size_t>(mb - 1)] == StoredMode::FullyStored) {
      fully_stored_rank0.push_back(mb);
    }
  }
  CHECK(fully_stored_rank0 == std::vector<int>{1, 5, 9});
  CHECK(plan.per_stage[0].fully_stored == 3);
  CHECK(plan.per_stage[0].checkpointed == 6);

  // Later stages have fewer outstanding backpropagation steps, so their
  // recompute counts never grow with the stage index.
  for (std::size_t s = 1; s < plan.per_stage.size(); ++s) {
    CHECK(plan.per_stage[s].checkpointed <= plan.per_stage[s - 1].checkpointed);
  }
  CHECK(plan.per_stage.back().checkpointed == 0);

  // The planned window respects the budget when simulated.
  const MemoryTimeline timeline =
      simulate_memory_with_modes(shape, layout, inner, /*dealloc=*/true, plan.modes);
  CHECK(timeline.peak_per_rank[0] <= budget);
  CHECK(plan.recomputed_fraction == Rational(BigInt(6 + 6 + 4 + 0), BigInt(4 * 9)));
}

TEST_CASE("window plan boundary budgets") {
  ModelShape shape = kToy;
  ParallelLayout layout = toy_layout(4, 9);
  const RecomputeStrategy inner = strat(RecomputeKind::Selective);

  SUBCASE("unbounded budget stores everything") {
    const WindowPlan plan =
        microbatch_window_plan(shape, layout, inner, std::numeric_limits<std::int64_t>::max());
    for (const auto& stage : plan.per_stage) CHECK(stage.checkpointed == 0);
    CHECK(plan.recomputed_fraction == Rational(0));
  }
  SUBCASE("the checkpointed minimum stores nothing on the binding stage") {
    const WindowPlan probe =
        microbatch_window_plan(shape, layout, inner, std::numeric_limits<std::int64_t>::max());
    const WindowPlan plan = microbatch_window_plan(shape, layout, inner,
                                                   probe.min_feasible_budget);
    // The first stage sets the minimum, so it checkpoints everything; later
    // stages have slack against the shared budget and keep storing.
    CHECK(plan.per_stage[0].fully_stored == 0);
    CHECK(plan.per_stage[0].checkpointed == 9);
  }
  SUBCASE("with a single stage the checkpointed minimum stores nothing at all") {
    ParallelLayout single = toy_layout(1, 3);
    const WindowPlan probe =
        microbatch_window_plan(shape, single, inner, std::numeric_limits<std::int64_t>::max());
    const WindowPlan plan =
        microbatch_window_plan(shape, single, inner, probe.min_feasible_budget);
    CHECK(plan.per_stage[0].fully_stored == 0);
    CHECK(plan.recomputed_fraction == Rational(1));
  }
  SUBCASE("an infeasible budget reports the minimum feasible one") {
    try {
      microbatch_window_plan(shape, layout, inner, 16);
      FAIL("expected InfeasibleBudgetError");
    } catch (const InfeasibleBudgetError& err) {
      CHECK(err.min_feasible_budget > 16);
      CHECK_NOTHROW(microbatch_window_plan(shape, layout, inner, err.min_feasible_budget));
    }
  }
}

TEST_CASE("windowed recompute keeps the flops uplift under the full-selective ratio") {
  const TrainConfig& cfg = *find_preset("175b");
  const RecomputeStrategy inner = strat(RecomputeKind::Selective, true);
  const WindowPlan probe = microbatch_window_plan(
      cfg.shape, cfg.layout, inner, std::numeric_limits<std::int64_t>::max());
  // A budget slightly above the minimum leaves most microbatches
  // checkpointed but not all.
  const WindowPlan plan = microbatch_window_plan(
      cfg.shape, cfg.layout, inner,
      probe.min_feasible_budget + probe.min_feasible_budget / 4);
  CHECK(plan.recomputed_fraction > Rational(0));
  CHECK(plan.recomputed_fraction < Rational(1));

  // Feeding the fraction into the hardware-FLOPs model caps the overhead at
  // the all-checkpointed exact ratio.
  RecomputeStrategy windowed = inner;
  windowed.microbatch_level = true;
  const std::int64_t b_total = iteration_batch(cfg.layout);
  const Rational windowed_ratio =
      Rational(hardware_flops(cfg.shape, b_total, windowed, SelectiveFlopsModel::Equation,
                              plan.recomputed_fraction)) /
      Rational(model_flops(cfg.shape, b_total));
  CHECK(windowed_ratio > Rational(1));
  CHECK(windowed_ratio - Rational(1) <= hw_model_ratio_exact(cfg.shape) - Rational(1));
}
