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

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "actplan/config.hpp"
#include "actplan/rational.hpp"

namespace actplan::pipeline {

enum class EventKind { Forward, Recompute, Backward };
enum class StoredMode { Checkpointed, FullyStored };

// One box of the schedule diagram. Steps are logical ticks: every rank runs
// at most one microbatch-stage pass per tick and dependencies complete on
// strictly earlier ticks. Ranks are 0-based, microbatches 1-based.
struct ScheduleEvent {
  std::int32_t rank = 0;
  std::int32_t step = 0;
  EventKind kind = EventKind::Forward;
  std::int32_t microbatch = 1;
  StoredMode stored_mode = StoredMode::FullyStored;
};

// Microbatches whose forward has run but whose backward has not, at the
// point of maximum pressure on stage S: max(0, p - S).
std::int64_t in_flight(std::int64_t p, std::int64_t stage);

// modes[rank][mb-1]; a plain schedule treats every microbatch the same.
using StoredModeAssignment = std::vector<std::vector<StoredMode>>;

// 1F1B: rank S runs p-S warmup forwards, then alternates backward/forward
// until forwards are exhausted, then drains. Requires n_mb >= p. When a
// stored-mode assignment is given, checkpointed microbatches get a Recompute
// event immediately before their Backward.
std::vector<ScheduleEvent> build_1f1b(std::int64_t p, std::int64_t n_mb);
std::vector<ScheduleEvent> build_1f1b(std::int64_t p, std::int64_t n_mb,
                                      const StoredModeAssignment& modes, bool emit_recompute);

struct TimelinePoint {
  std::int32_t step = 0;
  std::int64_t bytes = 0;  // activation bytes held by the rank after the event
};

struct MemoryTimeline {
  std::vector<std::vector<TimelinePoint>> per_rank;
  std::vector<std::int64_t> peak_per_rank;
  std::vector<ScheduleEvent> events;  // sorted by (rank, step)
};

// Activation bytes over time for every pipeline rank. Interleaved layouts
// (m > 1) are simulated with the plain schedule; the analytical interleave
// factor in activation_memory covers the difference. With `dealloc` each
// microbatch's stage-output tensor is freed right after its forward pass;
// otherwise it stays until that microbatch's backward. Microbatch-level
// strategies need a window plan; use simulate_memory_with_modes for those.
MemoryTimeline simulate_memory(const ModelShape& shape, const ParallelLayout& layout,
                               const RecomputeStrategy& strategy, bool dealloc,
                               const ByteConvention& conv = {});
MemoryTimeline simulate_memory_with_modes(const ModelShape& shape, const ParallelLayout& layout,
                                          const RecomputeStrategy& strategy, bool dealloc,
                                          const StoredModeAssignment& modes,
                                          const ByteConvention& conv = {});

struct StageWindow {
  std::int64_t fully_stored = 0;
  std::int64_t checkpointed = 0;
};

struct WindowPlan {
  std::vector<StageWindow> per_stage;
  StoredModeAssignment modes;
  // Fraction of (stage, microbatch) passes that are recomputed; feeds the
  // microbatch-level hardware-FLOPs term.
  Rational recomputed_fraction{0};
  std::int64_t min_feasible_budget = 0;
};

class InfeasibleBudgetError : public std::runtime_error {
 public:
  InfeasibleBudgetError(const std::string& what, std::int64_t min_budget)
      : std::runtime_error(what), min_feasible_budget(min_budget) {}
  std::int64_t min_feasible_budget;
};

// Moving-window policy: on each rank, an incoming microbatch keeps all its
// activations while the projected peak stays within budget, and is
// checkpointed under `inner` otherwise. A fully-stored slot is freed by that
// microbatch's backward. Budget covers activations only (first-stage extras
// included); it must at least fit the all-checkpointed schedule.
WindowPlan microbatch_window_plan(const ModelShape& shape, const ParallelLayout& layout,
                                  const RecomputeStrategy& inner, std::int64_t budget,
                                  const ByteConvention& conv = {});

std::string event_kind_name(EventKind kind);
std::string stored_mode_name(StoredMode mode);

// CSV columns: rank,step,event,microbatch,stored_mode,bytes_after_event.
std::string timeline_csv(const MemoryTimeline& timeline);
// Box-chart data for external plotting.
nlohmann::json timeline_json(const MemoryTimeline& timeline);

}  // namespace actplan::pipeline
