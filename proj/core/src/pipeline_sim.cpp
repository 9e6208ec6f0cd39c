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

#include <algorithm>
#include <limits>

#include <nlohmann/json.hpp>

#include "actplan/activation_memory.hpp"

namespace actplan::pipeline {

std::int64_t in_flight(std::int64_t p, std::int64_t stage) {
  if (stage < 0) throw std::invalid_argument("stage must be >= 0");
  return std::max<std::int64_t>(0, p - stage);
}

namespace {

struct ProgramEvent {
  EventKind kind;
  std::int32_t microbatch;  // 1-based
};

// Per-rank instruction order: p-S warmup forwards, then strictly alternating
// backward/forward, then the backward drain.
std::vector<ProgramEvent> rank_program(std::int64_t p, std::int64_t stage, std::int64_t n_mb) {
  std::vector<ProgramEvent> prog;
  const std::int64_t warmup = p - stage;  // n_mb >= p >= warmup
  std::int64_t forwards = 0;
  std::int64_t backwards = 0;
  for (; forwards < warmup; ++forwards) {
    prog.push_back({EventKind::Forward, static_cast<std::int32_t>(forwards + 1)});
  }
  while (backwards < n_mb) {
    ++backwards;
    prog.push_back({EventKind::Backward, static_cast<std::int32_t>(backwards)});
    if (forwards < n_mb) {
      ++forwards;
      prog.push_back({EventKind::Forward, static_cast<std::int32_t>(forwards)});
    }
  }
  return prog;
}

struct ScheduleInputs {
  std::int64_t p;
  std::int64_t n_mb;
  const StoredModeAssignment* modes;  // may be null (all FullyStored)
  bool emit_recompute;
};

StoredMode mode_of(const ScheduleInputs& in, std::int64_t rank, std::int32_t mb) {
  if (in.modes == nullptr) return StoredMode::FullyStored;
  return (*in.modes)[static_cast<std::size_t>(rank)][static_cast<std::size_t>(mb - 1)];
}

// Deterministic list scheduling: each tick, every rank fires its next
// program event if the cross-rank dependency finished on an earlier tick.
// Forward(S, mb) needs Forward(S-1, mb); Backward(S, mb) needs
// Backward(S+1, mb) (or its own forward on the last stage); Recompute shares
// Backward's dependency and must complete first.
std::vector<ScheduleEvent> schedule(const ScheduleInputs& in) {
  const std::int64_t p = in.p;
  const std::int64_t n_mb = in.n_mb;
  if (n_mb < p) {
    throw std::invalid_argument("pipeline cannot be filled: n_mb=" + std::to_string(n_mb) +
                                " < p=" + std::to_string(p));
  }

  std::vector<std::vector<ProgramEvent>> programs;
  programs.reserve(static_cast<std::size_t>(p));
  for (std::int64_t s = 0; s < p; ++s) {
    std::vector<ProgramEvent> prog;
    for (const ProgramEvent& ev : rank_program(p, s, n_mb)) {
      if (ev.kind == EventKind::Backward && in.emit_recompute &&
          mode_of(in, s, ev.microbatch) == StoredMode::Checkpointed) {
        prog.push_back({EventKind::Recompute, ev.microbatch});
      }
      prog.push_back(ev);
    }
    programs.push_back(std::move(prog));
  }

  constexpr std::int32_t kPending = std::numeric_limits<std::int32_t>::max();
  auto grid = [n_mb](std::int64_t rank, std::int32_t mb) {
    return static_cast<std::size_t>(rank * n_mb + (mb - 1));
  };
  std::vector<std::int32_t> fwd_done(static_cast<std::size_t>(p * n_mb), kPending);
  std::vector<std::int32_t> bwd_done(static_cast<std::size_t>(p * n_mb), kPending);
  std::vector<std::int32_t> rec_done(static_cast<std::size_t>(p * n_mb), kPending);

  std::vector<std::size_t> cursor(static_cast<std::size_t>(p), 0);
  std::vector<ScheduleEvent> events;
  std::int32_t tick = 0;
  std::size_t remaining = 0;
  for (const auto& prog : programs) remaining += prog.size();

  while (remaining > 0) {
    bool fired_any = false;
    for (std::int64_t s = 0; s < p; ++s) {
      const auto& prog = programs[static_cast<std::size_t>(s)];
      std::size_t& idx = cursor[static_cast<std::size_t>(s)];
      if (idx >= prog.size()) continue;
      const ProgramEvent ev = prog[idx];

      bool ready = false;
      const bool grad_ready =
          s == p - 1 ? fwd_done[grid(s, ev.microbatch)] < tick
                     : bwd_done[grid(s + 1, ev.microbatch)] < tick;
      switch (ev.kind) {
        case EventKind::Forward:
          ready = s == 0 || fwd_done[grid(s - 1, ev.microbatch)] < tick;
          break;
        case EventKind::Recompute:
          ready = grad_ready;
          break;
        case EventKind::Backward:
          ready = grad_ready;
          if (in.emit_recompute && mode_of(in, s, ev.microbatch) == StoredMode::Checkpointed) {
            ready = ready && rec_done[grid(s, ev.microbatch)] < tick;
          }
          break;
      }
      if (!ready) continue;

      switch (ev.kind) {
        case EventKind::Forward: fwd_done[grid(s, ev.microbatch)] = tick; break;
        case EventKind::Recompute: rec_done[grid(s, ev.microbatch)] = tick; break;
        case EventKind::Backward: bwd_done[grid(s, ev.microbatch)] = tick; break;
      }
      events.push_back({static_cast<std::int32_t>(s), tick, ev.kind, ev.microbatch,
                        mode_of(in, s, ev.microbatch)});
      ++idx;
      --remaining;
      fired_any = true;
    }
    if (!fired_any && remaining > 0) {
      throw std::logic_error("pipeline schedule deadlocked");  // unreachable for n_mb >= p
    }
    ++tick;
  }

  std::sort(events.begin(), events.end(), [](const ScheduleEvent& a, const ScheduleEvent& b) {
    if (a.rank != b.rank) return a.rank < b.rank;
    return a.step < b.step;
  });
  return events;
}

}  // namespace

std::vector<ScheduleEvent> build_1f1b(std::int64_t p, std::int64_t n_mb) {
  return schedule({p, n_mb, nullptr, false});
}

std::vector<ScheduleEvent> build_1f1b(std::int64_t p, std::int64_t n_mb,
                                      const StoredModeAssignment& modes, bool emit_recompute) {
  if (modes.size() != static_cast<std::size_t>(p)) {
    throw std::invalid_argument("stored-mode assignment must have one row per rank");
  }
  for (const auto& row : modes) {
    if (row.size() != static_cast<std::size_t>(n_mb)) {
      throw std::invalid_argument("stored-mode assignment must have one entry per microbatch");
    }
  }
  return schedule({p, n_mb, &modes, emit_recompute});
}

namespace {

struct MicrobatchBytes {
  std::int64_t checkpointed = 0;
  std::int64_t fully_stored = 0;
};

// Activation bytes one microbatch pins on one rank, by stored mode. The
// first stage adds the embedding-dropout mask shard; a p=1 device also holds
// the output-side extras.
MicrobatchBytes microbatch_bytes(const ModelShape& shape, const ParallelLayout& layout,
                                 const RecomputeStrategy& strategy, std::int64_t stage,
                                 const ByteConvention& conv) {
  const std::int64_t layers_per_stage = shape.layers / layout.pipeline;
  RecomputeStrategy stored = strategy;
  stored.kind = RecomputeKind::None;
  stored.microbatch_level = false;
  RecomputeStrategy checkpointed = strategy;
  checkpointed.microbatch_level = false;

  Rational extras(0);
  if (stage == 0) {
    extras += first_stage_extras_per_microbatch(shape, layout, conv);
    if (layout.pipeline == 1) {
      extras += output_extras_per_microbatch(shape, layout, conv);
    }
  }
  const Rational layers{BigInt(layers_per_stage)};
  MicrobatchBytes out;
  out.fully_stored =
      floor_bytes(per_layer_bytes_exact(shape, layout, stored, conv) * layers + extras);
  out.checkpointed =
      strategy.kind == RecomputeKind::None
          ? out.fully_stored
          : floor_bytes(per_layer_bytes_exact(shape, layout, checkpointed, conv) * layers +
                        extras);
  return out;
}

MemoryTimeline run_simulation(const ModelShape& shape, const ParallelLayout& layout,
                              const RecomputeStrategy& strategy, bool dealloc,
                              const StoredModeAssignment* modes, const ByteConvention& conv) {
  validate_or_throw(shape, layout);
  const std::int64_t p = layout.pipeline;
  const std::int64_t n_mb = layout.microbatches_per_iter;

  StoredModeAssignment uniform;
  if (modes == nullptr) {
    const StoredMode mode = strategy.kind == RecomputeKind::None ? StoredMode::FullyStored
                                                                 : StoredMode::Checkpointed;
    uniform.assign(static_cast<std::size_t>(p),
                   std::vector<StoredMode>(static_cast<std::size_t>(n_mb), mode));
    modes = &uniform;
  }

  const bool recompute = strategy.kind != RecomputeKind::None;
  MemoryTimeline timeline;
  timeline.events = build_1f1b(p, n_mb, *modes, recompute);
  timeline.per_rank.assign(static_cast<std::size_t>(p), {});
  timeline.peak_per_rank.assign(static_cast<std::size_t>(p), 0);

  const std::int64_t output_tensor_bytes =
      conv.activation_elem * shape.seq_len * layout.microbatch * shape.hidden;

  std::vector<MicrobatchBytes> stage_bytes;
  stage_bytes.reserve(static_cast<std::size_t>(p));
  for (std::int64_t s = 0; s < p; ++s) {
    stage_bytes.push_back(microbatch_bytes(shape, layout, strategy, s, conv));
  }

  std::vector<std::int64_t> current(static_cast<std::size_t>(p), 0);
  for (const ScheduleEvent& ev : timeline.events) {
    const auto rank = static_cast<std::size_t>(ev.rank);
    const MicrobatchBytes& mb = stage_bytes[rank];
    const std::int64_t stored = ev.stored_mode == StoredMode::FullyStored ? mb.fully_stored
                                                                          : mb.checkpointed;
    switch (ev.kind) {
      case EventKind::Forward:
        current[rank] += stored;
        if (!dealloc) current[rank] += output_tensor_bytes;
        break;
      case EventKind::Recompute:
        break;
      case EventKind::Backward:
        current[rank] -= stored;
        if (!dealloc) current[rank] -= output_tensor_bytes;
        break;
    }
    timeline.per_rank[rank].push_back({ev.step, current[rank]});
    timeline.peak_per_rank[rank] = std::max(timeline.peak_per_rank[rank], current[rank]);
  }
  return timeline;
}

}  // namespace

MemoryTimeline simulate_memory(const ModelShape& shape, const ParallelLayout& layout,
                               const RecomputeStrategy& strategy, bool dealloc,
                               const ByteConvention& conv) {
  if (strategy.microbatch_level) {
    throw std::invalid_argument(
        "microbatch-level strategies need a window plan; call microbatch_window_plan and "
        "simulate_memory_with_modes");
  }
  return run_simulation(shape, layout, strategy, dealloc, nullptr, conv);
}

MemoryTimeline simulate_memory_with_modes(const ModelShape& shape, const ParallelLayout& layout,
                                          const RecomputeStrategy& strategy, bool dealloc,
                                          const StoredModeAssignment& modes,
                                          const ByteConvention& conv) {
  return run_simulation(shape, layout, strategy, dealloc, &modes, conv);
}

WindowPlan microbatch_window_plan(const ModelShape& shape, const ParallelLayout& layout,
                                  const RecomputeStrategy& inner, std::int64_t budget,
                                  const ByteConvention& conv) {
  validate_or_throw(shape, layout);
  if (inner.kind == RecomputeKind::None) {
    throw std::invalid_argument("window plan needs a full or selective inner strategy");
  }
  const std::int64_t p = layout.pipeline;
  const std::int64_t n_mb = layout.microbatches_per_iter;

  WindowPlan plan;
  plan.per_stage.resize(static_cast<std::size_t>(p));
  plan.modes.assign(static_cast<std::size_t>(p),
                    std::vector<StoredMode>(static_cast<std::size_t>(n_mb),
                                            StoredMode::Checkpointed));

  std::int64_t min_budget = 0;
  std::vector<MicrobatchBytes> stage_bytes;
  for (std::int64_t s = 0; s < p; ++s) {
    stage_bytes.push_back(microbatch_bytes(shape, layout, inner, s, conv));
    min_budget = std::max(min_budget, in_flight(p, s) * stage_bytes.back().checkpointed);
  }
  plan.min_feasible_budget = min_budget;
  if (budget < min_budget) {
    throw InfeasibleBudgetError(
        "budget " + std::to_string(budget) + " bytes cannot hold the all-checkpointed " +
            "schedule; minimum feasible budget is " + std::to_string(min_budget) + " bytes",
        min_budget);
  }

  BigInt recomputed = 0;
  for (std::int64_t s = 0; s < p; ++s) {
    const MicrobatchBytes& mb = stage_bytes[static_cast<std::size_t>(s)];
    const std::int64_t slots = in_flight(p, s);
    std::int64_t live_full = 0;
    auto& row = plan.modes[static_cast<std::size_t>(s)];
    StageWindow window;
    for (const ProgramEvent& ev : rank_program(p, s, n_mb)) {
      if (ev.kind == EventKind::Forward) {
        // Worst-case projected peak if this microbatch keeps everything:
        // current fully-stored ones plus this one, remaining slots refill
        // with checkpointed microbatches.
        const std::int64_t projected =
            (live_full + 1) * mb.fully_stored +
            std::max<std::int64_t>(0, slots - (live_full + 1)) * mb.checkpointed;
        if (projected <= budget) {
          row[static_cast<std::size_t>(ev.microbatch - 1)] = StoredMode::FullyStored;
          ++live_full;
          ++window.fully_stored;
        } else {
          ++window.checkpointed;
        }
      } else if (ev.kind == EventKind::Backward &&
                 row[static_cast<std::size_t>(ev.microbatch - 1)] == StoredMode::FullyStored) {
        --live_full;
      }
    }
    plan.per_stage[static_cast<std::size_t>(s)] = window;
    recomputed += window.checkpointed;
  }
  plan.recomputed_fraction = Rational(recomputed, BigInt(p) * n_mb);
  return plan;
}

std::string event_kind_name(EventKind kind) {
  switch (kind) {
    case EventKind::Forward: return "forward";
    case EventKind::Recompute: return "recompute";
    case EventKind::Backward: return "backward";
  }
  return "?";
}

std::string stored_mode_name(StoredMode mode) {
  return mode == StoredMode::FullyStored ? "fully_stored" : "checkpointed";
}

std::string timeline_csv(const MemoryTimeline& timeline) {
  std::string out = "rank,step,event,microbatch,stored_mode,bytes_after_event\n";
  std::vector<std::size_t> next(timeline.per_rank.size(), 0);
  for (const ScheduleEvent& ev : timeline.events) {
    const auto rank = static_cast<std::size_t>(ev.rank);
    const TimelinePoint& point = timeline.per_rank[rank][next[rank]++];
    out += std::to_string(ev.rank) + ',' + std::to_string(ev.step) + ',' +
           event_kind_name(ev.kind) + ',' + std::to_string(ev.microbatch) + ',' +
           stored_mode_name(ev.stored_mode) + ',' + std::to_string(point.bytes) + '\n';
  }
  return out;
}

nlohmann::json timeline_json(const MemoryTimeline& timeline) {
  nlohmann::json events = nlohmann::json::array();
  std::vector<std::size_t> next(timeline.per_rank.size(), 0);
  for (const ScheduleEvent& ev : timeline.events) {
    const auto rank = static_cast<std::size_t>(ev.rank);
    const TimelinePoint& point = timeline.per_rank[rank][next[rank]++];
    events.push_back({{"rank", ev.rank},
                      {"step", ev.step},
                      {"kind", event_kind_name(ev.kind)},
                      {"microbatch", ev.microbatch},
                      {"stored_mode", stored_mode_name(ev.stored_mode)},
                      {"bytes_after_event", point.bytes}});
  }
  nlohmann::json doc;
  doc["ranks"] = timeline.per_rank.size();
  doc["peak_per_rank"] = timeline.peak_per_rank;
  doc["events"] = events;
  return doc;
}

}  // namespace actplan::pipeline
