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

#include <algorithm>
#include <limits>
#include <tuple>

#include <nlohmann/json.hpp>

#include "actplan/activation_memory.hpp"
#include "actplan/flops.hpp"
#include "actplan/pipeline_sim.hpp"

namespace actplan::planner {

namespace {

int strategy_ordinal(const RecomputeStrategy& s) {
  return static_cast<int>(s.kind) * 4 + (s.sequence_parallel ? 1 : 0) +
         (s.microbatch_level ? 2 : 0);
}

// Rank-0 activation peak. For m=1 this is the simulator's answer; for m>1
// the transformer part is scaled by the analytical interleave factor since
// the simulator models the plain schedule.
std::int64_t candidate_peak(const ModelShape& shape, const ParallelLayout& layout,
                            const RecomputeStrategy& strategy, const ByteConvention& conv) {
  const auto timeline = pipeline::simulate_memory(shape, layout, strategy, /*dealloc=*/true, conv);
  const std::int64_t sim_peak = timeline.peak_per_rank.at(0);
  if (layout.interleave <= 1) return sim_peak;
  const std::int64_t extras = extras_bytes(shape, layout, conv).sum();
  const Rational scaled =
      Rational(BigInt(sim_peak - extras)) * interleave_factor(layout) + Rational(BigInt(extras));
  return floor_bytes(scaled);
}

}  // namespace

PlanResult enumerate_plans(const ModelShape& shape, const Hardware& hw, const SearchSpace& space,
                           const ByteConvention& conv, std::int64_t weight_bytes_per_param,
                           std::int64_t optimizer_bytes_per_param) {
  if (space.tensor.empty() || space.pipeline.empty() || space.interleave.empty() ||
      space.microbatch.empty() || space.strategies.empty()) {
    throw std::invalid_argument("search space must be non-empty on every axis");
  }
  if (space.global_batch < 1) {
    throw std::invalid_argument("global_batch must be >= 1");
  }

  PlanResult result;
  std::int64_t min_shortfall = std::numeric_limits<std::int64_t>::max();

  for (const std::int64_t t : space.tensor) {
    for (const std::int64_t p : space.pipeline) {
      if (t < 1 || p < 1 || hw.devices % (t * p) != 0) continue;
      const std::int64_t d = hw.devices / (t * p);
      for (const std::int64_t m : space.interleave) {
        for (const std::int64_t b : space.microbatch) {
          if (b < 1 || space.global_batch % (b * d) != 0) continue;
          ParallelLayout layout{t, p, m, d, b, space.global_batch / (b * d)};
          if (!validate(shape, layout).empty()) continue;
          for (const RecomputeStrategy& strategy : space.strategies) {
            if (strategy.microbatch_level && m > 1) continue;  // simulator models m=1

            PlanCandidate cand;
            cand.layout = layout;
            cand.strategy = strategy;
            const auto po = params_and_optimizer_bytes(shape, layout, weight_bytes_per_param,
                                                       optimizer_bytes_per_param);
            cand.params_bytes = po.params;
            cand.optimizer_bytes = po.optimizer;
            cand.recomputed_fraction =
                strategy.kind == RecomputeKind::None ? Rational(0) : Rational(1);

            if (strategy.microbatch_level) {
              const std::int64_t budget = hw.device_mem - po.params - po.optimizer;
              try {
                const auto plan = pipeline::microbatch_window_plan(
                    shape, layout, strategy, std::max<std::int64_t>(budget, 0), conv);
                const auto timeline = pipeline::simulate_memory_with_modes(
                    shape, layout, strategy, /*dealloc=*/true, plan.modes, conv);
                cand.peak_bytes = timeline.peak_per_rank.at(0);
                cand.recomputed_fraction = plan.recomputed_fraction;
              } catch (const pipeline::InfeasibleBudgetError& err) {
                cand.peak_bytes = err.min_feasible_budget;
                cand.recomputed_fraction = Rational(1);
              }
            } else {
              cand.peak_bytes = candidate_peak(shape, layout, strategy, conv);
            }

            cand.hardware_flops =
                hardware_flops(shape, iteration_batch(layout), strategy,
                               SelectiveFlopsModel::Equation, cand.recomputed_fraction);
            const std::int64_t required = cand.peak_bytes + po.params + po.optimizer;
            cand.feasible = required <= hw.device_mem;
            cand.headroom = hw.device_mem - required;
            if (!cand.feasible) {
              min_shortfall = std::min(min_shortfall, required - hw.device_mem);
            }
            result.candidates.push_back(std::move(cand));
          }
        }
      }
    }
  }

  std::sort(result.candidates.begin(), result.candidates.end(),
            [](const PlanCandidate& a, const PlanCandidate& b) {
              if (a.feasible != b.feasible) return a.feasible;
              if (a.hardware_flops != b.hardware_flops) return a.hardware_flops < b.hardware_flops;
              if (a.headroom != b.headroom) return a.headroom > b.headroom;
              const auto key = [](const PlanCandidate& c) {
                return std::make_tuple(c.layout.tensor, c.layout.pipeline, c.layout.interleave,
                                       c.layout.microbatch, strategy_ordinal(c.strategy));
              };
              return key(a) < key(b);
            });

  result.any_feasible = std::any_of(result.candidates.begin(), result.candidates.end(),
                                    [](const PlanCandidate& c) { return c.feasible; });
  result.min_shortfall_bytes =
      result.any_feasible || result.candidates.empty() ? 0 : min_shortfall;
  return result;
}

nlohmann::json to_json(const PlanResult& result) {
  nlohmann::json candidates = nlohmann::json::array();
  for (const PlanCandidate& c : result.candidates) {
    candidates.push_back({{"t", c.layout.tensor},
                          {"p", c.layout.pipeline},
                          {"m", c.layout.interleave},
                          {"d", c.layout.data_parallel},
                          {"b", c.layout.microbatch},
                          {"n_mb", c.layout.microbatches_per_iter},
                          {"strategy", c.strategy.name()},
                          {"peak_bytes", c.peak_bytes},
                          {"params_bytes", c.params_bytes},
                          {"optimizer_bytes", c.optimizer_bytes},
                          {"hardware_flops", c.hardware_flops.str()},
                          {"feasible", c.feasible},
                          {"headroom_bytes", c.headroom},
                          {"recomputed_fraction", to_double(c.recomputed_fraction)}});
  }
  nlohmann::json doc;
  doc["candidates"] = candidates;
  doc["any_feasible"] = result.any_feasible;
  doc["min_shortfall_bytes"] = result.min_shortfall_bytes;
  return doc;
}

}  // namespace actplan::planner
