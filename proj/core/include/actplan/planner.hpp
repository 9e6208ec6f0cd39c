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
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "actplan/config.hpp"
#include "actplan/rational.hpp"

namespace actplan::planner {

// Candidate axes. Values that fail divisibility or device-count constraints
// are skipped, not reported. global_batch fixes the samples per iteration so
// hardware FLOPs are comparable across candidates; for each (t, p, b) the
// data-parallel size is devices / (t*p) and n_mb = global_batch / (b*d).
struct SearchSpace {
  std::vector<std::int64_t> tensor;
  std::vector<std::int64_t> pipeline;
  std::vector<std::int64_t> interleave;
  std::vector<std::int64_t> microbatch;
  std::vector<RecomputeStrategy> strategies;
  std::int64_t global_batch = 0;
};

struct PlanCandidate {
  ParallelLayout layout;
  RecomputeStrategy strategy;
  std::int64_t peak_bytes = 0;  // rank-0 activation peak
  BigInt hardware_flops;
  bool feasible = false;
  std::int64_t headroom = 0;  // device_mem - (peak + params + optimizer)
  std::int64_t params_bytes = 0;
  std::int64_t optimizer_bytes = 0;
  Rational recomputed_fraction{0};
};

struct PlanResult {
  std::vector<PlanCandidate> candidates;  // ranked
  bool any_feasible = false;
  std::int64_t min_shortfall_bytes = 0;   // smallest extra memory that would fit, if none feasible
};

// Enumerates the space and ranks candidates: feasible first, then ascending
// hardware FLOPs, tie-broken by descending headroom, then ascending t (and a
// fixed residual key so the order is total). Peaks come from the pipeline
// simulator's rank-0 peak; interleaved layouts scale the transformer part by
// the analytical factor. Microbatch-level strategies are planned against the
// actual headroom and evaluated on non-interleaved layouts only.
PlanResult enumerate_plans(const ModelShape& shape, const Hardware& hw, const SearchSpace& space,
                           const ByteConvention& conv = {},
                           std::int64_t weight_bytes_per_param = 2,
                           std::int64_t optimizer_bytes_per_param = 14);

nlohmann::json to_json(const PlanResult& result);

}  // namespace actplan::planner
