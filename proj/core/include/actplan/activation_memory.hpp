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

#include <nlohmann/json_fwd.hpp>

#include "actplan/config.hpp"
#include "actplan/rational.hpp"

namespace actplan {

// Per-layer activation storage, itemized by block. All values are bytes and
// assume no model parallelism (t = 1).
struct LayerMemoryBreakdown {
  std::int64_t attention = 0;   // 11*s*b*h + 5*a*s^2*b with default widths
  std::int64_t mlp = 0;         // 19*s*b*h
  std::int64_t layer_norms = 0; // 4*s*b*h
  std::int64_t total = 0;
};

// Activation storage outside the transformer stack. The last three entries
// exist only on a p=1 (single-stage) device; with pipelining they belong to
// the last stage and are excluded from the first-stage accounting.
struct MemoryExtras {
  std::int64_t embedding_dropout = 0;  // s*b*h*p/t mask bytes
  std::int64_t final_layernorm = 0;    // 2*s*b*h/t, p=1 only
  std::int64_t output_proj_input = 0;  // 2*s*b*h/t, p=1 only
  std::int64_t logits = 0;             // 4*s*b*v/t, p=1 only

  std::int64_t sum() const {
    return embedding_dropout + final_layernorm + output_proj_input + logits;
  }
};

struct MemoryReport {
  std::int64_t per_layer = 0;
  // per_layer * L, before interleave scaling; the grand total multiplies
  // this by interleave_factor.
  std::int64_t transformer_total_first_stage = 0;
  MemoryExtras extras;
  Rational interleave_factor{1};
  std::int64_t params = 0;
  std::int64_t optimizer_state = 0;
  std::int64_t grand_total = 0;
};

// Activation bytes for one transformer layer under the given recompute
// regime. The six regimes, with default byte widths:
//
//   no parallelism (t=1)          sbh * (34 + 5as/h)
//   tensor parallel               sbh * (10 + 24/t + 5as/ht)
//   tensor + sequence             sbh * (34 + 5as/h) / t
//   tensor + selective            sbh * (10 + 24/t)
//   tensor + sequence + selective sbh * 34/t
//   full recompute                sbh * 2
//
// The coefficients decompose into element counts scaled by ByteConvention:
// per s*b*h, 4 replicated + 12 tensor-sharded activation elements and 2
// replicated mask bytes; per a*s^2*b, 2 activation elements plus 1 mask byte
// in the attention interior. Sequence parallelism shards the replicated
// part; selective recomputation drops the attention interior; full
// recomputation keeps only the layer input (1 activation element per sbh).
//
// For a microbatch-level strategy this returns the checkpointed row; window
// composition is pipeline_sim's concern.
Rational per_layer_bytes_exact(const ModelShape& shape, const ParallelLayout& layout,
                               const RecomputeStrategy& strategy,
                               const ByteConvention& conv = {});
std::int64_t per_layer_bytes(const ModelShape& shape, const ParallelLayout& layout,
                             const RecomputeStrategy& strategy, const ByteConvention& conv = {});

// Itemization of the no-parallelism layer footprint; the analytical oracle
// for the instrumented byte ledger in seqpar.
LayerMemoryBreakdown layer_component_breakdown(const ModelShape& shape, std::int64_t microbatch,
                                               const ByteConvention& conv = {});

// Extra activation memory factor of the interleaved schedule:
// 1 + (p-1)/(p*m) for m > 1, else exactly 1.
Rational interleave_factor(const ParallelLayout& layout);

// First pipeline stage stores p * L/p = L layers of activations, scaled by
// the interleave factor when m > 1.
Rational total_first_stage_bytes_exact(const ModelShape& shape, const ParallelLayout& layout,
                                       const RecomputeStrategy& strategy,
                                       const ByteConvention& conv = {});
std::int64_t total_first_stage_bytes(const ModelShape& shape, const ParallelLayout& layout,
                                     const RecomputeStrategy& strategy,
                                     const ByteConvention& conv = {});

MemoryExtras extras_bytes(const ModelShape& shape, const ParallelLayout& layout,
                          const ByteConvention& conv = {});

// Per-microbatch slices of the extras, used by the pipeline simulator: each
// in-flight microbatch on the first stage pins one embedding-dropout mask
// shard; on a p=1 device it additionally pins the output-side extras.
Rational first_stage_extras_per_microbatch(const ModelShape& shape, const ParallelLayout& layout,
                                           const ByteConvention& conv = {});
Rational output_extras_per_microbatch(const ModelShape& shape, const ParallelLayout& layout,
                                      const ByteConvention& conv = {});

// Bytes saved on stage S by deallocating each microbatch's stage-output
// tensor after its forward pass: elem_bytes * s * b * h * max(0, p - S).
std::int64_t dealloc_savings_bytes(const ModelShape& shape, const ParallelLayout& layout,
                                   std::int64_t stage, const ByteConvention& conv = {});

struct ParameterCounts {
  BigInt total;              // whole model
  BigInt local_first_stage;  // resident on one first-stage rank
};

// N = 12*L*h^2*(1 + 13/(12h)) + (v+s)*h. Locally, transformer matrices and
// the vocab embedding shard by t, each stage holds L/p layers, and
// layer-norm parameters plus row-parallel biases stay replicated.
ParameterCounts parameter_counts(const ModelShape& shape, const ParallelLayout& layout);

struct ParamsOptimizerBytes {
  std::int64_t params = 0;
  std::int64_t optimizer = 0;
};

// weight_bytes_per_param defaults to fp16 weights; the 14 optimizer bytes
// are mixed-precision Adam (fp16 grad + fp32 master + two fp32 moments).
ParamsOptimizerBytes params_and_optimizer_bytes(const ModelShape& shape,
                                                const ParallelLayout& layout,
                                                std::int64_t weight_bytes_per_param = 2,
                                                std::int64_t optimizer_bytes_per_param = 14);

// Per-layer bytes of `strategy` relative to the tensor-parallel baseline
// (no recompute, no sequence parallelism) at the same t.
Rational percent_of_baseline(const ModelShape& shape, const ParallelLayout& layout,
                             const RecomputeStrategy& strategy, const ByteConvention& conv = {});

MemoryReport memory_report(const ModelShape& shape, const ParallelLayout& layout,
                           const RecomputeStrategy& strategy, const ByteConvention& conv = {},
                           std::int64_t weight_bytes_per_param = 2,
                           std::int64_t optimizer_bytes_per_param = 14);

nlohmann::json to_json(const MemoryReport& report);

}  // namespace actplan
