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

#include "actplan/activation_memory.hpp"

#include <nlohmann/json.hpp>

namespace actplan {

namespace {

// Element counts per transformer layer, before byte widths are applied.
// Activation elements per s*b*h:
//   replicated under plain tensor parallelism: 4
//     (QKV input, first MLP input, two layer-norm inputs)
//   sharded across the tensor group: 12
//     (Q, K, V, projection input, GeLU input 4, second MLP input 4)
// Mask bytes per s*b*h, replicated: 2 (post-attention and MLP dropouts).
// Attention interior per a*s^2*b: 2 activation elements (softmax output,
// softmax-dropout output) plus 1 mask byte (softmax-dropout mask).
constexpr std::int64_t kReplicatedActs = 4;
constexpr std::int64_t kShardedActs = 12;
constexpr std::int64_t kReplicatedMasks = 2;
constexpr std::int64_t kInteriorActs = 2;
constexpr std::int64_t kInteriorMasks = 1;

void check_convention(const ByteConvention& conv) {
  if (conv.activation_elem < 1 || conv.mask_elem < 1 || conv.logits_elem < 1) {
    throw std::invalid_argument("byte convention widths must be >= 1");
  }
}

BigInt sbh_elems(const ModelShape& shape, std::int64_t b) {
  return BigInt(shape.seq_len) * b * shape.hidden;
}

BigInt interior_elems(const ModelShape& shape, std::int64_t b) {
  return BigInt(shape.attention_heads) * shape.seq_len * shape.seq_len * b;
}

}  // namespace

Rational per_layer_bytes_exact(const ModelShape& shape, const ParallelLayout& layout,
                               const RecomputeStrategy& strategy, const ByteConvention& conv) {
  validate_or_throw(shape, layout);
  check_convention(conv);
  const BigInt sbh = sbh_elems(shape, layout.microbatch);
  if (strategy.kind == RecomputeKind::Full) {
    // Only the layer input survives; it is not sharded across the tensor
    // group (that variant would need an extra all-gather per layer).
    return Rational(conv.activation_elem * sbh);
  }
  const BigInt t = layout.tensor;
  const BigInt replicated =
      (kReplicatedActs * conv.activation_elem + kReplicatedMasks * conv.mask_elem) * sbh;
  const BigInt sharded = kShardedActs * conv.activation_elem * sbh;
  Rational bytes = Rational(replicated, strategy.sequence_parallel ? t : BigInt(1)) +
                   Rational(sharded, t);
  if (strategy.kind != RecomputeKind::Selective) {
    const BigInt interior =
        (kInteriorActs * conv.activation_elem + kInteriorMasks * conv.mask_elem) *
        interior_elems(shape, layout.microbatch);
    bytes += Rational(interior, t);
  }
  return bytes;
}

std::int64_t per_layer_bytes(const ModelShape& shape, const ParallelLayout& layout,
                             const RecomputeStrategy& strategy, const ByteConvention& conv) {
  return floor_bytes(per_layer_bytes_exact(shape, layout, strategy, conv));
}

LayerMemoryBreakdown layer_component_breakdown(const ModelShape& shape, std::int64_t microbatch,
                                               const ByteConvention& conv) {
  ParallelLayout serial;
  serial.microbatch = microbatch;
  validate_or_throw(shape, serial);
  check_convention(conv);
  const BigInt sbh = sbh_elems(shape, microbatch);
  const BigInt interior = interior_elems(shape, microbatch);
  LayerMemoryBreakdown out;
  // Attention: QKV input, Q, K, V, projection input (5 activation elements
  // per sbh) plus the post-attention dropout mask, and the interior terms.
  out.attention = to_int64(BigInt(5) * conv.activation_elem * sbh + conv.mask_elem * sbh +
                           (kInteriorActs * conv.activation_elem + kInteriorMasks * conv.mask_elem) *
                               interior);
  // MLP: first input, GeLU input (4), second input (4) -> 9 activation
  // elements per sbh plus one mask byte.
  out.mlp = to_int64(BigInt(9) * conv.activation_elem * sbh + conv.mask_elem * sbh);
  out.layer_norms = to_int64(BigInt(2) * conv.activation_elem * sbh);
  out.total = out.attention + out.mlp + out.layer_norms;
  return out;
}

Rational interleave_factor(const ParallelLayout& layout) {
  if (layout.interleave <= 1) return Rational(1);
  return Rational(1) +
         Rational(BigInt(layout.pipeline - 1), BigInt(layout.pipeline) * layout.interleave);
}

Rational total_first_stage_bytes_exact(const ModelShape& shape, const ParallelLayout& layout,
                                       const RecomputeStrategy& strategy,
                                       const ByteConvention& conv) {
  return per_layer_bytes_exact(shape, layout, strategy, conv) * Rational(BigInt(shape.layers)) *
         interleave_factor(layout);
}

std::int64_t total_first_stage_bytes(const ModelShape& shape, const ParallelLayout& layout,
                                     const RecomputeStrategy& strategy,
                                     const ByteConvention& conv) {
  return floor_bytes(total_first_stage_bytes_exact(shape, layout, strategy, conv));
}

Rational first_stage_extras_per_microbatch(const ModelShape& shape, const ParallelLayout& layout,
                                           const ByteConvention& conv) {
  // The embedding dropout mask, sharded along the sequence dimension.
  return Rational(conv.mask_elem * sbh_elems(shape, layout.microbatch), BigInt(layout.tensor));
}

Rational output_extras_per_microbatch(const ModelShape& shape, const ParallelLayout& layout,
                                      const ByteConvention& conv) {
  const BigInt sbh = sbh_elems(shape, layout.microbatch);
  const BigInt sbv = BigInt(shape.seq_len) * layout.microbatch * shape.vocab;
  return Rational(BigInt(2) * conv.activation_elem * sbh + conv.logits_elem * sbv,
                  BigInt(layout.tensor));
}

MemoryExtras extras_bytes(const ModelShape& shape, const ParallelLayout& layout,
                          const ByteConvention& conv) {
  validate_or_throw(shape, layout);
  check_convention(conv);
  const BigInt sbh = sbh_elems(shape, layout.microbatch);
  const BigInt t = layout.tensor;
  MemoryExtras out;
  out.embedding_dropout =
      floor_bytes(Rational(conv.mask_elem * sbh * layout.pipeline, t));
  if (layout.pipeline == 1) {
    out.final_layernorm = floor_bytes(Rational(conv.activation_elem * sbh, t));
    out.output_proj_input = out.final_layernorm;
    const BigInt sbv = BigInt(shape.seq_len) * layout.microbatch * shape.vocab;
    out.logits = floor_bytes(Rational(conv.logits_elem * sbv, t));
  }
  return out;
}

std::int64_t dealloc_savings_bytes(const ModelShape& shape, const ParallelLayout& layout,
                                   std::int64_t stage, const ByteConvention& conv) {
  if (stage < 0) throw std::invalid_argument("stage must be >= 0");
  const std::int64_t in_flight = std::max<std::int64_t>(0, layout.pipeline - stage);
  return to_int64(conv.activation_elem * sbh_elems(shape, layout.microbatch) * in_flight);
}

ParameterCounts parameter_counts(const ModelShape& shape, const ParallelLayout& layout) {
  validate_or_throw(shape, layout);
  const BigInt h = shape.hidden;
  const BigInt layer_matrices = 12 * h * h;   // QKV 3h^2, proj h^2, MLP 8h^2
  const BigInt layer_sharded_bias = 7 * h;    // QKV biases 3h, first MLP bias 4h
  const BigInt layer_replicated = 6 * h;      // proj + second MLP biases, two layer-norms
  const BigInt word_embedding = BigInt(shape.vocab) * h;
  const BigInt position_embedding = BigInt(shape.seq_len) * h;

  ParameterCounts out;
  out.total = BigInt(shape.layers) * (layer_matrices + layer_sharded_bias + layer_replicated) +
              word_embedding + position_embedding;
  const std::int64_t layers_per_stage = shape.layers / layout.pipeline;
  out.local_first_stage =
      layers_per_stage * ((layer_matrices + layer_sharded_bias) / layout.tensor +
                          layer_replicated) +
      word_embedding / layout.tensor + position_embedding;
  return out;
}

ParamsOptimizerBytes params_and_optimizer_bytes(const ModelShape& shape,
                                                const ParallelLayout& layout,
                                                std::int64_t weight_bytes_per_param,
                                                std::int64_t optimizer_bytes_per_param) {
  const ParameterCounts counts = parameter_counts(shape, layout);
  ParamsOptimizerBytes out;
  out.params = to_int64(counts.local_first_stage * weight_bytes_per_param);
  out.optimizer = to_int64(counts.local_first_stage * optimizer_bytes_per_param);
  return out;
}

Rational percent_of_baseline(const ModelShape& shape, const ParallelLayout& layout,
                             const RecomputeStrategy& strategy, const ByteConvention& conv) {
  RecomputeStrategy baseline;  // tensor parallel only, everything stored
  return per_layer_bytes_exact(shape, layout, strategy, conv) /
         per_layer_bytes_exact(shape, layout, baseline, conv);
}

MemoryReport memory_report(const ModelShape& shape, const ParallelLayout& layout,
                           const RecomputeStrategy& strategy, const ByteConvention& conv,
                           std::int64_t weight_bytes_per_param,
                           std::int64_t optimizer_bytes_per_param) {
  MemoryReport report;
  const Rational per_layer = per_layer_bytes_exact(shape, layout, strategy, conv);
  report.per_layer = floor_bytes(per_layer);
  report.transformer_total_first_stage = floor_bytes(per_layer * Rational(BigInt(shape.layers)));
  report.extras = extras_bytes(shape, layout, conv);
  report.interleave_factor = interleave_factor(layout);
  const auto po = params_and_optimizer_bytes(shape, layout, weight_bytes_per_param,
                                             optimizer_bytes_per_param);
  report.params = po.params;
  report.optimizer_state = po.optimizer;
  report.grand_total =
      floor_bytes(per_layer * Rational(BigInt(shape.layers)) * report.interleave_factor) +
      report.extras.sum() + report.params + report.optimizer_state;
  return report;
}

nlohmann::json to_json(const MemoryReport& r) {
  nlohmann::json extras;
  extras["embedding_dropout"] = r.extras.embedding_dropout;
  extras["final_layernorm"] = r.extras.final_layernorm;
  extras["output_proj_input"] = r.extras.output_proj_input;
  extras["logits"] = r.extras.logits;

  nlohmann::json doc;
  doc["per_layer"] = r.per_layer;
  doc["transformer_total_first_stage"] = r.transformer_total_first_stage;
  doc["extras"] = extras;
  doc["interleave_factor"] = {{"num", to_int64(r.interleave_factor.numerator())},
                              {"den", to_int64(r.interleave_factor.denominator())}};
  doc["params"] = r.params;
  doc["optimizer_state"] = r.optimizer_state;
  doc["grand_total"] = r.grand_total;
  return doc;
}

}  // namespace actplan
