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

#include "actplan/config.hpp"
#include "actplan/seqpar/collectives.hpp"
#include "actplan/seqpar/rng.hpp"
#include "actplan/seqpar/tensor.hpp"

namespace actplan::seqpar {

struct BlockConfig {
  std::int64_t heads = 0;
  std::int64_t hidden = 0;
  std::int64_t seq = 0;
  std::int64_t batch = 0;
  double dropout_p = 0.0;
  bool causal = false;
  std::uint64_t seed = 42;
  std::uint32_t layer_index = 0;
  std::uint32_t microbatch = 1;
  double layer_norm_eps = 1e-5;
  ByteConvention bytes;

  std::int64_t head_dim() const { return hidden / heads; }
};

// One transformer layer's parameters in full (unsharded) layout. w1/b1 is
// the h -> 4h linear whose weight is column-sharded across ranks, w2/b2 the
// 4h -> h linear sharded by rows.
struct LayerParams {
  Tensor wq, wk, wv;  // h x h
  Tensor bq, bk, bv;  // h
  Tensor wo, bo;      // h x h, h
  Tensor w1, b1;      // h x 4h, 4h
  Tensor w2, b2;      // 4h x h, h
  Tensor ln1_gain, ln1_bias;  // h
  Tensor ln2_gain, ln2_bias;  // h

  static LayerParams random(const BlockConfig& cfg, std::uint64_t seed);
  static LayerParams zeros(const BlockConfig& cfg);  // layer-norm gains set to 1
  std::vector<std::pair<std::string, Tensor*>> named_tensors();
};

struct LedgerEntry {
  std::string name;
  std::int64_t elements = 0;
  std::int64_t bytes = 0;
};

// Instrumented record of every tensor the forward pass keeps for
// backpropagation, with its storage cost under the byte convention.
struct ActivationLedger {
  std::vector<LedgerEntry> entries;
  void add(std::string name, std::int64_t elements, std::int64_t bytes_per_elem);
  std::int64_t total_bytes() const;
};

struct LayerNormStats {
  Tensor mean;     // one per normalized row
  Tensor inv_std;
};

Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias, double eps,
                  LayerNormStats* stats);
// Returns dx; accumulates gain/bias gradients.
Tensor layer_norm_backward(const Tensor& dy, const Tensor& x, const LayerNormStats& stats,
                           const Tensor& gain, Tensor* dgain, Tensor* dbias);

Tensor gelu(const Tensor& x);
Tensor gelu_backward(const Tensor& dy, const Tensor& x);

// The selective-recomputation region: QK^T, softmax, softmax dropout, and
// the dropout output feeding attention-over-values. Pure function of Q, K
// and the counter-based mask, so a recomputation reproduces it bit-for-bit.
struct AttentionInterior {
  Tensor softmax_out;   // {local_heads, b, s, s}
  Tensor dropout_mask;
  Tensor dropout_out;
};

// q, k: {s, b, local_heads * head_dim}; head_offset positions the rank's
// slice inside the global head-indexed dropout mask.
AttentionInterior attention_interior(const Tensor& q, const Tensor& k, const BlockConfig& cfg,
                                     std::int64_t head_offset, std::int64_t local_heads);

// Saved state (and ledger) of a single-rank forward pass; the oracle the
// parallel execution must match.
struct ReferenceForward {
  Tensor y;
  ActivationLedger ledger;
  BlockConfig cfg;

  Tensor x, y1;
  LayerNormStats ln1_stats, ln2_stats;
  Tensor q, k, v;
  AttentionInterior interior;
  Tensor attn_proj_input;   // attention-over-values output, input to wo
  Tensor attn_dropout_mask; // {s, b, h}
  Tensor r1, y2;
  Tensor gelu_input, fc2_input;  // {s, b, 4h}
  Tensor mlp_dropout_mask;       // {s, b, h}
};

ReferenceForward reference_block_forward(const Tensor& x, const LayerParams& params,
                                         const BlockConfig& cfg);

struct BlockGrads {
  LayerParams params;  // same tensor layout, holding gradients
  Tensor dx;
};

BlockGrads reference_block_backward(const Tensor& dy, const ReferenceForward& fwd,
                                    const LayerParams& params);

// Saved per-rank state of the tensor+sequence-parallel forward. Layer-norm
// and dropout regions live on sequence shards; attention and MLP interiors
// on hidden shards; the gathered layer-norm outputs are *not* kept — only
// their sequence shards are, and the backward pass re-gathers them.
struct SeqparForward {
  std::int64_t t = 1;
  BlockConfig cfg;
  std::vector<Tensor> y_shards;  // {s/t, b, h} each
  std::vector<ActivationLedger> ledgers;
  CommLog comm;

  RankShardedTensor sharded_output() const;

  std::vector<Tensor> x_shards, y1_shards;
  std::vector<LayerNormStats> ln1_stats, ln2_stats;
  std::vector<Tensor> q, k, v;                  // {s, b, h/t}
  std::vector<AttentionInterior> interior;
  std::vector<Tensor> attn_proj_input;          // {s, b, h/t}
  std::vector<Tensor> attn_dropout_mask;        // {s/t, b, h}
  std::vector<Tensor> r1_shards, y2_shards;
  std::vector<Tensor> gelu_input, fc2_input;    // {s, b, 4h/t}
  std::vector<Tensor> mlp_dropout_mask;         // {s/t, b, h}
};

// x_shards: the sequence-sharded layer input, one shard per simulated rank.
// Requires s, h, and the head count divisible by t.
SeqparForward seqpar_block_forward(const std::vector<Tensor>& x_shards,
                                   const LayerParams& params, std::int64_t t,
                                   const BlockConfig& cfg);
SeqparForward seqpar_block_forward(const RankShardedTensor& x, const LayerParams& params,
                                   const BlockConfig& cfg);

struct SeqparBackward {
  std::vector<Tensor> dx_shards;
  LayerParams param_grads;  // assembled into full layout for comparison
  // Column/row-parallel weight gradients stay rank-local; these are the
  // pre-assembly shards for the locality check.
  std::vector<Tensor> w1_grad_shards;
  CommLog comm;
};

SeqparBackward seqpar_block_backward(const std::vector<Tensor>& dy_shards,
                                     const SeqparForward& fwd, const LayerParams& params);

}  // namespace actplan::seqpar
