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

#include <cmath>
#include <limits>

#include <doctest.h>

#include "actplan/activation_memory.hpp"
#include "actplan/seqpar/block.hpp"
#include "actplan/seqpar/collectives.hpp"
#include "actplan/seqpar/rng.hpp"
#include "actplan/seqpar/verify.hpp"

using namespace actplan;
using namespace actplan::seqpar;

namespace {

BlockConfig toy_config() {
  BlockConfig cfg;
  cfg.heads = 2;
  cfg.hidden = 8;
  cfg.seq = 4;
  cfg.batch = 1;
  cfg.seed = 7;
  return cfg;
}

Tensor tensor_of(std::vector<std::int64_t> shape, std::initializer_list<double> values) {
  Tensor out(std::move(shape));
  std::int64_t i = 0;
  for (double v : values) out[i++] = v;
  return out;
}

std::int64_t group_bytes(const ActivationLedger& ledger,
                         std::initializer_list<const char*> names) {
  std::int64_t total = 0;
  for (const LedgerEntry& e : ledger.entries) {
    for (const char* name : names) {
      if (e.name == name) total += e.bytes;
    }
  }
  return total;
}

}  // namespace

TEST_CASE("reduce-scatter sums rank partials then shards them") {
  std::vector<Tensor> partials;
  partials.push_back(tensor_of({2}, {1, 2}));
  partials.push_back(tensor_of({2}, {3, 4}));
  const auto shards = reduce_scatter(partials, 0);
  REQUIRE(shards.size() == 2);
  CHECK(shards[0][0] == 4);
  CHECK(shards[1][0] == 6);
}

TEST_CASE("at t=1 every collective is the identity") {
  std::vector<Tensor> one;
  one.push_back(tensor_of({2, 2}, {1, 2, 3, 4}));
  CHECK(bit_equal(all_gather(one, 0), one[0]));
  CHECK(bit_equal(all_reduce(one), one[0]));
  const auto scattered = reduce_scatter(one, 0);
  REQUIRE(scattered.size() == 1);
  CHECK(bit_equal(scattered[0], one[0]));
}

TEST_CASE("all_reduce equals all_gather of reduce_scatter on integer tensors") {
  for (std::uint64_t trial = 0; trial < 50; ++trial) {
    std::vector<Tensor> partials;
    for (std::int64_t r = 0; r < 4; ++r) {
      Tensor part({8, 3});
      for (std::int64_t i = 0; i < part.numel(); ++i) {
        part[i] = std::floor(uniform01(hash_counter(trial, static_cast<std::uint64_t>(r)),
                                       static_cast<std::uint64_t>(i)) *
                             33.0) -
                  16.0;
      }
      partials.push_back(std::move(part));
    }
    CHECK(bit_equal(all_reduce(partials), all_gather(reduce_scatter(partials, 0), 0)));
  }
}

TEST_CASE("collectives reject ragged rank groups") {
  std::vector<Tensor> ragged;
  ragged.push_back(Tensor({2, 2}));
  ragged.push_back(Tensor({2, 3}));
  CHECK_THROWS_AS(all_reduce(ragged), std::invalid_argument);
  CHECK_THROWS_AS(all_gather(ragged, 0), std::invalid_argument);
  CHECK_THROWS_AS(reduce_scatter(ragged, 0), std::invalid_argument);
}

TEST_CASE("sharded tensors reassemble and police their invariants") {
  const Tensor full = random_uniform(1, {4, 2, 6}, -1, 1);
  const auto sharded = RankShardedTensor::from_full(full, ShardAxis::Sequence, 0, 2);
  CHECK(sharded.shards.size() == 2);
  CHECK(bit_equal(sharded.to_full(0), full));
  CHECK_NOTHROW(sharded.check());

  auto replicated = RankShardedTensor::from_full(full, ShardAxis::Replicated, 0, 2);
  CHECK_NOTHROW(replicated.check());
  replicated.shards[1][0] += 1.0;
  CHECK_THROWS_AS(replicated.check(), std::invalid_argument);
}

TEST_CASE("reference forward ledger matches the itemized toy count") {
  const BlockConfig cfg = toy_config();
  const LayerParams params = LayerParams::random(cfg, 11);
  const Tensor x = random_uniform(3, {cfg.seq, cfg.batch, cfg.hidden}, -1, 1);
  const ReferenceForward fwd = reference_block_forward(x, params, cfg);

  CHECK(fwd.ledger.total_bytes() == 1248);
  CHECK(group_bytes(fwd.ledger,
                    {"qkv_input", "query", "key", "value", "softmax_out",
                     "softmax_dropout_mask", "softmax_dropout_out", "attn_proj_input",
                     "attn_dropout_mask"}) == 512);
  CHECK(group_bytes(fwd.ledger, {"mlp_fc1_input", "gelu_input", "mlp_fc2_input",
                                 "mlp_dropout_mask"}) == 608);
  CHECK(group_bytes(fwd.ledger, {"ln1_input", "ln2_input"}) == 128);

  const ModelShape shape{cfg.heads, cfg.hidden, 1, cfg.seq, 16};
  CHECK(fwd.ledger.total_bytes() == layer_component_breakdown(shape, cfg.batch).total);
}

TEST_CASE("zero input and zero weights flow to a zero output") {
  BlockConfig cfg = toy_config();
  const LayerParams params = LayerParams::zeros(cfg);  // gains 1, everything else 0
  const Tensor x({cfg.seq, cfg.batch, cfg.hidden});
  const ReferenceForward fwd = reference_block_forward(x, params, cfg);
  for (std::int64_t i = 0; i < fwd.y.numel(); ++i) CHECK(fwd.y[i] == 0.0);
}

TEST_CASE("dropout p=0 stores all-ones masks of unchanged ledger size") {
  BlockConfig cfg = toy_config();
  cfg.dropout_p = 0.0;
  const LayerParams params = LayerParams::random(cfg, 5);
  const Tensor x = random_uniform(9, {cfg.seq, cfg.batch, cfg.hidden}, -1, 1);
  const ReferenceForward dry = reference_block_forward(x, params, cfg);
  for (std::int64_t i = 0; i < dry.attn_dropout_mask.numel(); ++i) {
    CHECK(dry.attn_dropout_mask[i] == 1.0);
  }
  cfg.dropout_p = 0.25;
  const ReferenceForward wet = reference_block_forward(x, params, cfg);
  CHECK(dry.ledger.total_bytes() == wet.ledger.total_bytes());
}

TEST_CASE("seqpar forward at t=1 is bit-identical to the reference") {
  const BlockConfig cfg = toy_config();
  const LayerParams params = LayerParams::random(cfg, 21);
  const Tensor x = random_uniform(22, {cfg.seq, cfg.batch, cfg.hidden}, -1, 1);
  const ReferenceForward ref = reference_block_forward(x, params, cfg);
  const SeqparForward fwd = seqpar_block_forward({x}, params, 1, cfg);
  CHECK(bit_equal(fwd.y_shards[0], ref.y));
}

TEST_CASE("seqpar forward at t=2 matches the reference within 1e-10") {
  BlockConfig cfg = toy_config();
  const LayerParams params = LayerParams::random(cfg, 31);
  const Tensor x = random_uniform(32, {cfg.seq, cfg.batch, cfg.hidden}, -1, 1);
  const ReferenceForward ref = reference_block_forward(x, params, cfg);
  const auto sharded = RankShardedTensor::from_full(x, ShardAxis::Sequence, 0, 2);
  const SeqparForward fwd = seqpar_block_forward(sharded, params, cfg);
  CHECK(max_abs_diff(fwd.sharded_output().to_full(0), ref.y) <= 1e-10);

  // Each rank stores exactly a 1/t slice of the reference footprint.
  for (const ActivationLedger& ledger : fwd.ledgers) {
    CHECK(ledger.total_bytes() * 2 == ref.ledger.total_bytes());
  }
}

TEST_CASE("seqpar handles the causal flag like the reference") {
  BlockConfig cfg = toy_config();
  cfg.causal = true;
  const LayerParams params = LayerParams::random(cfg, 41);
  const Tensor x = random_uniform(42, {cfg.seq, cfg.batch, cfg.hidden}, -1, 1);
  const ReferenceForward ref = reference_block_forward(x, params, cfg);
  // Future positions carry no attention weight.
  for (std::int64_t i1 = 0; i1 < cfg.seq; ++i1) {
    for (std::int64_t i2 = i1 + 1; i2 < cfg.seq; ++i2) {
      CHECK(ref.interior.softmax_out[i1 * cfg.seq + i2] == 0.0);
    }
  }
  const SeqparForward fwd = seqpar_block_forward(split(x, 0, 2), params, 2, cfg);
  CHECK(max_abs_diff(concat(fwd.y_shards, 0), ref.y) <= 1e-10);
}

TEST_CASE("seqpar backward matches the reference and keeps sharded grads local") {
  BlockConfig cfg = toy_config();
  cfg.heads = 4;  // sharding across t=2 keeps two heads per rank
  const LayerParams params = LayerParams::random(cfg, 51);
  const Tensor x = random_uniform(52, {cfg.seq, cfg.batch, cfg.hidden}, -1, 1);
  const Tensor dy = random_uniform(53, {cfg.seq, cfg.batch, cfg.hidden}, -1, 1);

  const ReferenceForward ref = reference_block_forward(x, params, cfg);
  const BlockGrads ref_grads = reference_block_backward(dy, ref, params);

  const SeqparForward fwd = seqpar_block_forward(split(x, 0, 2), params, 2, cfg);
  const SeqparBackward back = seqpar_block_backward(split(dy, 0, 2), fwd, params);

  CHECK(max_abs_diff(concat(back.dx_shards, 0), ref_grads.dx) <= 1e-10);
  LayerParams got = back.param_grads;
  LayerParams want = ref_grads.params;
  auto got_tensors = got.named_tensors();
  auto want_tensors = want.named_tensors();
  for (std::size_t i = 0; i < got_tensors.size(); ++i) {
    CAPTURE(got_tensors[i].first);
    CHECK(max_abs_diff(*got_tensors[i].second, *want_tensors[i].second) <= 1e-10);
  }

  // Column-parallel weight gradients are rank-local: each shard equals the
  // corresponding column slice of the reference gradient with no cross-rank
  // reduction.
  REQUIRE(back.w1_grad_shards.size() == 2);
  for (std::int64_t r = 0; r < 2; ++r) {
    CHECK(max_abs_diff(back.w1_grad_shards[static_cast<std::size_t>(r)],
                       slice_part(ref_grads.params.w1, 1, 2, r)) <= 1e-10);
  }
}

TEST_CASE("an identity-like block passes gradients through exactly") {
  BlockConfig cfg = toy_config();
  const LayerParams params = LayerParams::zeros(cfg);
  const Tensor x({cfg.seq, cfg.batch, cfg.hidden});
  const Tensor dy = random_uniform(61, {cfg.seq, cfg.batch, cfg.hidden}, -1, 1);
  const ReferenceForward fwd = reference_block_forward(x, params, cfg);
  const BlockGrads grads = reference_block_backward(dy, fwd, params);
  // With zero weights both residual branches vanish, so dx == dy and the
  // output-side bias gradients are plain column sums.
  CHECK(bit_equal(grads.dx, dy));
  CHECK(bit_equal(grads.params.b2, column_sum(dy)));
  CHECK(bit_equal(grads.params.bo, column_sum(dy)));
}

TEST_CASE("recomputing the attention interior is bit-exact and frees 5as^2b bytes") {
  BlockConfig cfg = toy_config();
  cfg.dropout_p = 0.1;
  const LayerParams params = LayerParams::random(cfg, 71);
  const Tensor x = random_uniform(72, {cfg.seq, cfg.batch, cfg.hidden}, -1, 1);
  const ReferenceForward fwd = reference_block_forward(x, params, cfg);

  const AttentionInterior redone = attention_interior(fwd.q, fwd.k, cfg, 0, cfg.heads);
  CHECK(bit_equal(redone.softmax_out, fwd.interior.softmax_out));
  CHECK(bit_equal(redone.dropout_mask, fwd.interior.dropout_mask));
  CHECK(bit_equal(redone.dropout_out, fwd.interior.dropout_out));

  const std::int64_t discarded =
      2 * fwd.interior.softmax_out.numel() + 2 * fwd.interior.dropout_out.numel() +
      fwd.interior.dropout_mask.numel();
  CHECK(discarded == 5 * cfg.heads * cfg.seq * cfg.seq * cfg.batch);
  CHECK(discarded == 160);

  // A mismatched seed is detectable: the recomputed mask differs.
  BlockConfig other = cfg;
  other.seed = cfg.seed + 1;
  const AttentionInterior wrong = attention_interior(fwd.q, fwd.k, other, 0, cfg.heads);
  CHECK(!bit_equal(wrong.dropout_mask, fwd.interior.dropout_mask));
}

TEST_CASE("shard mismatches and missing state raise errors") {
  const BlockConfig cfg = toy_config();
  const LayerParams params = LayerParams::random(cfg, 81);
  const Tensor x = random_uniform(82, {cfg.seq, cfg.batch, cfg.hidden}, -1, 1);
  CHECK_THROWS_AS(seqpar_block_forward(split(x, 0, 2), params, 4, cfg), std::invalid_argument);

  const SeqparForward fwd = seqpar_block_forward(split(x, 0, 2), params, 2, cfg);
  std::vector<Tensor> bad_dy;
  bad_dy.push_back(Tensor({1, 1, 8}));
  bad_dy.push_back(Tensor({1, 1, 8}));
  CHECK_THROWS_AS(seqpar_block_backward(bad_dy, fwd, params), std::invalid_argument);

  SeqparForward empty;
  empty.t = 2;
  empty.cfg = cfg;
  CHECK_THROWS_AS(seqpar_block_backward(split(x, 0, 2), empty, params),
                  std::invalid_argument);
}

TEST_CASE("non-finite inputs are caught") {
  const BlockConfig cfg = toy_config();
  const LayerParams params = LayerParams::random(cfg, 91);
  Tensor x({cfg.seq, cfg.batch, cfg.hidden});
  x[0] = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(reference_block_forward(x, params, cfg), std::domain_error);
}

TEST_CASE("the full verification run is green end to end") {
  const VerifyReport report = run_verification(42);
  REQUIRE(report.suites.size() == 7);
  for (const SuiteResult& suite : report.suites) {
    CAPTURE(suite.name);
    CHECK(suite.failures == 0);
    CHECK(suite.cases > 0);
  }
  CHECK(report.all_passed());
}
