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

#include <limits>

#include <doctest.h>

#include <nlohmann/json.hpp>

using namespace actplan;

namespace {

const RecomputeStrategy kBaseline;  // tensor parallel, everything stored

RecomputeStrategy strat(RecomputeKind kind, bool seq) {
  RecomputeStrategy s;
  s.kind = kind;
  s.sequence_parallel = seq;
  return s;
}

ModelShape shape_22b() { return {64, 6144, 48, 2048, 51200}; }
ModelShape shape_175b() { return {96, 12288, 96, 2048, 51200}; }
ModelShape shape_530b() { return {128, 20480, 105, 2048, 51200}; }

}  // namespace

TEST_CASE("22B per-layer bytes across the recompute regimes") {
  const ModelShape shape = shape_22b();
  ParallelLayout serial;
  serial.microbatch = 4;
  CHECK(per_layer_bytes(shape, serial, kBaseline) == 7'079'985'152);

  ParallelLayout t8 = serial;
  t8.tensor = 8;
  CHECK(per_layer_bytes(shape, t8, strat(RecomputeKind::None, true)) == 884'998'144);
  CHECK(per_layer_bytes(shape, t8, strat(RecomputeKind::Selective, true)) == 213'909'504);

  // Full recomputation keeps only the layer input: 2*s*b*h regardless of t.
  const std::int64_t sbh2 = 2 * 2048 * 4 * 6144;
  CHECK(per_layer_bytes(shape, serial, strat(RecomputeKind::Full, false)) == sbh2);
  CHECK(per_layer_bytes(shape, t8, strat(RecomputeKind::Full, true)) == sbh2);
}

TEST_CASE("toy layer breakdown itemizes attention, MLP, and layer norms") {
  const ModelShape toy{2, 8, 1, 4, 16};
  const LayerMemoryBreakdown b = layer_component_breakdown(toy, 1);
  CHECK(b.attention == 512);  // 11*sbh + 5*a*s^2*b = 11*32 + 5*32
  CHECK(b.mlp == 608);        // 19*sbh
  CHECK(b.layer_norms == 128);
  CHECK(b.total == 1248);     // sbh*(34 + 5as/h) = 32*39
}

TEST_CASE("attention-interior coefficient 5as/h is 80 for GPT-3 and 64 for MT-NLG") {
  CHECK(Rational(BigInt(5) * 96 * 2048, BigInt(12288)) == Rational(80));
  CHECK(Rational(BigInt(5) * 128 * 2048, BigInt(20480)) == Rational(64));
}

TEST_CASE("total first-stage bytes without pipelining is per-layer times L") {
  const ModelShape shape = shape_22b();
  ParallelLayout layout;
  layout.tensor = 8;
  layout.microbatch = 4;
  CHECK(total_first_stage_bytes(shape, layout, kBaseline) ==
        per_layer_bytes(shape, layout, kBaseline) * shape.layers);
}

TEST_CASE("interleave factor matches the 175B and 530B schedules") {
  ParallelLayout cfg175{8, 8, 3, 1, 1, 64};
  CHECK(interleave_factor(cfg175) == Rational(BigInt(31), BigInt(24)));
  // 96 layers * 31/24 = 124 layers worth of activations on the first stage.
  CHECK(Rational(BigInt(96)) * interleave_factor(cfg175) == Rational(124));

  ParallelLayout cfg530{8, 35, 3, 1, 1, 280};
  CHECK(interleave_factor(cfg530) == Rational(BigInt(139), BigInt(105)));

  ParallelLayout plain{8, 35, 1, 1, 1, 280};
  CHECK(interleave_factor(plain) == Rational(1));
}

TEST_CASE("530B sequence+selective first stage totals 24,777,850,880 bytes") {
  ParallelLayout layout{8, 35, 3, 1, 1, 280};
  CHECK(total_first_stage_bytes(shape_530b(), layout, strat(RecomputeKind::Selective, true)) ==
        24'777'850'880);
}

TEST_CASE("22B extras itemization and closed form") {
  const ModelShape shape = shape_22b();
  ParallelLayout layout;
  layout.tensor = 8;
  layout.microbatch = 4;
  const MemoryExtras extras = extras_bytes(shape, layout);
  CHECK(extras.embedding_dropout == 6'291'456);
  CHECK(extras.final_layernorm == 12'582'912);
  CHECK(extras.output_proj_input == 12'582'912);
  CHECK(extras.logits == 209'715'200);
  CHECK(extras.sum() == 241'172'480);

  // The extras stay a sub-percent sliver of the transformer total; the
  // exact ratio for this model is 0.56%.
  const std::int64_t total =
      total_first_stage_bytes(shape, layout, strat(RecomputeKind::None, true));
  CHECK(static_cast<double>(extras.sum()) / static_cast<double>(total + extras.sum()) < 0.01);
}

TEST_CASE("pipelined layouts zero the output-side extras") {
  ParallelLayout layout{8, 35, 3, 1, 1, 280};
  const MemoryExtras extras = extras_bytes(shape_530b(), layout);
  CHECK(extras.logits == 0);
  CHECK(extras.final_layernorm == 0);
  CHECK(extras.output_proj_input == 0);
  CHECK(extras.embedding_dropout > 0);
}

TEST_CASE("output-tensor deallocation savings") {
  const ModelShape shape = shape_530b();
  ParallelLayout layout{8, 35, 3, 1, 1, 280};
  CHECK(dealloc_savings_bytes(shape, layout, 0) == 2'936'012'800);  // 2.73 GiB
  CHECK(gib_string(dealloc_savings_bytes(shape, layout, 0)) == "2.73");
  CHECK(dealloc_savings_bytes(shape, layout, 35) == 0);
  CHECK(dealloc_savings_bytes(shape, layout, 40) == 0);

  ParallelLayout single;
  single.microbatch = 4;
  CHECK(dealloc_savings_bytes(shape_22b(), single, 0) == 2LL * 2048 * 4 * 6144);
}

TEST_CASE("parameter counts land on the models' nameplate sizes") {
  ParallelLayout serial;
  const BigInt n175 = parameter_counts(shape_175b(), serial).total;
  CHECK(n175 == BigInt("174615822336"));
  CHECK(to_double(n175) == doctest::Approx(1.75e11).epsilon(0.01));
  const BigInt n530 = parameter_counts(shape_530b(), serial).total;
  CHECK(to_double(n530) == doctest::Approx(5.3e11).epsilon(0.01));
}

TEST_CASE("doubling h roughly quadruples the parameter count") {
  ModelShape shape = shape_175b();
  const BigInt n1 = parameter_counts(shape, ParallelLayout{}).total;
  shape.hidden *= 2;
  shape.attention_heads *= 2;  // keep head dim legal
  const BigInt n2 = parameter_counts(shape, ParallelLayout{}).total;
  const double ratio = to_double(n2) / to_double(n1);
  CHECK(ratio > 3.9);
  CHECK(ratio < 4.1);
}

TEST_CASE("local parameter shard matches a per-matrix accounting oracle") {
  const ModelShape shape = shape_175b();
  ParallelLayout layout{8, 8, 3, 1, 1, 64};
  // Oracle: enumerate every matrix with its own shard rule.
  const std::int64_t h = shape.hidden;
  const std::int64_t per_layer_sharded = (3 * h * h + 3 * h)  // qkv weights + biases
                                         + (h * h)            // attention projection (rows)
                                         + (4 * h * h + 4 * h)  // h->4h weight + bias
                                         + (4 * h * h);          // 4h->h weight (rows)
  const std::int64_t per_layer_replicated = h + h + 4 * h;  // proj bias, second bias, 2 LN pairs
  const std::int64_t layers_local = shape.layers / layout.pipeline;
  const std::int64_t expected =
      layers_local * (per_layer_sharded / layout.tensor + per_layer_replicated) +
      shape.vocab * h / layout.tensor + shape.seq_len * h;
  CHECK(parameter_counts(shape, layout).local_first_stage == BigInt(expected));

  // t=8, p=1: local is N/8 plus the unsharded slack.
  ParallelLayout t8;
  t8.tensor = 8;
  const ParameterCounts counts = parameter_counts(shape, t8);
  CHECK(counts.local_first_stage > counts.total / 8);
  CHECK(counts.local_first_stage < counts.total / 8 + BigInt(6 * shape.layers * h) +
                                       BigInt(shape.seq_len * h));
}

TEST_CASE("params and optimizer bytes use the mixed-precision convention") {
  ParallelLayout layout{8, 35, 3, 1, 1, 280};
  const auto po = params_and_optimizer_bytes(shape_530b(), layout);
  const BigInt local = parameter_counts(shape_530b(), layout).local_first_stage;
  CHECK(BigInt(po.params) == 2 * local);
  CHECK(BigInt(po.optimizer) == 14 * local);
  const auto fp32 = params_and_optimizer_bytes(shape_530b(), layout, 4, 8);
  CHECK(BigInt(fp32.params) == 4 * local);
  CHECK(BigInt(fp32.optimizer) == 8 * local);
}

TEST_CASE("percent of baseline for the 530B shape") {
  ParallelLayout layout{8, 35, 3, 1, 1, 280};
  const ModelShape shape = shape_530b();
  CHECK(percent_of_baseline(shape, layout, strat(RecomputeKind::Selective, true)) ==
        Rational(BigInt(17), BigInt(84)));  // 20.24%
  CHECK(percent_of_baseline(shape, layout, strat(RecomputeKind::Full, false)) ==
        Rational(BigInt(2), BigInt(21)));   // 9.52%
  CHECK(percent_of_baseline(shape, layout, kBaseline) == Rational(1));
}

TEST_CASE("selective recomputation saves 70%/65% for GPT-3/MT-NLG shapes") {
  ParallelLayout t8;
  t8.tensor = 8;
  auto savings = [&t8](const ModelShape& shape) {
    const Rational kept =
        per_layer_bytes_exact(shape, t8, strat(RecomputeKind::Selective, true)) /
        per_layer_bytes_exact(shape, t8, strat(RecomputeKind::None, true));
    return 1.0 - to_double(kept);
  };
  CHECK(savings(shape_175b()) == doctest::Approx(0.7018).epsilon(0.001));
  CHECK(savings(shape_530b()) == doctest::Approx(0.6531).epsilon(0.001));
}

TEST_CASE("selective keeps the 34/114 stored fraction on the GPT-3 shape") {
  ParallelLayout t8;
  t8.tensor = 8;
  const Rational kept =
      per_layer_bytes_exact(shape_175b(), t8, strat(RecomputeKind::Selective, true)) /
      per_layer_bytes_exact(shape_175b(), t8, strat(RecomputeKind::None, true));
  CHECK(kept == Rational(BigInt(34), BigInt(114)));
}

TEST_CASE("sequence parallelism divides the no-parallelism footprint by t exactly") {
  for (std::int64_t a : {2, 4, 8}) {
    for (std::int64_t hd : {2, 5}) {
      for (std::int64_t t : {2, 4}) {
        if (a % t != 0) continue;
        ModelShape shape{a, a * hd, 4, 8 * t, 64};
        ParallelLayout serial;
        serial.microbatch = 3;
        ParallelLayout sharded = serial;
        sharded.tensor = t;
        CHECK(per_layer_bytes_exact(shape, sharded, strat(RecomputeKind::None, true)) ==
              per_layer_bytes_exact(shape, serial, kBaseline) / Rational(BigInt(t)));
      }
    }
  }
}

TEST_CASE("breakdown components sum to the per-layer formula on random shapes") {
  std::uint64_t state = 12345;
  auto next = [&state](std::int64_t lo, std::int64_t hi) {
    state = state * 6364136223846793005ULL + 1442695040888963407ULL;
    return lo + static_cast<std::int64_t>((state >> 33) % static_cast<std::uint64_t>(hi - lo + 1));
  };
  for (int i = 0; i < 1000; ++i) {
    const std::int64_t a = next(1, 12);
    const ModelShape shape{a, a * next(1, 16), 1, next(1, 64), 1000};
    const std::int64_t b = next(1, 8);
    ParallelLayout serial;
    serial.microbatch = b;
    CHECK(layer_component_breakdown(shape, b).total == per_layer_bytes(shape, serial, kBaseline));
  }
}

TEST_CASE("regime ordering holds for tensor sizes up to 16") {
  for (std::int64_t t : {2, 4, 8, 16}) {
    for (std::int64_t a : {16, 32}) {
      for (std::int64_t hd : {64, 128}) {
        ModelShape shape{a, a * hd, 4, 16 * t, 1000};
        ParallelLayout serial;
        ParallelLayout sharded;
        sharded.tensor = t;
        const auto full = per_layer_bytes_exact(shape, sharded, strat(RecomputeKind::Full, false));
        const auto seq_sel =
            per_layer_bytes_exact(shape, sharded, strat(RecomputeKind::Selective, true));
        const auto sel =
            per_layer_bytes_exact(shape, sharded, strat(RecomputeKind::Selective, false));
        const auto seq = per_layer_bytes_exact(shape, sharded, strat(RecomputeKind::None, true));
        const auto baseline = per_layer_bytes_exact(shape, sharded, kBaseline);
        const auto serial_all = per_layer_bytes_exact(shape, serial, kBaseline);
        CAPTURE(t);
        CHECK(full <= seq_sel);
        CHECK(seq_sel <= sel);
        CHECK(seq_sel <= seq);
        CHECK(seq <= baseline);
        CHECK(baseline <= serial_all);
      }
    }
  }
}

TEST_CASE("per-layer bytes never grow with t") {
  const ModelShape shape{16, 1024, 4, 64, 1000};
  for (const RecomputeStrategy& s :
       {kBaseline, strat(RecomputeKind::None, true), strat(RecomputeKind::Selective, false),
        strat(RecomputeKind::Selective, true), strat(RecomputeKind::Full, false)}) {
    std::int64_t prev = std::numeric_limits<std::int64_t>::max();
    for (std::int64_t t : {1, 2, 4, 8, 16}) {
      ParallelLayout layout;
      layout.tensor = t;
      const std::int64_t bytes = per_layer_bytes(shape, layout, s);
      CHECK(bytes <= prev);
      prev = bytes;
    }
  }
}

TEST_CASE("byte convention overrides rescale the coefficient table") {
  const ModelShape toy{2, 8, 1, 4, 16};
  ByteConvention fp32{4, 1, 4};
  ParallelLayout serial;
  // 4-byte activations: (16*4 + 2)*sbh + (2*4 + 1)*a*s^2*b.
  CHECK(per_layer_bytes(toy, serial, kBaseline, fp32) == 66 * 32 + 9 * 32);
  const LayerMemoryBreakdown b = layer_component_breakdown(toy, 1, fp32);
  CHECK(b.total == per_layer_bytes(toy, serial, kBaseline, fp32));
}

TEST_CASE("memory report totals are internally consistent") {
  ParallelLayout layout{8, 35, 3, 1, 1, 280};
  const RecomputeStrategy s = strat(RecomputeKind::Selective, true);
  const MemoryReport report = memory_report(shape_530b(), layout, s);
  CHECK(report.per_layer == per_layer_bytes(shape_530b(), layout, s));
  CHECK(report.transformer_total_first_stage == report.per_layer * shape_530b().layers);
  const Rational grand =
      Rational(BigInt(report.transformer_total_first_stage)) * report.interleave_factor +
      Rational(BigInt(report.extras.sum() + report.params + report.optimizer_state));
  CHECK(BigInt(report.grand_total) == floor_rational(grand));

  const nlohmann::json doc = to_json(report);
  CHECK(doc["per_layer"] == report.per_layer);
  CHECK(doc["interleave_factor"]["num"] == 139);
  CHECK(doc["interleave_factor"]["den"] == 105);
  CHECK(doc["grand_total"] == report.grand_total);
}

TEST_CASE("invalid layouts are rejected before any arithmetic") {
  ModelShape bad{4, 100, 8, 2048, 1000};
  ParallelLayout t8;
  t8.tensor = 8;
  CHECK_THROWS_AS(per_layer_bytes(bad, t8, kBaseline), std::invalid_argument);
  CHECK_THROWS_AS(dealloc_savings_bytes(bad, t8, -1), std::invalid_argument);
  CHECK_THROWS_AS(per_layer_bytes(shape_22b(), ParallelLayout{}, kBaseline,
                                  ByteConvention{0, 1, 4}),
                  std::invalid_argument);
}
