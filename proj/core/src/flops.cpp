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

#include "actplan/flops.hpp"

#include <nlohmann/json.hpp>

namespace actplan {

namespace {

void check_batch(std::int64_t b_total) {
  if (b_total < 1) throw std::invalid_argument("b_total must be >= 1");
}

// 24*B*s*h^2 + 4*B*s^2*h per layer: QKV transforms 6Bsh^2, attention matrix
// 2Bs^2h, attention over values 2Bs^2h, projection 2Bsh^2, MLP 16Bsh^2.
BigInt transformer_forward_flops(const ModelShape& shape, std::int64_t b_total) {
  const BigInt B = b_total;
  const BigInt s = shape.seq_len;
  const BigInt h = shape.hidden;
  return BigInt(shape.layers) * (24 * B * s * h * h + 4 * B * s * s * h);
}

BigInt selective_extra_flops(const ModelShape& shape, std::int64_t b_total,
                             SelectiveFlopsModel model) {
  const BigInt B = b_total;
  const BigInt s = shape.seq_len;
  const BigInt h = shape.hidden;
  const BigInt per_layer = model == SelectiveFlopsModel::Equation
                               ? 12 * B * s * s * h
                               : 4 * B * s * s * h;
  return BigInt(shape.layers) * per_layer;
}

}  // namespace

BigInt model_flops(const ModelShape& shape, std::int64_t b_total) {
  check_batch(b_total);
  const BigInt B = b_total;
  const BigInt L = shape.layers;
  const BigInt s = shape.seq_len;
  const BigInt h = shape.hidden;
  const BigInt v = shape.vocab;
  return 72 * B * L * s * h * h + 12 * B * L * s * s * h + 6 * B * s * h * v;
}

BigInt hardware_flops(const ModelShape& shape, std::int64_t b_total,
                      const RecomputeStrategy& strategy, SelectiveFlopsModel selective_model,
                      const Rational& recompute_fraction) {
  check_batch(b_total);
  if (recompute_fraction < Rational(0) || recompute_fraction > Rational(1)) {
    throw std::invalid_argument("recompute_fraction must lie in [0, 1]");
  }
  const BigInt model = model_flops(shape, b_total);
  BigInt extra;
  switch (strategy.kind) {
    case RecomputeKind::None:
      return model;
    case RecomputeKind::Selective:
      extra = selective_extra_flops(shape, b_total, selective_model);
      break;
    case RecomputeKind::Full:
      extra = transformer_forward_flops(shape, b_total);
      break;
  }
  if (strategy.microbatch_level) {
    return model + floor_rational(Rational(extra) * recompute_fraction);
  }
  return model + extra;
}

Rational hw_model_ratio_exact(const ModelShape& shape) {
  RecomputeStrategy selective;
  selective.kind = RecomputeKind::Selective;
  // The ratio is independent of batch size; evaluate at B = 1.
  return Rational(hardware_flops(shape, 1, selective)) / Rational(model_flops(shape, 1));
}

Rational hw_model_ratio_approx(const ModelShape& shape) {
  return Rational(1) + Rational(BigInt(shape.seq_len), BigInt(6) * shape.hidden);
}

std::pair<Rational, Rational> mfu_hfu(const ModelShape& shape, std::int64_t b_total,
                                      const RecomputeStrategy& strategy,
                                      const Rational& iteration_time, const Hardware& hw,
                                      SelectiveFlopsModel selective_model,
                                      const Rational& recompute_fraction) {
  if (iteration_time <= Rational(0)) {
    throw std::invalid_argument("iteration_time must be positive");
  }
  const Rational denom =
      iteration_time * Rational(BigInt(hw.devices) * hw.peak_flops_per_device);
  const Rational mfu = Rational(model_flops(shape, b_total)) / denom;
  const Rational hfu =
      Rational(hardware_flops(shape, b_total, strategy, selective_model, recompute_fraction)) /
      denom;
  return {mfu, hfu};
}

FlopsReport flops_report(const ModelShape& shape, std::int64_t b_total,
                         const RecomputeStrategy& strategy,
                         const std::optional<Rational>& iteration_time, const Hardware& hw,
                         SelectiveFlopsModel selective_model,
                         const Rational& recompute_fraction) {
  FlopsReport report;
  report.model_flops_per_iter = model_flops(shape, b_total);
  report.hardware_flops_per_iter =
      hardware_flops(shape, b_total, strategy, selective_model, recompute_fraction);
  report.hw_model_ratio =
      Rational(report.hardware_flops_per_iter) / Rational(report.model_flops_per_iter);
  if (iteration_time) {
    auto [mfu, hfu] = mfu_hfu(shape, b_total, strategy, *iteration_time, hw, selective_model,
                              recompute_fraction);
    report.mfu = mfu;
    report.hfu = hfu;
  }
  return report;
}

nlohmann::json to_json(const FlopsReport& r) {
  nlohmann::json doc;
  // FLOPs counts are exact integers that can exceed 2^53; serialize as
  // decimal strings so JSON consumers never see rounded values.
  doc["model_flops_per_iter"] = r.model_flops_per_iter.str();
  doc["hardware_flops_per_iter"] = r.hardware_flops_per_iter.str();
  doc["hw_model_ratio"] = {{"num", r.hw_model_ratio.numerator().str()},
                           {"den", r.hw_model_ratio.denominator().str()}};
  doc["hw_model_ratio_value"] = to_double(r.hw_model_ratio);
  if (r.mfu) doc["mfu_percent"] = percent_string(*r.mfu);
  if (r.hfu) doc["hfu_percent"] = percent_string(*r.hfu);
  return doc;
}

}  // namespace actplan
