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

#include "actplan/seqpar/block.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include <Eigen/Dense>

namespace actplan::seqpar {

namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatrixMap = Eigen::Map<RowMatrix>;
using ConstMatrixMap = Eigen::Map<const RowMatrix>;
using StridedMap = Eigen::Map<RowMatrix, 0, Eigen::OuterStride<>>;
using ConstStridedMap = Eigen::Map<const RowMatrix, 0, Eigen::OuterStride<>>;

// Dropout site ids within a layer.
enum MaskOp : std::uint32_t { kSoftmaxDrop = 0, kAttnOutDrop = 1, kMlpDrop = 2 };

MaskKey mask_key(const BlockConfig& cfg, MaskOp op) {
  return MaskKey{cfg.seed, cfg.layer_index, op, cfg.microbatch};
}

// Generates the rank's slice of a global dropout mask directly from global
// coordinates, so shards agree with the full mask bit-for-bit.
Tensor mask_slice(const MaskKey& key, const std::vector<std::int64_t>& full_shape, double p_drop,
                  std::size_t axis, std::int64_t parts, std::int64_t index) {
  std::int64_t outer = 1, inner = 1;
  for (std::size_t i = 0; i < full_shape.size(); ++i) {
    if (i < axis) outer *= full_shape[i];
    else if (i > axis) inner *= full_shape[i];
  }
  const std::int64_t full_axis = full_shape[axis];
  if (full_axis % parts != 0) throw std::invalid_argument("mask axis not divisible");
  const std::int64_t piece = full_axis / parts;

  std::vector<std::int64_t> shape = full_shape;
  shape[axis] = piece;
  Tensor mask(shape);
  const std::uint64_t folded = key.fold();
  std::int64_t w = 0;
  for (std::int64_t o = 0; o < outer; ++o) {
    for (std::int64_t ai = 0; ai < piece; ++ai) {
      const std::int64_t global_row = o * full_axis + index * piece + ai;
      for (std::int64_t in = 0; in < inner; ++in, ++w) {
        const auto g = static_cast<std::uint64_t>(global_row * inner + in);
        mask[w] = uniform01(folded, g) >= p_drop ? 1.0 : 0.0;
      }
    }
  }
  return mask;
}

Tensor apply_dropout(const Tensor& x, const Tensor& mask, double p_drop) {
  const double inv_keep = 1.0 / (1.0 - p_drop);
  Tensor out(x.shape());
  for (std::int64_t i = 0; i < x.numel(); ++i) out[i] = x[i] * mask[i] * inv_keep;
  return out;
}

Tensor dropout_backward(const Tensor& dy, const Tensor& mask, double p_drop) {
  return apply_dropout(dy, mask, p_drop);
}

// View of one head's columns inside a {s, b, local_h} tensor, at fixed batch
// index: an (s, head_dim) matrix with row stride b*local_h.
ConstStridedMap head_view(const Tensor& x, std::int64_t batch_index, std::int64_t head,
                          std::int64_t head_dim, std::int64_t batch, std::int64_t local_h) {
  const double* ptr = x.data() + batch_index * local_h + head * head_dim;
  return ConstStridedMap(ptr, x.dim(0), head_dim, Eigen::OuterStride<>(batch * local_h));
}

StridedMap head_view_mut(Tensor& x, std::int64_t batch_index, std::int64_t head,
                         std::int64_t head_dim, std::int64_t batch, std::int64_t local_h) {
  double* ptr = x.data() + batch_index * local_h + head * head_dim;
  return StridedMap(ptr, x.dim(0), head_dim, Eigen::OuterStride<>(batch * local_h));
}

// Scalar std::exp so masked -inf scores come out as exact zeros; Eigen's
// vectorized exp clamps its argument and would leave denormals behind.
void rowwise_softmax_inplace(MatrixMap m) {
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    const double row_max = m.row(i).maxCoeff();
    double sum = 0.0;
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      m(i, j) = std::exp(m(i, j) - row_max);
      sum += m(i, j);
    }
    m.row(i) /= sum;
  }
}

void add_row_vector(Tensor& x, const Tensor& bias) {
  const std::int64_t n = bias.numel();
  MatrixMap(x.data(), x.numel() / n, n).rowwise() +=
      Eigen::Map<const Eigen::RowVectorXd>(bias.data(), n);
}

struct ShardedParams {
  Tensor wq, wk, wv, bq, bk, bv;
  Tensor wo;  // rows
  Tensor w1, b1;
  Tensor w2;  // rows
};

ShardedParams shard_params(const LayerParams& p, std::int64_t t, std::int64_t rank) {
  ShardedParams out;
  out.wq = slice_part(p.wq, 1, t, rank);
  out.wk = slice_part(p.wk, 1, t, rank);
  out.wv = slice_part(p.wv, 1, t, rank);
  out.bq = slice_part(p.bq, 0, t, rank);
  out.bk = slice_part(p.bk, 0, t, rank);
  out.bv = slice_part(p.bv, 0, t, rank);
  out.wo = slice_part(p.wo, 0, t, rank);
  out.w1 = slice_part(p.w1, 1, t, rank);
  out.b1 = slice_part(p.b1, 0, t, rank);
  out.w2 = slice_part(p.w2, 0, t, rank);
  return out;
}

// O(:, j, head) = dropout_out(head, j) * V(:, j, head)
Tensor attention_over_values(const AttentionInterior& interior, const Tensor& v,
                             const BlockConfig& cfg, std::int64_t local_heads) {
  const std::int64_t s = cfg.seq;
  const std::int64_t b = cfg.batch;
  const std::int64_t hd = cfg.head_dim();
  const std::int64_t local_h = local_heads * hd;
  Tensor out({s, b, local_h});
  for (std::int64_t kk = 0; kk < local_heads; ++kk) {
    for (std::int64_t j = 0; j < b; ++j) {
      ConstMatrixMap sd(interior.dropout_out.data() + ((kk * b + j) * s) * s, s, s);
      head_view_mut(out, j, kk, hd, b, local_h).noalias() =
          sd * head_view(v, j, kk, hd, b, local_h);
    }
  }
  return out;
}

struct InteriorGrads {
  Tensor dq, dk, dv;  // {s, b, local_h}
};

InteriorGrads attention_interior_backward(const Tensor& d_out, const AttentionInterior& interior,
                                          const Tensor& q, const Tensor& k, const Tensor& v,
                                          const BlockConfig& cfg, std::int64_t local_heads) {
  const std::int64_t s = cfg.seq;
  const std::int64_t b = cfg.batch;
  const std::int64_t hd = cfg.head_dim();
  const std::int64_t local_h = local_heads * hd;
  const double scale = 1.0 / std::sqrt(static_cast<double>(hd));
  const double inv_keep = 1.0 / (1.0 - cfg.dropout_p);

  InteriorGrads grads{Tensor({s, b, local_h}), Tensor({s, b, local_h}), Tensor({s, b, local_h})};
  for (std::int64_t kk = 0; kk < local_heads; ++kk) {
    for (std::int64_t j = 0; j < b; ++j) {
      const std::int64_t base = ((kk * b + j) * s) * s;
      ConstMatrixMap sm(interior.softmax_out.data() + base, s, s);
      ConstMatrixMap mask(interior.dropout_mask.data() + base, s, s);
      ConstMatrixMap sd(interior.dropout_out.data() + base, s, s);

      const auto d_out_head = head_view(d_out, j, kk, hd, b, local_h);
      const auto v_head = head_view(v, j, kk, hd, b, local_h);
      RowMatrix d_sd = d_out_head * v_head.transpose();
      head_view_mut(grads.dv, j, kk, hd, b, local_h).noalias() = sd.transpose() * d_out_head;

      RowMatrix d_sm = (d_sd.array() * mask.array() * inv_keep).matrix();
      const Eigen::VectorXd row_dot = (d_sm.array() * sm.array()).rowwise().sum();
      RowMatrix d_scores = (sm.array() * (d_sm.colwise() - row_dot).array()).matrix();

      head_view_mut(grads.dq, j, kk, hd, b, local_h).noalias() =
          d_scores * head_view(k, j, kk, hd, b, local_h) * scale;
      head_view_mut(grads.dk, j, kk, hd, b, local_h).noalias() =
          d_scores.transpose() * head_view(q, j, kk, hd, b, local_h) * scale;
    }
  }
  return grads;
}

void ledger_add_layer(ActivationLedger& ledger, const BlockConfig& cfg, std::int64_t seq_local,
                      std::int64_t local_heads) {
  const std::int64_t b = cfg.batch;
  const std::int64_t h = cfg.hidden;
  const std::int64_t local_h = local_heads * cfg.head_dim();
  const std::int64_t s = cfg.seq;
  const std::int64_t act = cfg.bytes.activation_elem;
  const std::int64_t mask = cfg.bytes.mask_elem;

  ledger.add("ln1_input", seq_local * b * h, act);
  ledger.add("qkv_input", seq_local * b * h, act);  // only the rank's Y shard is kept
  ledger.add("query", s * b * local_h, act);
  ledger.add("key", s * b * local_h, act);
  ledger.add("value", s * b * local_h, act);
  ledger.add("softmax_out", local_heads * b * s * s, act);
  ledger.add("softmax_dropout_mask", local_heads * b * s * s, mask);
  ledger.add("softmax_dropout_out", local_heads * b * s * s, act);
  ledger.add("attn_proj_input", s * b * local_h, act);
  ledger.add("attn_dropout_mask", seq_local * b * h, mask);
  ledger.add("ln2_input", seq_local * b * h, act);
  ledger.add("mlp_fc1_input", seq_local * b * h, act);
  ledger.add("gelu_input", s * b * 4 * local_h, act);
  ledger.add("mlp_fc2_input", s * b * 4 * local_h, act);
  ledger.add("mlp_dropout_mask", seq_local * b * h, mask);
}

}  // namespace

void ActivationLedger::add(std::string name, std::int64_t elements,
                           std::int64_t bytes_per_elem) {
  entries.push_back({std::move(name), elements, elements * bytes_per_elem});
}

std::int64_t ActivationLedger::total_bytes() const {
  std::int64_t total = 0;
  for (const LedgerEntry& e : entries) total += e.bytes;
  return total;
}

LayerParams LayerParams::random(const BlockConfig& cfg, std::uint64_t seed) {
  const std::int64_t h = cfg.hidden;
  const double w_scale = 1.0 / std::sqrt(static_cast<double>(h));
  auto weights = [&](std::uint64_t salt, std::vector<std::int64_t> shape) {
    return random_uniform(hash_counter(seed, salt), std::move(shape), -w_scale, w_scale);
  };
  auto small = [&](std::uint64_t salt, std::vector<std::int64_t> shape) {
    return random_uniform(hash_counter(seed, salt), std::move(shape), -0.1, 0.1);
  };
  LayerParams p;
  p.wq = weights(1, {h, h});
  p.wk = weights(2, {h, h});
  p.wv = weights(3, {h, h});
  p.bq = small(4, {h});
  p.bk = small(5, {h});
  p.bv = small(6, {h});
  p.wo = weights(7, {h, h});
  p.bo = small(8, {h});
  p.w1 = weights(9, {h, 4 * h});
  p.b1 = small(10, {4 * h});
  p.w2 = weights(11, {4 * h, h});
  p.b2 = small(12, {h});
  p.ln1_gain = small(13, {h});
  p.ln1_bias = small(14, {h});
  p.ln2_gain = small(15, {h});
  p.ln2_bias = small(16, {h});
  for (std::int64_t i = 0; i < h; ++i) {
    p.ln1_gain[i] += 1.0;
    p.ln2_gain[i] += 1.0;
  }
  return p;
}

LayerParams LayerParams::zeros(const BlockConfig& cfg) {
  const std::int64_t h = cfg.hidden;
  LayerParams p;
  p.wq = Tensor({h, h});
  p.wk = Tensor({h, h});
  p.wv = Tensor({h, h});
  p.bq = Tensor({h});
  p.bk = Tensor({h});
  p.bv = Tensor({h});
  p.wo = Tensor({h, h});
  p.bo = Tensor({h});
  p.w1 = Tensor({h, 4 * h});
  p.b1 = Tensor({4 * h});
  p.w2 = Tensor({4 * h, h});
  p.b2 = Tensor({h});
  p.ln1_gain = Tensor({h});
  p.ln1_bias = Tensor({h});
  p.ln2_gain = Tensor({h});
  p.ln2_bias = Tensor({h});
  for (std::int64_t i = 0; i < h; ++i) {
    p.ln1_gain[i] = 1.0;
    p.ln2_gain[i] = 1.0;
  }
  return p;
}

std::vector<std::pair<std::string, Tensor*>> LayerParams::named_tensors() {
  return {{"wq", &wq}, {"wk", &wk}, {"wv", &wv}, {"bq", &bq}, {"bk", &bk}, {"bv", &bv},
          {"wo", &wo}, {"bo", &bo}, {"w1", &w1}, {"b1", &b1}, {"w2", &w2}, {"b2", &b2},
          {"ln1_gain", &ln1_gain}, {"ln1_bias", &ln1_bias},
          {"ln2_gain", &ln2_gain}, {"ln2_bias", &ln2_bias}};
}

Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias, double eps,
                  LayerNormStats* stats) {
  const std::int64_t h = gain.numel();
  const std::int64_t rows = x.numel() / h;
  Tensor out(x.shape());
  Tensor mean({rows});
  Tensor inv_std({rows});
  for (std::int64_t r = 0; r < rows; ++r) {
    const double* row = x.data() + r * h;
    double mu = 0.0;
    for (std::int64_t c = 0; c < h; ++c) mu += row[c];
    mu /= static_cast<double>(h);
    double var = 0.0;
    for (std::int64_t c = 0; c < h; ++c) var += (row[c] - mu) * (row[c] - mu);
    var /= static_cast<double>(h);
    const double is = 1.0 / std::sqrt(var + eps);
    mean[r] = mu;
    inv_std[r] = is;
    double* out_row = out.data() + r * h;
    for (std::int64_t c = 0; c < h; ++c) {
      out_row[c] = (row[c] - mu) * is * gain[c] + bias[c];
    }
  }
  if (stats != nullptr) {
    stats->mean = std::move(mean);
    stats->inv_std = std::move(inv_std);
  }
  return out;
}

Tensor layer_norm_backward(const Tensor& dy, const Tensor& x, const LayerNormStats& stats,
                           const Tensor& gain, Tensor* dgain, Tensor* dbias) {
  const std::int64_t h = gain.numel();
  const std::int64_t rows = x.numel() / h;
  Tensor dx(x.shape());
  for (std::int64_t r = 0; r < rows; ++r) {
    const double* x_row = x.data() + r * h;
    const double* dy_row = dy.data() + r * h;
    double* dx_row = dx.data() + r * h;
    const double mu = stats.mean[r];
    const double is = stats.inv_std[r];

    double sum_dxhat = 0.0;
    double sum_dxhat_xhat = 0.0;
    for (std::int64_t c = 0; c < h; ++c) {
      const double xhat = (x_row[c] - mu) * is;
      const double dxhat = dy_row[c] * gain[c];
      sum_dxhat += dxhat;
      sum_dxhat_xhat += dxhat * xhat;
      if (dgain != nullptr) (*dgain)[c] += dy_row[c] * xhat;
      if (dbias != nullptr) (*dbias)[c] += dy_row[c];
    }
    const double inv_h = 1.0 / static_cast<double>(h);
    for (std::int64_t c = 0; c < h; ++c) {
      const double xhat = (x_row[c] - mu) * is;
      const double dxhat = dy_row[c] * gain[c];
      dx_row[c] = is * (dxhat - inv_h * sum_dxhat - xhat * inv_h * sum_dxhat_xhat);
    }
  }
  return dx;
}

Tensor gelu(const Tensor& x) {
  Tensor out(x.shape());
  for (std::int64_t i = 0; i < x.numel(); ++i) {
    out[i] = 0.5 * x[i] * (1.0 + std::erf(x[i] * std::numbers::sqrt2 / 2.0));
  }
  return out;
}

Tensor gelu_backward(const Tensor& dy, const Tensor& x) {
  Tensor out(x.shape());
  const double inv_sqrt_2pi = 1.0 / std::sqrt(2.0 * std::numbers::pi);
  for (std::int64_t i = 0; i < x.numel(); ++i) {
    const double cdf = 0.5 * (1.0 + std::erf(x[i] * std::numbers::sqrt2 / 2.0));
    const double pdf = inv_sqrt_2pi * std::exp(-0.5 * x[i] * x[i]);
    out[i] = dy[i] * (cdf + x[i] * pdf);
  }
  return out;
}

AttentionInterior attention_interior(const Tensor& q, const Tensor& k, const BlockConfig& cfg,
                                     std::int64_t head_offset, std::int64_t local_heads) {
  const std::int64_t s = cfg.seq;
  const std::int64_t b = cfg.batch;
  const std::int64_t hd = cfg.head_dim();
  const std::int64_t local_h = local_heads * hd;
  const double scale = 1.0 / std::sqrt(static_cast<double>(hd));

  AttentionInterior interior;
  interior.softmax_out = Tensor({local_heads, b, s, s});
  interior.dropout_out = Tensor({local_heads, b, s, s});
  interior.dropout_mask =
      mask_slice(mask_key(cfg, kSoftmaxDrop), {cfg.heads, b, s, s}, cfg.dropout_p, 0,
                 cfg.heads / local_heads, head_offset / local_heads);

  for (std::int64_t kk = 0; kk < local_heads; ++kk) {
    for (std::int64_t j = 0; j < b; ++j) {
      const std::int64_t base = ((kk * b + j) * s) * s;
      MatrixMap scores(interior.softmax_out.data() + base, s, s);
      scores.noalias() = head_view(q, j, kk, hd, b, local_h) *
                         head_view(k, j, kk, hd, b, local_h).transpose() * scale;
      if (cfg.causal) {
        for (std::int64_t i1 = 0; i1 < s; ++i1) {
          for (std::int64_t i2 = i1 + 1; i2 < s; ++i2) {
            scores(i1, i2) = -std::numeric_limits<double>::infinity();
          }
        }
      }
      rowwise_softmax_inplace(scores);
    }
  }
  const double inv_keep = 1.0 / (1.0 - cfg.dropout_p);
  for (std::int64_t i = 0; i < interior.softmax_out.numel(); ++i) {
    interior.dropout_out[i] = interior.softmax_out[i] * interior.dropout_mask[i] * inv_keep;
  }
  return interior;
}

ReferenceForward reference_block_forward(const Tensor& x, const LayerParams& params,
                                         const BlockConfig& cfg) {
  const std::int64_t s = cfg.seq;
  const std::int64_t b = cfg.batch;
  const std::int64_t h = cfg.hidden;
  if (x.shape() != std::vector<std::int64_t>{s, b, h}) {
    throw std::invalid_argument("reference_block_forward: input must be {s, b, h}");
  }
  if (h % cfg.heads != 0) throw std::invalid_argument("hidden not divisible by heads");

  ReferenceForward fwd;
  fwd.cfg = cfg;
  fwd.x = x;

  fwd.y1 = layer_norm(x, params.ln1_gain, params.ln1_bias, cfg.layer_norm_eps, &fwd.ln1_stats);
  fwd.q = matmul_add(fwd.y1, params.wq, params.bq);
  fwd.k = matmul_add(fwd.y1, params.wk, params.bk);
  fwd.v = matmul_add(fwd.y1, params.wv, params.bv);
  fwd.interior = attention_interior(fwd.q, fwd.k, cfg, 0, cfg.heads);
  fwd.attn_proj_input = attention_over_values(fwd.interior, fwd.v, cfg, cfg.heads);
  Tensor attn_out = matmul_add(fwd.attn_proj_input, params.wo, params.bo);
  fwd.attn_dropout_mask =
      mask_slice(mask_key(cfg, kAttnOutDrop), {s, b, h}, cfg.dropout_p, 0, 1, 0);
  const Tensor attn_drop = apply_dropout(attn_out, fwd.attn_dropout_mask, cfg.dropout_p);
  fwd.r1 = add(x, attn_drop);

  fwd.y2 = layer_norm(fwd.r1, params.ln2_gain, params.ln2_bias, cfg.layer_norm_eps,
                      &fwd.ln2_stats);
  fwd.gelu_input = matmul_add(fwd.y2, params.w1, params.b1);
  fwd.fc2_input = gelu(fwd.gelu_input);
  Tensor mlp_out = matmul_add(fwd.fc2_input, params.w2, params.b2);
  fwd.mlp_dropout_mask = mask_slice(mask_key(cfg, kMlpDrop), {s, b, h}, cfg.dropout_p, 0, 1, 0);
  const Tensor mlp_drop = apply_dropout(mlp_out, fwd.mlp_dropout_mask, cfg.dropout_p);
  fwd.y = add(fwd.r1, mlp_drop);

  if (!fwd.y.all_finite()) {
    throw std::domain_error("reference_block_forward produced non-finite values");
  }
  ledger_add_layer(fwd.ledger, cfg, s, cfg.heads);
  return fwd;
}

BlockGrads reference_block_backward(const Tensor& dy, const ReferenceForward& fwd,
                                    const LayerParams& params) {
  const BlockConfig& cfg = fwd.cfg;
  if (!dy.same_shape(fwd.y)) throw std::invalid_argument("dy shape mismatch");
  if (fwd.x.numel() == 0) throw std::invalid_argument("missing saved forward state");

  BlockGrads grads;
  grads.params = LayerParams::zeros(cfg);
  // Gradient accumulators start at zero, including the layer-norm gains
  // that zeros() initializes to one.
  for (auto& entry : grads.params.named_tensors()) {
    Tensor& tensor = *entry.second;
    for (std::int64_t i = 0; i < tensor.numel(); ++i) tensor[i] = 0.0;
  }

  // MLP branch.
  Tensor d_r1 = dy;
  const Tensor d_mlp_out = dropout_backward(dy, fwd.mlp_dropout_mask, cfg.dropout_p);
  grads.params.b2 = column_sum(d_mlp_out);
  const Tensor d_fc2_in = matmul_transposed_rhs(d_mlp_out, params.w2);
  grads.params.w2 = matmul_transposed_lhs(fwd.fc2_input, d_mlp_out);
  const Tensor d_gelu_in = gelu_backward(d_fc2_in, fwd.gelu_input);
  grads.params.b1 = column_sum(d_gelu_in);
  grads.params.w1 = matmul_transposed_lhs(fwd.y2, d_gelu_in);
  const Tensor d_y2 = matmul_transposed_rhs(d_gelu_in, params.w1);
  d_r1 = add(d_r1, layer_norm_backward(d_y2, fwd.r1, fwd.ln2_stats, params.ln2_gain,
                                       &grads.params.ln2_gain, &grads.params.ln2_bias));

  // Attention branch.
  Tensor dx = d_r1;
  const Tensor d_attn_out = dropout_backward(d_r1, fwd.attn_dropout_mask, cfg.dropout_p);
  grads.params.bo = column_sum(d_attn_out);
  const Tensor d_proj_in = matmul_transposed_rhs(d_attn_out, params.wo);
  grads.params.wo = matmul_transposed_lhs(fwd.attn_proj_input, d_attn_out);
  const InteriorGrads ig = attention_interior_backward(d_proj_in, fwd.interior, fwd.q, fwd.k,
                                                       fwd.v, cfg, cfg.heads);
  grads.params.bq = column_sum(ig.dq);
  grads.params.bk = column_sum(ig.dk);
  grads.params.bv = column_sum(ig.dv);
  grads.params.wq = matmul_transposed_lhs(fwd.y1, ig.dq);
  grads.params.wk = matmul_transposed_lhs(fwd.y1, ig.dk);
  grads.params.wv = matmul_transposed_lhs(fwd.y1, ig.dv);
  Tensor d_y1 = matmul_transposed_rhs(ig.dq, params.wq);
  d_y1 = add(d_y1, matmul_transposed_rhs(ig.dk, params.wk));
  d_y1 = add(d_y1, matmul_transposed_rhs(ig.dv, params.wv));
  dx = add(dx, layer_norm_backward(d_y1, fwd.x, fwd.ln1_stats, params.ln1_gain,
                                   &grads.params.ln1_gain, &grads.params.ln1_bias));
  grads.dx = std::move(dx);
  return grads;
}

SeqparForward seqpar_block_forward(const std::vector<Tensor>& x_shards,
                                   const LayerParams& params, std::int64_t t,
                                   const BlockConfig& cfg) {
  const std::int64_t s = cfg.seq;
  const std::int64_t b = cfg.batch;
  const std::int64_t h = cfg.hidden;
  if (t < 1) throw std::invalid_argument("t must be >= 1");
  if (s % t != 0 || h % t != 0) {
    throw std::invalid_argument("s and h must be divisible by t");
  }
  if (cfg.heads % t != 0) {
    throw std::invalid_argument("attention heads must be divisible by t");
  }
  if (static_cast<std::int64_t>(x_shards.size()) != t) {
    throw std::invalid_argument("expected one input shard per rank");
  }
  const std::int64_t s_local = s / t;
  const std::int64_t local_heads = cfg.heads / t;
  for (const Tensor& shard : x_shards) {
    if (shard.shape() != std::vector<std::int64_t>{s_local, b, h}) {
      throw std::invalid_argument("input shard must be {s/t, b, h}");
    }
  }

  SeqparForward fwd;
  fwd.t = t;
  fwd.cfg = cfg;
  fwd.x_shards = x_shards;
  fwd.ln1_stats.resize(static_cast<std::size_t>(t));
  fwd.ln2_stats.resize(static_cast<std::size_t>(t));
  fwd.ledgers.resize(static_cast<std::size_t>(t));

  // Layer norm on sequence shards, then g: all-gather to enter the
  // tensor-parallel region.
  for (std::int64_t r = 0; r < t; ++r) {
    fwd.y1_shards.push_back(layer_norm(x_shards[static_cast<std::size_t>(r)], params.ln1_gain,
                                       params.ln1_bias, cfg.layer_norm_eps,
                                       &fwd.ln1_stats[static_cast<std::size_t>(r)]));
  }
  const Tensor y1_full = all_gather(fwd.y1_shards, 0, &fwd.comm, CommTag::Schedule);

  std::vector<Tensor> proj_partials;
  for (std::int64_t r = 0; r < t; ++r) {
    const ShardedParams sp = shard_params(params, t, r);
    fwd.q.push_back(matmul_add(y1_full, sp.wq, sp.bq));
    fwd.k.push_back(matmul_add(y1_full, sp.wk, sp.bk));
    fwd.v.push_back(matmul_add(y1_full, sp.wv, sp.bv));
    fwd.interior.push_back(
        attention_interior(fwd.q.back(), fwd.k.back(), cfg, r * local_heads, local_heads));
    fwd.attn_proj_input.push_back(
        attention_over_values(fwd.interior.back(), fwd.v.back(), cfg, local_heads));
    proj_partials.push_back(matmul(fwd.attn_proj_input.back(), sp.wo));
  }

  // g-bar: reduce-scatter back onto sequence shards.
  std::vector<Tensor> attn_shards = reduce_scatter(proj_partials, 0, &fwd.comm, CommTag::Schedule);
  for (std::int64_t r = 0; r < t; ++r) {
    auto& shard = attn_shards[static_cast<std::size_t>(r)];
    add_row_vector(shard, params.bo);
    fwd.attn_dropout_mask.push_back(
        mask_slice(mask_key(cfg, kAttnOutDrop), {s, b, h}, cfg.dropout_p, 0, t, r));
    const Tensor dropped = apply_dropout(shard, fwd.attn_dropout_mask.back(), cfg.dropout_p);
    fwd.r1_shards.push_back(add(x_shards[static_cast<std::size_t>(r)], dropped));
    fwd.y2_shards.push_back(layer_norm(fwd.r1_shards.back(), params.ln2_gain, params.ln2_bias,
                                       cfg.layer_norm_eps,
                                       &fwd.ln2_stats[static_cast<std::size_t>(r)]));
  }

  const Tensor y2_full = all_gather(fwd.y2_shards, 0, &fwd.comm, CommTag::Schedule);
  std::vector<Tensor> mlp_partials;
  for (std::int64_t r = 0; r < t; ++r) {
    const ShardedParams sp = shard_params(params, t, r);
    fwd.gelu_input.push_back(matmul_add(y2_full, sp.w1, sp.b1));
    fwd.fc2_input.push_back(gelu(fwd.gelu_input.back()));
    mlp_partials.push_back(matmul(fwd.fc2_input.back(), sp.w2));
  }
  std::vector<Tensor> mlp_shards = reduce_scatter(mlp_partials, 0, &fwd.comm, CommTag::Schedule);
  for (std::int64_t r = 0; r < t; ++r) {
    auto& shard = mlp_shards[static_cast<std::size_t>(r)];
    add_row_vector(shard, params.b2);
    fwd.mlp_dropout_mask.push_back(
        mask_slice(mask_key(cfg, kMlpDrop), {s, b, h}, cfg.dropout_p, 0, t, r));
    const Tensor dropped = apply_dropout(shard, fwd.mlp_dropout_mask.back(), cfg.dropout_p);
    fwd.y_shards.push_back(add(fwd.r1_shards[static_cast<std::size_t>(r)], dropped));
    if (!fwd.y_shards.back().all_finite()) {
      throw std::domain_error("seqpar_block_forward produced non-finite values");
    }
    ledger_add_layer(fwd.ledgers[static_cast<std::size_t>(r)], cfg, s_local, local_heads);
  }
  return fwd;
}

RankShardedTensor SeqparForward::sharded_output() const {
  RankShardedTensor out;
  out.shards = y_shards;
  out.axis = ShardAxis::Sequence;
  out.logical_shape = {cfg.seq, cfg.batch, cfg.hidden};
  return out;
}

SeqparForward seqpar_block_forward(const RankShardedTensor& x, const LayerParams& params,
                                   const BlockConfig& cfg) {
  if (x.axis != ShardAxis::Sequence) {
    throw std::invalid_argument("layer input must be sharded along the sequence axis");
  }
  x.check();
  return seqpar_block_forward(x.shards, params, static_cast<std::int64_t>(x.shards.size()),
                              cfg);
}

SeqparBackward seqpar_block_backward(const std::vector<Tensor>& dy_shards,
                                     const SeqparForward& fwd, const LayerParams& params) {
  const std::int64_t t = fwd.t;
  const BlockConfig& cfg = fwd.cfg;
  if (fwd.y_shards.empty()) throw std::invalid_argument("missing saved forward state");
  if (static_cast<std::int64_t>(dy_shards.size()) != t) {
    throw std::invalid_argument("expected one gradient shard per rank");
  }
  for (std::int64_t r = 0; r < t; ++r) {
    if (!dy_shards[static_cast<std::size_t>(r)].same_shape(
            fwd.y_shards[static_cast<std::size_t>(r)])) {
      throw std::invalid_argument("dy shard shape mismatch");
    }
  }
  const std::int64_t h = cfg.hidden;

  SeqparBackward back;
  std::vector<ShardedParams> sp;
  for (std::int64_t r = 0; r < t; ++r) sp.push_back(shard_params(params, t, r));

  // MLP branch.
  std::vector<Tensor> d_r1(dy_shards.begin(), dy_shards.end());
  std::vector<Tensor> d_mlp_out_shards;
  std::vector<Tensor> b2_partials;
  for (std::int64_t r = 0; r < t; ++r) {
    d_mlp_out_shards.push_back(dropout_backward(dy_shards[static_cast<std::size_t>(r)],
                                                fwd.mlp_dropout_mask[static_cast<std::size_t>(r)],
                                                cfg.dropout_p));
    b2_partials.push_back(column_sum(d_mlp_out_shards.back()));
  }
  // Backward of g-bar: all-gather the sequence-sharded gradient.
  const Tensor d_mlp_out = all_gather(d_mlp_out_shards, 0, &back.comm, CommTag::Schedule);
  // Backward of the stored-shard trick: re-gather the layer-norm output.
  const Tensor y2_full = all_gather(fwd.y2_shards, 0, &back.comm, CommTag::Regather);

  std::vector<Tensor> w1_grads, b1_grads, w2_grads, d_y2_partials;
  for (std::int64_t r = 0; r < t; ++r) {
    const auto ri = static_cast<std::size_t>(r);
    const Tensor d_fc2_in = matmul_transposed_rhs(d_mlp_out, sp[ri].w2);
    w2_grads.push_back(matmul_transposed_lhs(fwd.fc2_input[ri], d_mlp_out));
    const Tensor d_gelu_in = gelu_backward(d_fc2_in, fwd.gelu_input[ri]);
    b1_grads.push_back(column_sum(d_gelu_in));
    w1_grads.push_back(matmul_transposed_lhs(y2_full, d_gelu_in));
    d_y2_partials.push_back(matmul_transposed_rhs(d_gelu_in, sp[ri].w1));
  }
  // Backward of g: reduce-scatter the partial input gradients.
  const std::vector<Tensor> d_y2_shards =
      reduce_scatter(d_y2_partials, 0, &back.comm, CommTag::Schedule);

  std::vector<Tensor> ln2_gain_partials, ln2_bias_partials;
  for (std::int64_t r = 0; r < t; ++r) {
    const auto ri = static_cast<std::size_t>(r);
    Tensor dgain({h}), dbias({h});
    const Tensor d_r1_ln =
        layer_norm_backward(d_y2_shards[ri], fwd.r1_shards[ri], fwd.ln2_stats[ri],
                            params.ln2_gain, &dgain, &dbias);
    d_r1[ri] = add(d_r1[ri], d_r1_ln);
    ln2_gain_partials.push_back(std::move(dgain));
    ln2_bias_partials.push_back(std::move(dbias));
  }

  // Attention branch.
  std::vector<Tensor> d_attn_out_shards, bo_partials;
  for (std::int64_t r = 0; r < t; ++r) {
    const auto ri = static_cast<std::size_t>(r);
    d_attn_out_shards.push_back(
        dropout_backward(d_r1[ri], fwd.attn_dropout_mask[ri], cfg.dropout_p));
    bo_partials.push_back(column_sum(d_attn_out_shards.back()));
  }
  const Tensor d_attn_out = all_gather(d_attn_out_shards, 0, &back.comm, CommTag::Schedule);
  const Tensor y1_full = all_gather(fwd.y1_shards, 0, &back.comm, CommTag::Regather);

  std::vector<Tensor> wq_grads, wk_grads, wv_grads, bq_grads, bk_grads, bv_grads, wo_grads;
  std::vector<Tensor> d_y1_partials;
  const std::int64_t local_heads = cfg.heads / t;
  for (std::int64_t r = 0; r < t; ++r) {
    const auto ri = static_cast<std::size_t>(r);
    const Tensor d_proj_in = matmul_transposed_rhs(d_attn_out, sp[ri].wo);
    wo_grads.push_back(matmul_transposed_lhs(fwd.attn_proj_input[ri], d_attn_out));
    const InteriorGrads ig = attention_interior_backward(
        d_proj_in, fwd.interior[ri], fwd.q[ri], fwd.k[ri], fwd.v[ri], cfg, local_heads);
    bq_grads.push_back(column_sum(ig.dq));
    bk_grads.push_back(column_sum(ig.dk));
    bv_grads.push_back(column_sum(ig.dv));
    wq_grads.push_back(matmul_transposed_lhs(y1_full, ig.dq));
    wk_grads.push_back(matmul_transposed_lhs(y1_full, ig.dk));
    wv_grads.push_back(matmul_transposed_lhs(y1_full, ig.dv));
    Tensor d_y1 = matmul_transposed_rhs(ig.dq, sp[ri].wq);
    d_y1 = add(d_y1, matmul_transposed_rhs(ig.dk, sp[ri].wk));
    d_y1 = add(d_y1, matmul_transposed_rhs(ig.dv, sp[ri].wv));
    d_y1_partials.push_back(std::move(d_y1));
  }
  const std::vector<Tensor> d_y1_shards =
      reduce_scatter(d_y1_partials, 0, &back.comm, CommTag::Schedule);

  std::vector<Tensor> ln1_gain_partials, ln1_bias_partials;
  for (std::int64_t r = 0; r < t; ++r) {
    const auto ri = static_cast<std::size_t>(r);
    Tensor dgain({h}), dbias({h});
    const Tensor dx_ln = layer_norm_backward(d_y1_shards[ri], fwd.x_shards[ri],
                                             fwd.ln1_stats[ri], params.ln1_gain, &dgain, &dbias);
    back.dx_shards.push_back(add(d_r1[ri], dx_ln));
    ln1_gain_partials.push_back(std::move(dgain));
    ln1_bias_partials.push_back(std::move(dbias));
  }

  // Replicated-parameter gradients need a cross-rank reduction; the sharded
  // weight gradients above are already rank-local.
  back.param_grads = LayerParams::zeros(cfg);
  back.param_grads.wq = concat(wq_grads, 1);
  back.param_grads.wk = concat(wk_grads, 1);
  back.param_grads.wv = concat(wv_grads, 1);
  back.param_grads.bq = concat(bq_grads, 0);
  back.param_grads.bk = concat(bk_grads, 0);
  back.param_grads.bv = concat(bv_grads, 0);
  back.param_grads.wo = concat(wo_grads, 0);
  back.param_grads.w1 = concat(w1_grads, 1);
  back.param_grads.b1 = concat(b1_grads, 0);
  back.param_grads.w2 = concat(w2_grads, 0);
  back.param_grads.bo = all_reduce(bo_partials, &back.comm, CommTag::GradSync);
  back.param_grads.b2 = all_reduce(b2_partials, &back.comm, CommTag::GradSync);
  back.param_grads.ln1_gain = all_reduce(ln1_gain_partials, &back.comm, CommTag::GradSync);
  back.param_grads.ln1_bias = all_reduce(ln1_bias_partials, &back.comm, CommTag::GradSync);
  back.param_grads.ln2_gain = all_reduce(ln2_gain_partials, &back.comm, CommTag::GradSync);
  back.param_grads.ln2_bias = all_reduce(ln2_bias_partials, &back.comm, CommTag::GradSync);
  back.w1_grad_shards = std::move(w1_grads);
  return back;
}

}  // namespace actplan::seqpar
