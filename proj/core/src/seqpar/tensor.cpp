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

#include "actplan/seqpar/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numeric>

#include <Eigen/Dense>

namespace actplan::seqpar {

namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatrixMap = Eigen::Map<RowMatrix>;
using ConstMatrixMap = Eigen::Map<const RowMatrix>;

std::int64_t shape_numel(const std::vector<std::int64_t>& shape) {
  std::int64_t n = 1;
  for (std::int64_t d : shape) {
    if (d < 0) throw std::invalid_argument("negative tensor dimension");
    n *= d;
  }
  return n;
}

ConstMatrixMap as_rows(const Tensor& x, std::int64_t cols) {
  if (cols <= 0 || x.numel() % cols != 0) {
    throw std::invalid_argument("tensor size not divisible by trailing dimension");
  }
  return ConstMatrixMap(x.data(), x.numel() / cols, cols);
}

}  // namespace

Tensor::Tensor(std::vector<std::int64_t> shape)
    : shape_(std::move(shape)), data_(static_cast<std::size_t>(shape_numel(shape_)), 0.0) {}

bool Tensor::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

Tensor matmul(const Tensor& x, const Tensor& w) {
  if (w.shape().size() != 2) throw std::invalid_argument("matmul: weight must be 2-D");
  const std::int64_t k = w.dim(0);
  const std::int64_t n = w.dim(1);
  if (x.shape().empty() || x.shape().back() != k) {
    throw std::invalid_argument("matmul: inner dimensions do not match");
  }
  std::vector<std::int64_t> out_shape = x.shape();
  out_shape.back() = n;
  Tensor out(std::move(out_shape));
  MatrixMap(out.data(), out.numel() / n, n).noalias() =
      as_rows(x, k) * ConstMatrixMap(w.data(), k, n);
  return out;
}

Tensor matmul_add(const Tensor& x, const Tensor& w, const Tensor& bias) {
  const std::int64_t n = w.dim(1);
  if (bias.numel() != n) throw std::invalid_argument("matmul_add: bias size mismatch");
  Tensor out = matmul(x, w);
  MatrixMap rows(out.data(), out.numel() / n, n);
  rows.rowwise() += Eigen::Map<const Eigen::RowVectorXd>(bias.data(), n);
  return out;
}

Tensor matmul_transposed_rhs(const Tensor& dy, const Tensor& w) {
  if (w.shape().size() != 2) throw std::invalid_argument("matmul: weight must be 2-D");
  const std::int64_t k = w.dim(0);
  const std::int64_t n = w.dim(1);
  if (dy.shape().empty() || dy.shape().back() != n) {
    throw std::invalid_argument("matmul_transposed_rhs: dims do not match");
  }
  std::vector<std::int64_t> out_shape = dy.shape();
  out_shape.back() = k;
  Tensor out(std::move(out_shape));
  MatrixMap(out.data(), out.numel() / k, k).noalias() =
      as_rows(dy, n) * ConstMatrixMap(w.data(), k, n).transpose();
  return out;
}

Tensor matmul_transposed_lhs(const Tensor& x, const Tensor& dy) {
  const std::int64_t k = x.shape().back();
  const std::int64_t n = dy.shape().back();
  const auto xm = as_rows(x, k);
  const auto dym = as_rows(dy, n);
  if (xm.rows() != dym.rows()) {
    throw std::invalid_argument("matmul_transposed_lhs: row counts differ");
  }
  Tensor out({k, n});
  MatrixMap(out.data(), k, n).noalias() = xm.transpose() * dym;
  return out;
}

Tensor column_sum(const Tensor& dy) {
  const std::int64_t n = dy.shape().back();
  Tensor out({n});
  Eigen::Map<Eigen::RowVectorXd>(out.data(), n) = as_rows(dy, n).colwise().sum();
  return out;
}

Tensor add(const Tensor& a, const Tensor& b) {
  if (!a.same_shape(b)) throw std::invalid_argument("add: shape mismatch");
  Tensor out(a.shape());
  for (std::int64_t i = 0; i < a.numel(); ++i) out[i] = a[i] + b[i];
  return out;
}

Tensor hadamard(const Tensor& a, const Tensor& b) {
  if (!a.same_shape(b)) throw std::invalid_argument("hadamard: shape mismatch");
  Tensor out(a.shape());
  for (std::int64_t i = 0; i < a.numel(); ++i) out[i] = a[i] * b[i];
  return out;
}

Tensor scale(const Tensor& a, double factor) {
  Tensor out(a.shape());
  for (std::int64_t i = 0; i < a.numel(); ++i) out[i] = a[i] * factor;
  return out;
}

double max_abs_diff(const Tensor& a, const Tensor& b) {
  if (!a.same_shape(b)) throw std::invalid_argument("max_abs_diff: shape mismatch");
  double m = 0.0;
  for (std::int64_t i = 0; i < a.numel(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

bool bit_equal(const Tensor& a, const Tensor& b) {
  return a.same_shape(b) &&
         std::memcmp(a.data(), b.data(), sizeof(double) * static_cast<std::size_t>(a.numel())) == 0;
}

namespace {

struct AxisBlocks {
  std::int64_t outer = 1;   // product of dims before axis
  std::int64_t axis = 1;    // dim at axis
  std::int64_t inner = 1;   // product of dims after axis
};

AxisBlocks axis_blocks(const std::vector<std::int64_t>& shape, std::size_t axis) {
  if (axis >= shape.size()) throw std::invalid_argument("axis out of range");
  AxisBlocks blocks;
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i < axis) blocks.outer *= shape[i];
    else if (i == axis) blocks.axis = shape[i];
    else blocks.inner *= shape[i];
  }
  return blocks;
}

}  // namespace

Tensor concat(std::span<const Tensor> parts, std::size_t axis) {
  if (parts.empty()) throw std::invalid_argument("concat: no parts");
  std::vector<std::int64_t> out_shape = parts[0].shape();
  std::int64_t axis_total = 0;
  for (const Tensor& part : parts) {
    if (part.shape().size() != out_shape.size()) {
      throw std::invalid_argument("concat: rank mismatch");
    }
    for (std::size_t i = 0; i < out_shape.size(); ++i) {
      if (i != axis && part.shape()[i] != out_shape[i]) {
        throw std::invalid_argument("concat: shape mismatch off the concat axis");
      }
    }
    axis_total += part.shape()[axis];
  }
  out_shape[axis] = axis_total;
  Tensor out(out_shape);

  const AxisBlocks out_blocks = axis_blocks(out_shape, axis);
  std::int64_t axis_offset = 0;
  for (const Tensor& part : parts) {
    const AxisBlocks in_blocks = axis_blocks(part.shape(), axis);
    for (std::int64_t o = 0; o < in_blocks.outer; ++o) {
      const double* src = part.data() + o * in_blocks.axis * in_blocks.inner;
      double* dst = out.data() + (o * out_blocks.axis + axis_offset) * out_blocks.inner;
      std::memcpy(dst, src,
                  sizeof(double) * static_cast<std::size_t>(in_blocks.axis * in_blocks.inner));
    }
    axis_offset += in_blocks.axis;
  }
  return out;
}

std::vector<Tensor> split(const Tensor& x, std::size_t axis, std::int64_t parts) {
  std::vector<Tensor> out;
  out.reserve(static_cast<std::size_t>(parts));
  for (std::int64_t r = 0; r < parts; ++r) out.push_back(slice_part(x, axis, parts, r));
  return out;
}

Tensor slice_part(const Tensor& x, std::size_t axis, std::int64_t parts, std::int64_t index) {
  const AxisBlocks blocks = axis_blocks(x.shape(), axis);
  if (parts < 1 || blocks.axis % parts != 0) {
    throw std::invalid_argument("split axis not divisible by part count");
  }
  if (index < 0 || index >= parts) throw std::invalid_argument("slice index out of range");
  const std::int64_t piece = blocks.axis / parts;
  std::vector<std::int64_t> out_shape = x.shape();
  out_shape[axis] = piece;
  Tensor out(out_shape);
  for (std::int64_t o = 0; o < blocks.outer; ++o) {
    const double* src = x.data() + (o * blocks.axis + index * piece) * blocks.inner;
    double* dst = out.data() + o * piece * blocks.inner;
    std::memcpy(dst, src, sizeof(double) * static_cast<std::size_t>(piece * blocks.inner));
  }
  return out;
}

RankShardedTensor RankShardedTensor::from_full(const Tensor& full, ShardAxis axis,
                                               std::size_t axis_index, std::int64_t ranks) {
  RankShardedTensor out;
  out.axis = axis;
  out.logical_shape = full.shape();
  if (axis == ShardAxis::Replicated) {
    out.shards.assign(static_cast<std::size_t>(ranks), full);
  } else {
    out.shards = split(full, axis_index, ranks);
  }
  return out;
}

Tensor RankShardedTensor::to_full(std::size_t axis_index) const {
  if (axis == ShardAxis::Replicated) return shards.at(0);
  return concat(shards, axis_index);
}

void RankShardedTensor::check() const {
  if (shards.empty()) throw std::invalid_argument("sharded tensor has no shards");
  for (const Tensor& shard : shards) {
    if (!shard.same_shape(shards[0])) {
      throw std::invalid_argument("shard shapes differ across ranks");
    }
  }
  if (axis == ShardAxis::Replicated) {
    for (const Tensor& shard : shards) {
      if (!bit_equal(shard, shards[0])) {
        throw std::invalid_argument("replicated tensor has diverging shards");
      }
    }
  }
}

}  // namespace actplan::seqpar
