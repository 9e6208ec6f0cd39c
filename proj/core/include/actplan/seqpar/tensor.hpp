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
#include <span>
#include <stdexcept>
#include <vector>

namespace actplan::seqpar {

// Small dense row-major tensor of doubles. The harness verifies algebra, not
// fp16 numerics, so elements are 64-bit; byte accounting still follows
// ByteConvention.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::vector<std::int64_t> shape);

  static Tensor zeros(std::vector<std::int64_t> shape) { return Tensor(std::move(shape)); }

  const std::vector<std::int64_t>& shape() const { return shape_; }
  std::int64_t dim(std::size_t axis) const { return shape_.at(axis); }
  std::int64_t numel() const { return static_cast<std::int64_t>(data_.size()); }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  std::span<double> values() { return data_; }
  std::span<const double> values() const { return data_; }

  double& operator[](std::int64_t i) { return data_[static_cast<std::size_t>(i)]; }
  double operator[](std::int64_t i) const { return data_[static_cast<std::size_t>(i)]; }

  bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }
  bool all_finite() const;

 private:
  std::vector<std::int64_t> shape_;
  std::vector<double> data_;
};

// y[rows, n] = x[rows, k] * w[k, n] (+ bias[n]); x may have any leading
// shape, flattened to rows = numel / k.
Tensor matmul(const Tensor& x, const Tensor& w);
Tensor matmul_add(const Tensor& x, const Tensor& w, const Tensor& bias);
// grad helpers for y = x*w: dx = dy * w^T, dw = x^T * dy.
Tensor matmul_transposed_rhs(const Tensor& dy, const Tensor& w);
Tensor matmul_transposed_lhs(const Tensor& x, const Tensor& dy);
// Sum of dy over all leading dims -> vector of size n (bias gradient).
Tensor column_sum(const Tensor& dy);

Tensor add(const Tensor& a, const Tensor& b);
Tensor hadamard(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double factor);
double max_abs_diff(const Tensor& a, const Tensor& b);
bool bit_equal(const Tensor& a, const Tensor& b);

Tensor concat(std::span<const Tensor> parts, std::size_t axis);
std::vector<Tensor> split(const Tensor& x, std::size_t axis, std::int64_t parts);
// parts-way split along axis, returning the piece at `index`.
Tensor slice_part(const Tensor& x, std::size_t axis, std::int64_t parts, std::int64_t index);

enum class ShardAxis { Sequence, Hidden, Replicated };

// A logical tensor carried as one dense shard per simulated tensor-parallel
// rank. Replicated tensors keep identical shards everywhere.
struct RankShardedTensor {
  std::vector<Tensor> shards;
  ShardAxis axis = ShardAxis::Replicated;
  std::vector<std::int64_t> logical_shape;

  static RankShardedTensor from_full(const Tensor& full, ShardAxis axis, std::size_t axis_index,
                                     std::int64_t ranks);
  Tensor to_full(std::size_t axis_index) const;
  void check() const;  // shard shapes consistent; replicated shards identical
};

}  // namespace actplan::seqpar
