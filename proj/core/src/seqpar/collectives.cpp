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

#include "actplan/seqpar/collectives.hpp"

namespace actplan::seqpar {

namespace {

void check_group(std::span<const Tensor> tensors, const char* op) {
  if (tensors.empty()) throw std::invalid_argument(std::string(op) + ": empty rank group");
  for (const Tensor& t : tensors) {
    if (!t.same_shape(tensors[0])) {
      throw std::invalid_argument(std::string(op) + ": shard shapes differ across ranks");
    }
  }
}

void log_ring(CommLog* log, CommTag tag, std::int64_t logical_elems, std::int64_t ranks,
              std::int64_t steps_of_volume, std::int64_t count_field_delta,
              std::int64_t CommCounters::* field) {
  if (log == nullptr) return;
  CommCounters& counters = log->by_tag(tag);
  counters.*field += count_field_delta;
  counters.ring_elements +=
      BigInt(steps_of_volume) * (BigInt(logical_elems) / ranks) * (ranks - 1);
}

Tensor ordered_sum(std::span<const Tensor> partials) {
  Tensor acc = partials[0];
  for (std::size_t r = 1; r < partials.size(); ++r) {
    for (std::int64_t i = 0; i < acc.numel(); ++i) acc[i] += partials[r][i];
  }
  return acc;
}

}  // namespace

Tensor all_gather(std::span<const Tensor> shards, std::size_t axis, CommLog* log, CommTag tag) {
  check_group(shards, "all_gather");
  Tensor full = concat(shards, axis);
  log_ring(log, tag, full.numel(), static_cast<std::int64_t>(shards.size()), 1, 1,
           &CommCounters::all_gathers);
  return full;
}

std::vector<Tensor> reduce_scatter(std::span<const Tensor> partials, std::size_t axis,
                                   CommLog* log, CommTag tag) {
  check_group(partials, "reduce_scatter");
  const auto ranks = static_cast<std::int64_t>(partials.size());
  Tensor sum = ordered_sum(partials);
  log_ring(log, tag, sum.numel(), ranks, 1, 1, &CommCounters::reduce_scatters);
  return split(sum, axis, ranks);
}

Tensor all_reduce(std::span<const Tensor> partials, CommLog* log, CommTag tag) {
  check_group(partials, "all_reduce");
  Tensor sum = ordered_sum(partials);
  log_ring(log, tag, sum.numel(), static_cast<std::int64_t>(partials.size()), 2, 1,
           &CommCounters::all_reduces);
  return sum;
}

BigInt layer_comm_bytes_tensor_parallel(std::int64_t seq, std::int64_t batch, std::int64_t hidden,
                                        std::int64_t t, std::int64_t elem_bytes) {
  const BigInt tensor_bytes = BigInt(seq) * batch * hidden * elem_bytes;
  // 4 all-reduces; each moves 2 * (t-1)/t of the tensor per rank.
  return BigInt(4) * 2 * (tensor_bytes / t) * (t - 1);
}

BigInt layer_comm_bytes_tensor_sequence(std::int64_t seq, std::int64_t batch, std::int64_t hidden,
                                        std::int64_t t, std::int64_t elem_bytes) {
  const BigInt tensor_bytes = BigInt(seq) * batch * hidden * elem_bytes;
  // 4 all-gathers + 4 reduce-scatters; each moves (t-1)/t of the tensor.
  return BigInt(8) * (tensor_bytes / t) * (t - 1);
}

}  // namespace actplan::seqpar
