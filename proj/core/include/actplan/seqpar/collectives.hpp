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

#include "actplan/rational.hpp"
#include "actplan/seqpar/tensor.hpp"

namespace actplan::seqpar {

// Why a collective ran. Schedule collectives are the g/g-bar operators the
// bandwidth claim counts; regathers are the overlapped backward all-gathers
// of sequence-sharded inputs; grad syncs reduce replicated-parameter grads.
enum class CommTag { Schedule, Regather, GradSync };

struct CommCounters {
  std::int64_t all_gathers = 0;
  std::int64_t reduce_scatters = 0;
  std::int64_t all_reduces = 0;
  // Modeled per-rank ring traffic in elements: (t-1)/t * n per all-gather or
  // reduce-scatter, twice that per all-reduce.
  BigInt ring_elements{0};
};

struct CommLog {
  CommCounters schedule;
  CommCounters regather;
  CommCounters grad_sync;

  CommCounters& by_tag(CommTag tag) {
    switch (tag) {
      case CommTag::Schedule: return schedule;
      case CommTag::Regather: return regather;
      case CommTag::GradSync: return grad_sync;
    }
    return schedule;
  }
};

// Simulated collectives over the tensor-parallel group. Reductions always
// sum in rank order 0..t-1 so results are bitwise deterministic and
// independent of caller evaluation order. At t=1 all three are the identity.
Tensor all_gather(std::span<const Tensor> shards, std::size_t axis, CommLog* log = nullptr,
                  CommTag tag = CommTag::Schedule);
std::vector<Tensor> reduce_scatter(std::span<const Tensor> partials, std::size_t axis,
                                   CommLog* log = nullptr, CommTag tag = CommTag::Schedule);
Tensor all_reduce(std::span<const Tensor> partials, CommLog* log = nullptr,
                  CommTag tag = CommTag::Schedule);

// Modeled per-rank ring-communication bytes for one transformer layer,
// forward plus backward. Plain tensor parallelism does 4 all-reduces on
// (s, b, h) activations; tensor+sequence parallelism does 4 all-gathers and
// 4 reduce-scatters on the same tensors. A ring all-reduce is a
// reduce-scatter followed by an all-gather, so the two modes move the same
// number of bytes.
BigInt layer_comm_bytes_tensor_parallel(std::int64_t seq, std::int64_t batch, std::int64_t hidden,
                                        std::int64_t t, std::int64_t elem_bytes);
BigInt layer_comm_bytes_tensor_sequence(std::int64_t seq, std::int64_t batch, std::int64_t hidden,
                                        std::int64_t t, std::int64_t elem_bytes);

}  // namespace actplan::seqpar
