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

#include "actplan/seqpar/tensor.hpp"

namespace actplan::seqpar {

// Counter-based generation: every value is a pure function of (key, index),
// so recomputation and rank-sliced masks reproduce bit-for-bit.
std::uint64_t hash_counter(std::uint64_t key, std::uint64_t index);
double uniform01(std::uint64_t key, std::uint64_t index);

// Identifies one dropout site. Masks are generated at global coordinates and
// sliced per rank, which keeps them consistent across tensor-parallel sizes.
struct MaskKey {
  std::uint64_t seed = 0;
  std::uint32_t layer = 0;
  std::uint32_t op = 0;
  std::uint32_t microbatch = 0;

  std::uint64_t fold() const;
};

// 0/1 keep mask over the full logical shape.
Tensor dropout_mask(const MaskKey& key, const std::vector<std::int64_t>& shape, double p_drop);

Tensor random_uniform(std::uint64_t key, const std::vector<std::int64_t>& shape, double lo,
                      double hi);

}  // namespace actplan::seqpar
