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

#include "actplan/seqpar/rng.hpp"

namespace actplan::seqpar {

namespace {

// splitmix64 finalizer
std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

std::uint64_t hash_counter(std::uint64_t key, std::uint64_t index) {
  return mix64(mix64(key) ^ mix64(index + 0x632be59bd9b4e019ULL));
}

double uniform01(std::uint64_t key, std::uint64_t index) {
  return static_cast<double>(hash_counter(key, index) >> 11) * 0x1.0p-53;
}

std::uint64_t MaskKey::fold() const {
  std::uint64_t k = mix64(seed);
  k = mix64(k ^ layer);
  k = mix64(k ^ (static_cast<std::uint64_t>(op) << 20));
  k = mix64(k ^ (static_cast<std::uint64_t>(microbatch) << 40));
  return k;
}

Tensor dropout_mask(const MaskKey& key, const std::vector<std::int64_t>& shape, double p_drop) {
  if (p_drop < 0.0 || p_drop >= 1.0) {
    throw std::invalid_argument("dropout probability must lie in [0, 1)");
  }
  Tensor mask(shape);
  const std::uint64_t folded = key.fold();
  for (std::int64_t i = 0; i < mask.numel(); ++i) {
    mask[i] = uniform01(folded, static_cast<std::uint64_t>(i)) >= p_drop ? 1.0 : 0.0;
  }
  return mask;
}

Tensor random_uniform(std::uint64_t key, const std::vector<std::int64_t>& shape, double lo,
                      double hi) {
  Tensor out(shape);
  for (std::int64_t i = 0; i < out.numel(); ++i) {
    out[i] = lo + (hi - lo) * uniform01(key, static_cast<std::uint64_t>(i));
  }
  return out;
}

}  // namespace actplan::seqpar
