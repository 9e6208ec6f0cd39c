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
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace actplan {

// Transformer hyperparameters. Single-stack decoder/encoder with `layers`
// identical blocks; hidden size quadruples inside the MLP.
struct ModelShape {
  std::int64_t attention_heads = 0;  // a
  std::int64_t hidden = 0;           // h
  std::int64_t layers = 0;           // L
  std::int64_t seq_len = 0;          // s
  std::int64_t vocab = 0;            // v

  bool operator==(const ModelShape&) const = default;
};

// Parallel decomposition of one training job. interleave == 1 means the
// plain (non-interleaved) 1F1B schedule.
struct ParallelLayout {
  std::int64_t tensor = 1;                // t
  std::int64_t pipeline = 1;              // p
  std::int64_t interleave = 1;            // m
  std::int64_t data_parallel = 1;         // d
  std::int64_t microbatch = 1;            // b
  std::int64_t microbatches_per_iter = 1; // n_mb

  bool operator==(const ParallelLayout&) const = default;
};

// Samples processed per iteration across the whole job: b * n_mb * d.
std::int64_t iteration_batch(const ParallelLayout& layout);

enum class RecomputeKind { None, Full, Selective };

// Which activations are kept versus recomputed. `microbatch_level` turns the
// base kind into a windowed policy where as many microbatches as fit are kept
// fully stored and only the rest are checkpointed; it requires a base kind
// other than None.
struct RecomputeStrategy {
  RecomputeKind kind = RecomputeKind::None;
  bool sequence_parallel = false;
  bool microbatch_level = false;

  // Parses "none|full|selective" with optional "+seq" and "+mblevel"
  // suffixes, e.g. "selective+seq" or "full+seq+mblevel".
  static RecomputeStrategy parse(std::string_view spec);
  std::string name() const;

  bool operator==(const RecomputeStrategy&) const = default;
};

// Storage width conventions. Defaults model mixed-precision training:
// 2-byte activations, 1-byte dropout masks, 4-byte logits.
struct ByteConvention {
  std::int64_t activation_elem = 2;
  std::int64_t mask_elem = 1;
  std::int64_t logits_elem = 4;

  bool operator==(const ByteConvention&) const = default;
};

struct Hardware {
  std::int64_t device_mem = std::int64_t{80} << 30;           // bytes
  std::int64_t peak_flops_per_device = 312'000'000'000'000;   // FLOPs/s
  std::int64_t devices = 1;

  bool operator==(const Hardware&) const = default;
};

struct TrainConfig {
  ModelShape shape;
  ParallelLayout layout;
  Hardware hardware;
  ByteConvention bytes;
};

struct Violation {
  std::string field;
  std::string message;
};

// Returns every violated invariant, not just the first. Violations are data,
// not faults.
std::vector<Violation> validate(const ModelShape& shape, const ParallelLayout& layout);
void validate_or_throw(const ModelShape& shape, const ParallelLayout& layout);

class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Parses the flat JSON config document. The schema is strict: keys are
// exactly {a,h,L,s,v,t,p,m,d,b,n_mb,device_mem_bytes,peak_flops,devices},
// all integers; unknown or duplicate keys are errors. m, d default to 1,
// n_mb defaults to p, and the hardware keys default to an 80 GiB / 312
// TFLOPs device with devices = t*p*d.
TrainConfig parse_config(std::string_view text);

// Emits all schema keys; parse(serialize(c)) == c.
std::string serialize_config(const TrainConfig& config);

// Built-in model configurations, by name: "22b", "175b", "530b", "1t".
const TrainConfig* find_preset(std::string_view name);
std::vector<std::string> preset_names();

}  // namespace actplan
