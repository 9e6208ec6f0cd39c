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
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace actplan::seqpar {

struct SuiteResult {
  std::string name;
  int cases = 0;
  int failures = 0;
  double max_abs_err = 0.0;
  double max_rel_err = 0.0;
  std::string note;

  bool passed() const { return failures == 0; }
};

struct VerifyReport {
  std::uint64_t seed = 0;
  std::vector<SuiteResult> suites;

  bool all_passed() const;
};

// Runs the numeric property suites on simulated ranks:
//   collective_identity        all_reduce == all_gather(reduce_scatter),
//                              1000 cases, exact on integer values
//   forward_equivalence        seqpar forward == reference, t in {1,2,4},
//                              20 random shapes, <= 1e-10 (bit-equal at t=1)
//   backward_equivalence       input/parameter grads match the reference
//   gradient_finite_difference central differences, step 1e-5, <= 1e-6 rel
//   byte_ledger                instrumented bytes == closed forms, exactly,
//                              100 random shapes (per-rank totals == /t)
//   recompute_bit_equality     recomputed attention interior is bit-equal
//   comm_volume                4 all-gathers + 4 reduce-scatters per layer,
//                              same modeled bytes as 4 all-reduces
VerifyReport run_verification(std::uint64_t seed);

nlohmann::json to_json(const VerifyReport& report);

}  // namespace actplan::seqpar
