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

#include <boost/multiprecision/cpp_int.hpp>
#include <boost/rational.hpp>

namespace actplan {

// All byte and FLOP formulas are evaluated in exact arithmetic and only
// converted to machine integers (or doubles, for display) at the edges.
using BigInt = boost::multiprecision::cpp_int;
using Rational = boost::rational<BigInt>;

inline BigInt floor_rational(const Rational& r) {
  BigInt q = r.numerator() / r.denominator();
  if (r.numerator() < 0 && q * r.denominator() != r.numerator()) {
    --q;
  }
  return q;
}

inline std::int64_t to_int64(const BigInt& v) {
  if (v > BigInt(INT64_MAX) || v < BigInt(INT64_MIN)) {
    throw std::overflow_error("value does not fit in 64-bit integer: " + v.str());
  }
  return static_cast<std::int64_t>(v);
}

// Exact value floored to whole bytes. Memory budgets are never under-reported
// by more than one byte per term.
inline std::int64_t floor_bytes(const Rational& r) { return to_int64(floor_rational(r)); }

inline double to_double(const Rational& r) {
  return static_cast<double>(r.numerator()) / static_cast<double>(r.denominator());
}

inline double to_double(const BigInt& v) { return static_cast<double>(v); }

// Parses a plain decimal like "13.75" or "-0.5" into an exact rational.
// Scientific notation is not accepted; iteration times and tolerances in
// reports stay exact this way.
Rational rational_from_decimal(std::string_view text);

// Renders a byte count as GiB with fixed decimals, e.g. "2.73".
std::string gib_string(std::int64_t bytes, int decimals = 2);

// Renders a rational as a percentage with fixed decimals, e.g. "51.4".
std::string percent_string(const Rational& fraction, int decimals = 1);

}  // namespace actplan
