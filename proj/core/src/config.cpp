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

#include "actplan/config.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cstdio>
#include <map>
#include <optional>

#include <nlohmann/json.hpp>

#include "actplan/rational.hpp"

namespace actplan {

using json = nlohmann::json;

std::int64_t iteration_batch(const ParallelLayout& layout) {
  return layout.microbatch * layout.microbatches_per_iter * layout.data_parallel;
}

RecomputeStrategy RecomputeStrategy::parse(std::string_view spec) {
  RecomputeStrategy out;
  bool have_kind = false;
  std::string_view rest = spec;
  // '+'-separated tokens in any order: exactly one of none|full|selective,
  // plus optional seq and mblevel modifiers.
  while (!rest.empty()) {
    const auto pos = rest.find('+');
    const std::string_view tok = rest.substr(0, pos);
    rest = pos == std::string_view::npos ? std::string_view{} : rest.substr(pos + 1);
    if (tok == "none" || tok == "full" || tok == "selective") {
      if (have_kind) {
        throw std::invalid_argument("strategy '" + std::string(spec) +
                                    "' names more than one recompute kind");
      }
      have_kind = true;
      out.kind = tok == "none" ? RecomputeKind::None
                               : tok == "full" ? RecomputeKind::Full : RecomputeKind::Selective;
    } else if (tok == "seq") {
      out.sequence_parallel = true;
    } else if (tok == "mblevel") {
      out.microbatch_level = true;
    } else {
      throw std::invalid_argument("unknown strategy token '" + std::string(tok) +
                                  "' (expected none|full|selective with optional +seq, +mblevel)");
    }
  }
  if (!have_kind) {
    throw std::invalid_argument("strategy '" + std::string(spec) +
                                "' must name one of none|full|selective");
  }
  if (out.microbatch_level && out.kind == RecomputeKind::None) {
    throw std::invalid_argument("'none+mblevel' is not a strategy: the microbatch window needs "
                                "a full or selective base to checkpoint with");
  }
  return out;
}

std::string RecomputeStrategy::name() const {
  std::string out;
  switch (kind) {
    case RecomputeKind::None: out = "none"; break;
    case RecomputeKind::Full: out = "full"; break;
    case RecomputeKind::Selective: out = "selective"; break;
  }
  if (sequence_parallel) out += "+seq";
  if (microbatch_level) out += "+mblevel";
  return out;
}

std::vector<Violation> validate(const ModelShape& shape, const ParallelLayout& layout) {
  std::vector<Violation> out;
  auto require = [&out](bool ok, const char* field, std::string message) {
    if (!ok) out.push_back({field, std::move(message)});
  };

  require(shape.attention_heads >= 1, "a", "a must be >= 1");
  require(shape.hidden >= 1, "h", "h must be >= 1");
  require(shape.layers >= 1, "L", "L must be >= 1");
  require(shape.seq_len >= 1, "s", "s must be >= 1");
  require(shape.vocab >= 1, "v", "v must be >= 1");
  require(layout.tensor >= 1, "t", "t must be >= 1");
  require(layout.pipeline >= 1, "p", "p must be >= 1");
  require(layout.interleave >= 1, "m", "m must be >= 1");
  require(layout.data_parallel >= 1, "d", "d must be >= 1");
  require(layout.microbatch >= 1, "b", "b must be >= 1");
  require(layout.microbatches_per_iter >= 1, "n_mb", "n_mb must be >= 1");

  if (shape.attention_heads >= 1 && shape.hidden >= 1) {
    require(shape.hidden % shape.attention_heads == 0, "h",
            "h not divisible by a (head dim must be integral)");
  }
  if (shape.hidden >= 1 && layout.tensor >= 1) {
    require(shape.hidden % layout.tensor == 0, "h", "h not divisible by t");
  }
  if (shape.seq_len >= 1 && layout.tensor >= 1) {
    require(shape.seq_len % layout.tensor == 0, "s", "s not divisible by t");
  }
  if (shape.layers >= 1 && layout.pipeline >= 1 && layout.interleave >= 1) {
    require(shape.layers % (layout.pipeline * layout.interleave) == 0, "L",
            "L not divisible by p*m");
  }
  if (layout.pipeline >= 1 && layout.microbatches_per_iter >= 1) {
    require(layout.microbatches_per_iter >= layout.pipeline, "n_mb",
            "n_mb < p (pipeline cannot be filled)");
  }
  return out;
}

void validate_or_throw(const ModelShape& shape, const ParallelLayout& layout) {
  const auto violations = validate(shape, layout);
  if (violations.empty()) return;
  std::string what = "invalid configuration:";
  for (const auto& v : violations) {
    what += " [" + v.field + "] " + v.message + ";";
  }
  throw std::invalid_argument(what);
}

namespace {

constexpr std::array<const char*, 14> kSchemaKeys = {
    "a", "h", "L", "s", "v", "t", "p", "m", "d", "b",
    "n_mb", "device_mem_bytes", "peak_flops", "devices"};
constexpr std::array<const char*, 8> kRequiredKeys = {"a", "h", "L", "s", "v", "t", "p", "b"};

bool is_schema_key(const std::string& key) {
  return std::find_if(kSchemaKeys.begin(), kSchemaKeys.end(),
                      [&key](const char* k) { return key == k; }) != kSchemaKeys.end();
}

std::size_t line_of_offset(std::string_view text, std::size_t byte_offset) {
  return 1 + static_cast<std::size_t>(
                 std::count(text.begin(), text.begin() + std::min(byte_offset, text.size()), '\n'));
}

// SAX handler for the flat integer-object schema. Rejects nesting,
// non-integer values, duplicate keys, and unknown keys in one pass.
class FlatConfigSax {
 public:
  std::map<std::string, std::int64_t> values;

  bool null() { return fail_value("null"); }
  bool boolean(bool) { return fail_value("boolean"); }
  bool number_float(double, const std::string&) { return fail_value("non-integer number"); }
  bool string(std::string&) { return fail_value("string"); }
  bool binary(json::binary_t&) { return fail_value("binary"); }

  bool number_integer(std::int64_t v) { return accept(v); }
  bool number_unsigned(std::uint64_t v) {
    if (v > static_cast<std::uint64_t>(INT64_MAX)) {
      throw ConfigError("field '" + current_key_ + "': value out of range");
    }
    return accept(static_cast<std::int64_t>(v));
  }

  bool start_object(std::size_t) {
    if (depth_++ > 0) throw ConfigError("nested objects are not allowed in a config document");
    return true;
  }
  bool end_object() { return true; }
  bool start_array(std::size_t) {
    throw ConfigError("arrays are not allowed in a config document");
  }
  bool end_array() { return true; }

  bool key(std::string& k) {
    if (!is_schema_key(k)) throw ConfigError("unknown key '" + k + "'");
    if (values.count(k) != 0) throw ConfigError("duplicate key '" + k + "'");
    current_key_ = k;
    have_key_ = true;
    return true;
  }

  bool parse_error(std::size_t position, const std::string&, const json::exception& ex) {
    position_ = position;
    throw ConfigError(std::string("parse error: ") + ex.what());
  }

  std::size_t position() const { return position_; }

 private:
  bool accept(std::int64_t v) {
    if (!have_key_) throw ConfigError("top-level value must be an object");
    values[current_key_] = v;
    have_key_ = false;
    return true;
  }
  bool fail_value(const char* what) {
    if (!have_key_) throw ConfigError("top-level value must be an object");
    throw ConfigError("field '" + current_key_ + "' must be an integer, got " + what);
  }

  int depth_ = 0;
  bool have_key_ = false;
  std::string current_key_;
  std::size_t position_ = 0;
};

}  // namespace

TrainConfig parse_config(std::string_view text) {
  FlatConfigSax sax;
  try {
    json::sax_parse(text, &sax);
  } catch (const json::exception& ex) {
    throw ConfigError(std::string("parse error: ") + ex.what());
  } catch (const ConfigError& ex) {
    // Re-throw with a line hint when we still know where the cursor was.
    const std::size_t line = line_of_offset(text, sax.position());
    if (sax.position() > 0) {
      throw ConfigError(std::string(ex.what()) + " (near line " + std::to_string(line) + ")");
    }
    throw;
  }

  for (const char* req : kRequiredKeys) {
    if (sax.values.count(req) == 0) {
      throw ConfigError(std::string("missing required field ") + req);
    }
  }

  auto get = [&sax](const char* key, std::int64_t fallback) {
    const auto it = sax.values.find(key);
    return it == sax.values.end() ? fallback : it->second;
  };

  TrainConfig c;
  c.shape.attention_heads = sax.values.at("a");
  c.shape.hidden = sax.values.at("h");
  c.shape.layers = sax.values.at("L");
  c.shape.seq_len = sax.values.at("s");
  c.shape.vocab = sax.values.at("v");
  c.layout.tensor = sax.values.at("t");
  c.layout.pipeline = sax.values.at("p");
  c.layout.interleave = get("m", 1);
  c.layout.data_parallel = get("d", 1);
  c.layout.microbatch = sax.values.at("b");
  c.layout.microbatches_per_iter = get("n_mb", c.layout.pipeline);
  c.hardware.device_mem = get("device_mem_bytes", Hardware{}.device_mem);
  c.hardware.peak_flops_per_device = get("peak_flops", Hardware{}.peak_flops_per_device);
  c.hardware.devices =
      get("devices", c.layout.tensor * c.layout.pipeline * c.layout.data_parallel);
  return c;
}

std::string serialize_config(const TrainConfig& c) {
  json doc;
  doc["a"] = c.shape.attention_heads;
  doc["h"] = c.shape.hidden;
  doc["L"] = c.shape.layers;
  doc["s"] = c.shape.seq_len;
  doc["v"] = c.shape.vocab;
  doc["t"] = c.layout.tensor;
  doc["p"] = c.layout.pipeline;
  doc["m"] = c.layout.interleave;
  doc["d"] = c.layout.data_parallel;
  doc["b"] = c.layout.microbatch;
  doc["n_mb"] = c.layout.microbatches_per_iter;
  doc["device_mem_bytes"] = c.hardware.device_mem;
  doc["peak_flops"] = c.hardware.peak_flops_per_device;
  doc["devices"] = c.hardware.devices;
  return doc.dump(2) + "\n";
}

namespace {

TrainConfig make_preset(std::int64_t a, std::int64_t h, std::int64_t L, std::int64_t t,
                        std::int64_t p, std::int64_t m, std::int64_t b, std::int64_t n_mb,
                        std::int64_t devices) {
  TrainConfig c;
  c.shape = {a, h, L, /*seq_len=*/2048, /*vocab=*/51200};
  c.layout = {t, p, m, /*data_parallel=*/1, b, n_mb};
  c.hardware.devices = devices;
  return c;
}

// Evaluation configurations: 22B, 175B (GPT-3), 530B (MT-NLG), 1T. The
// interleaved schedule (m=3) is used for the 175B and 530B models.
const std::array<std::pair<const char*, TrainConfig>, 4> kPresets = {{
    {"22b", make_preset(64, 6144, 48, 8, 1, 1, 4, 1, 8)},
    {"175b", make_preset(96, 12288, 96, 8, 8, 3, 1, 64, 64)},
    {"530b", make_preset(128, 20480, 105, 8, 35, 3, 1, 280, 280)},
    {"1t", make_preset(160, 25600, 128, 8, 64, 1, 1, 512, 512)},
}};

}  // namespace

const TrainConfig* find_preset(std::string_view name) {
  std::string lower(name);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char ch) { return static_cast<char>(std::tolower(ch)); });
  for (const auto& [key, cfg] : kPresets) {
    if (lower == key) return &cfg;
  }
  return nullptr;
}

std::vector<std::string> preset_names() {
  std::vector<std::string> out;
  out.reserve(kPresets.size());
  for (const auto& [key, cfg] : kPresets) out.emplace_back(key);
  return out;
}

Rational rational_from_decimal(std::string_view text) {
  std::string_view rest = text;
  bool negative = false;
  if (!rest.empty() && (rest.front() == '-' || rest.front() == '+')) {
    negative = rest.front() == '-';
    rest.remove_prefix(1);
  }
  BigInt num = 0;
  BigInt den = 1;
  bool seen_digit = false;
  bool seen_dot = false;
  for (char ch : rest) {
    if (ch == '.') {
      if (seen_dot) throw std::invalid_argument("bad decimal: " + std::string(text));
      seen_dot = true;
      continue;
    }
    if (ch < '0' || ch > '9') throw std::invalid_argument("bad decimal: " + std::string(text));
    num = num * 10 + (ch - '0');
    if (seen_dot) den *= 10;
    seen_digit = true;
  }
  if (!seen_digit) throw std::invalid_argument("bad decimal: " + std::string(text));
  if (negative) num = -num;
  return Rational(num, den);
}

std::string gib_string(std::int64_t bytes, int decimals) {
  const double gib = static_cast<double>(bytes) / static_cast<double>(std::int64_t{1} << 30);
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", decimals, gib);
  return buf;
}

std::string percent_string(const Rational& fraction, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", decimals, to_double(fraction) * 100.0);
  return buf;
}

}  // namespace actplan
