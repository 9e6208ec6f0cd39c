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

#include "cli.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "actplan/activation_memory.hpp"
#include "actplan/config.hpp"
#include "actplan/flops.hpp"
#include "actplan/pipeline_sim.hpp"
#include "actplan/planner.hpp"
#include "actplan/seqpar/verify.hpp"

namespace actplan::cli {

namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ValidationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string fixed(double value, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", decimals, value);
  return buf;
}

std::string sci(double value) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.4e", value);
  return buf;
}

struct CommonOptions {
  std::string config_path;
  std::string preset;
  std::string strategy = "none";
  std::string format = "table";
  std::int64_t activation_bytes = 2;
  std::int64_t mask_bytes = 1;
  std::int64_t logits_bytes = 4;
  std::int64_t weight_bytes = 2;
  std::int64_t optimizer_bytes = 14;

  void attach_config_flags(CLI::App& cmd) {
    cmd.add_option("--config", config_path, "path to a JSON config document");
    cmd.add_option("--preset", preset, "built-in configuration: 22b, 175b, 530b, 1t");
  }
  void attach_format_flag(CLI::App& cmd, const std::string& choices = "table|json|csv") {
    cmd.add_option("--format", format, "output format: " + choices);
  }
  void attach_byte_flags(CLI::App& cmd) {
    cmd.add_option("--activation-bytes", activation_bytes, "bytes per activation element");
    cmd.add_option("--mask-bytes", mask_bytes, "bytes per dropout-mask element");
    cmd.add_option("--logits-bytes", logits_bytes, "bytes per logit element");
    cmd.add_option("--weight-bytes", weight_bytes, "parameter bytes per weight");
    cmd.add_option("--opt-bytes", optimizer_bytes, "optimizer-state bytes per parameter");
  }

  ByteConvention convention() const { return {activation_bytes, mask_bytes, logits_bytes}; }

  TrainConfig load() const {
    if (!config_path.empty() && !preset.empty()) {
      throw UsageError("--config and --preset are mutually exclusive");
    }
    if (config_path.empty() && preset.empty()) {
      throw UsageError("one of --config or --preset is required");
    }
    TrainConfig cfg;
    if (!preset.empty()) {
      const TrainConfig* found = find_preset(preset);
      if (found == nullptr) throw UsageError("unknown preset '" + preset + "'");
      cfg = *found;
    } else {
      std::ifstream in(config_path);
      if (!in) throw ValidationError("cannot open config file: " + config_path);
      std::stringstream buffer;
      buffer << in.rdbuf();
      cfg = parse_config(buffer.str());
    }
    cfg.bytes = convention();
    return cfg;
  }

  RecomputeStrategy parse_strategy() const {
    try {
      return RecomputeStrategy::parse(strategy);
    } catch (const std::invalid_argument& ex) {
      throw UsageError(ex.what());
    }
  }
};

void check_valid(const TrainConfig& cfg, std::ostream& err) {
  const auto violations = validate(cfg.shape, cfg.layout);
  if (violations.empty()) return;
  for (const auto& v : violations) {
    err << "validation: [" << v.field << "] " << v.message << "\n";
  }
  throw ValidationError("configuration is invalid");
}

void check_devices(const TrainConfig& cfg) {
  const std::int64_t expected =
      cfg.layout.tensor * cfg.layout.pipeline * cfg.layout.data_parallel;
  if (cfg.hardware.devices != expected) {
    throw ValidationError("devices (" + std::to_string(cfg.hardware.devices) +
                          ") != t*p*d (" + std::to_string(expected) + ")");
  }
}

std::vector<std::int64_t> parse_int_list(const std::string& text) {
  std::vector<std::int64_t> out;
  std::stringstream ss(text);
  std::string token;
  while (std::getline(ss, token, ',')) {
    if (token.empty()) continue;
    out.push_back(std::stoll(token));
  }
  if (out.empty()) throw UsageError("empty integer list: '" + text + "'");
  return out;
}

std::int64_t derive_activation_budget(const TrainConfig& cfg, const CommonOptions& opts,
                                      std::int64_t explicit_budget) {
  if (explicit_budget > 0) return explicit_budget;
  const auto po = params_and_optimizer_bytes(cfg.shape, cfg.layout, opts.weight_bytes,
                                             opts.optimizer_bytes);
  return cfg.hardware.device_mem - po.params - po.optimizer;
}

// ---- memory ----

struct MemoryOptions {
  CommonOptions common;
};

int run_memory(const MemoryOptions& opts, std::ostream& out, std::ostream& err) {
  const TrainConfig cfg = opts.common.load();
  check_valid(cfg, err);
  const RecomputeStrategy strategy = opts.common.parse_strategy();
  const MemoryReport report =
      memory_report(cfg.shape, cfg.layout, strategy, cfg.bytes, opts.common.weight_bytes,
                    opts.common.optimizer_bytes);

  if (opts.common.format == "json") {
    out << to_json(report).dump(2) << "\n";
    return kExitOk;
  }
  if (opts.common.format == "csv") {
    out << "field,bytes\n"
        << "per_layer," << report.per_layer << "\n"
        << "transformer_total_first_stage," << report.transformer_total_first_stage << "\n"
        << "extras.embedding_dropout," << report.extras.embedding_dropout << "\n"
        << "extras.final_layernorm," << report.extras.final_layernorm << "\n"
        << "extras.output_proj_input," << report.extras.output_proj_input << "\n"
        << "extras.logits," << report.extras.logits << "\n"
        << "params," << report.params << "\n"
        << "optimizer_state," << report.optimizer_state << "\n"
        << "grand_total," << report.grand_total << "\n";
    return kExitOk;
  }
  if (opts.common.format != "table") throw UsageError("unknown format " + opts.common.format);

  auto row = [&out](const char* label, std::int64_t bytes) {
    out << "  " << label << gib_string(bytes) << " GiB  (" << bytes << " bytes)\n";
  };
  out << "memory report, strategy " << strategy.name() << "\n";
  row("per-layer activations           ", report.per_layer);
  row("transformer first stage         ", report.transformer_total_first_stage);
  out << "  interleave factor               "
      << to_int64(report.interleave_factor.numerator()) << "/"
      << to_int64(report.interleave_factor.denominator()) << "\n";
  row("extras: embedding dropout       ", report.extras.embedding_dropout);
  row("extras: final layer-norm        ", report.extras.final_layernorm);
  row("extras: output projection input ", report.extras.output_proj_input);
  row("extras: logits                  ", report.extras.logits);
  row("params                          ", report.params);
  row("optimizer state                 ", report.optimizer_state);
  row("grand total                     ", report.grand_total);
  out << "  note: transient buffers are not counted (workspace scratch, and the backward\n"
         "  re-gather of sequence-sharded layer-norm outputs overlapped with compute)\n";
  return kExitOk;
}

// ---- flops ----

struct FlopsOptions {
  CommonOptions common;
  std::string iter_time;
  std::string selective_model = "equation";
  std::int64_t budget = 0;
};

int run_flops(const FlopsOptions& opts, std::ostream& out, std::ostream& err) {
  const TrainConfig cfg = opts.common.load();
  check_valid(cfg, err);
  check_devices(cfg);
  const RecomputeStrategy strategy = opts.common.parse_strategy();

  SelectiveFlopsModel model = SelectiveFlopsModel::Equation;
  if (opts.selective_model == "text") model = SelectiveFlopsModel::Text;
  else if (opts.selective_model != "equation") {
    throw UsageError("--flops-selective must be equation or text");
  }

  Rational fraction(1);
  if (strategy.microbatch_level) {
    const std::int64_t budget = derive_activation_budget(cfg, opts.common, opts.budget);
    try {
      fraction = pipeline::microbatch_window_plan(cfg.shape, cfg.layout, strategy,
                                                  std::max<std::int64_t>(budget, 0), cfg.bytes)
                     .recomputed_fraction;
    } catch (const pipeline::InfeasibleBudgetError& ex) {
      err << ex.what() << "\n";
      return kExitInfeasible;
    }
  }

  std::optional<Rational> time;
  if (!opts.iter_time.empty()) time = rational_from_decimal(opts.iter_time);

  const std::int64_t b_total = iteration_batch(cfg.layout);
  const FlopsReport report =
      flops_report(cfg.shape, b_total, strategy, time, cfg.hardware, model, fraction);

  RecomputeStrategy full;
  full.kind = RecomputeKind::Full;
  const Rational predicted_speedup =
      Rational(hardware_flops(cfg.shape, b_total, full)) /
          Rational(report.hardware_flops_per_iter) -
      Rational(1);

  const double approx_ratio = to_double(hw_model_ratio_approx(cfg.shape));

  if (opts.common.format == "json") {
    nlohmann::json doc = to_json(report);
    doc["hw_model_ratio_approx"] = approx_ratio;  // 1 + s/6h
    doc["predicted_throughput_increase_vs_full_percent"] =
        percent_string(predicted_speedup);
    out << doc.dump(2) << "\n";
    return kExitOk;
  }
  if (opts.common.format == "csv") {
    out << "field,value\n"
        << "model_flops_per_iter," << report.model_flops_per_iter.str() << "\n"
        << "hardware_flops_per_iter," << report.hardware_flops_per_iter.str() << "\n"
        << "hw_model_ratio," << fixed(to_double(report.hw_model_ratio), 6) << "\n"
        << "hw_model_ratio_approx," << fixed(approx_ratio, 6) << "\n"
        << "predicted_throughput_increase_vs_full_percent,"
        << percent_string(predicted_speedup) << "\n";
    if (report.mfu) out << "mfu_percent," << percent_string(*report.mfu) << "\n";
    if (report.hfu) out << "hfu_percent," << percent_string(*report.hfu) << "\n";
    return kExitOk;
  }
  if (opts.common.format != "table") throw UsageError("unknown format " + opts.common.format);

  out << "flops report, strategy " << strategy.name() << ", b_total " << b_total << "\n";
  out << "  model flops/iter     " << sci(to_double(report.model_flops_per_iter)) << "  ("
      << report.model_flops_per_iter.str() << ")\n";
  out << "  hardware flops/iter  " << sci(to_double(report.hardware_flops_per_iter)) << "  ("
      << report.hardware_flops_per_iter.str() << ")\n";
  out << "  hardware/model       " << fixed(to_double(report.hw_model_ratio), 4)
      << "  (1 + s/6h approximation: " << fixed(approx_ratio, 4) << ")\n";
  out << "\n  throughput-increase   MFU     HFU\n";
  out << "  " << percent_string(predicted_speedup) << "%";
  out << "               " << (report.mfu ? percent_string(*report.mfu) + "%" : "-");
  out << "   " << (report.hfu ? percent_string(*report.hfu) + "%" : "-") << "\n";
  return kExitOk;
}

// ---- pipeline-sim ----

struct PipelineOptions {
  CommonOptions common;
  std::string dealloc = "on";
  std::int64_t budget = 0;
};

int run_pipeline_sim(const PipelineOptions& opts, std::ostream& out, std::ostream& err) {
  const TrainConfig cfg = opts.common.load();
  check_valid(cfg, err);
  const RecomputeStrategy strategy = opts.common.parse_strategy();
  if (opts.dealloc != "on" && opts.dealloc != "off") {
    throw UsageError("--dealloc must be on or off");
  }
  const bool dealloc = opts.dealloc == "on";

  pipeline::MemoryTimeline timeline;
  std::optional<pipeline::WindowPlan> window;
  if (strategy.microbatch_level) {
    const std::int64_t budget = derive_activation_budget(cfg, opts.common, opts.budget);
    try {
      window = pipeline::microbatch_window_plan(cfg.shape, cfg.layout, strategy,
                                                std::max<std::int64_t>(budget, 0), cfg.bytes);
    } catch (const pipeline::InfeasibleBudgetError& ex) {
      err << ex.what() << "\n";
      return kExitInfeasible;
    }
    timeline = pipeline::simulate_memory_with_modes(cfg.shape, cfg.layout, strategy, dealloc,
                                                    window->modes, cfg.bytes);
  } else {
    timeline = pipeline::simulate_memory(cfg.shape, cfg.layout, strategy, dealloc, cfg.bytes);
  }

  if (opts.common.format == "json") {
    nlohmann::json doc = pipeline::timeline_json(timeline);
    doc["strategy"] = strategy.name();
    doc["dealloc"] = dealloc;
    if (cfg.layout.interleave > 1) {
      doc["note"] = "interleaved layout simulated with the plain 1F1B schedule";
    }
    if (window) {
      nlohmann::json stages = nlohmann::json::array();
      for (const auto& stage : window->per_stage) {
        stages.push_back({{"fully_stored", stage.fully_stored},
                          {"checkpointed", stage.checkpointed}});
      }
      doc["window"] = {{"per_stage", stages},
                       {"recomputed_fraction", to_double(window->recomputed_fraction)},
                       {"min_feasible_budget", window->min_feasible_budget}};
    }
    out << doc.dump(2) << "\n";
    return kExitOk;
  }
  if (opts.common.format != "csv") throw UsageError("pipeline-sim formats: csv, json");
  out << pipeline::timeline_csv(timeline);
  return kExitOk;
}

// ---- plan ----

struct PlanOptions {
  CommonOptions common;
  std::string tensor_list = "1,2,4,8";
  std::string pipeline_list = "auto";
  std::string interleave_list = "1";
  std::string microbatch_list;
  std::string strategies = "none,selective,full,none+seq,selective+seq,full+seq";
  std::int64_t global_batch = 0;
  std::int64_t top = 10;
};

int run_plan(const PlanOptions& opts, std::ostream& out, std::ostream& err) {
  const TrainConfig cfg = opts.common.load();
  check_valid(cfg, err);
  check_devices(cfg);

  planner::SearchSpace space;
  space.tensor = parse_int_list(opts.tensor_list);
  if (opts.pipeline_list == "auto") {
    for (std::int64_t p = 1; p <= cfg.shape.layers; ++p) {
      if (cfg.shape.layers % p == 0) space.pipeline.push_back(p);
    }
  } else {
    space.pipeline = parse_int_list(opts.pipeline_list);
  }
  space.interleave = parse_int_list(opts.interleave_list);
  space.microbatch = opts.microbatch_list.empty()
                         ? std::vector<std::int64_t>{cfg.layout.microbatch}
                         : parse_int_list(opts.microbatch_list);
  std::stringstream ss(opts.strategies);
  std::string token;
  while (std::getline(ss, token, ',')) {
    if (token.empty()) continue;
    try {
      space.strategies.push_back(RecomputeStrategy::parse(token));
    } catch (const std::invalid_argument& ex) {
      throw UsageError(ex.what());
    }
  }
  space.global_batch = opts.global_batch > 0 ? opts.global_batch : iteration_batch(cfg.layout);

  const planner::PlanResult result =
      planner::enumerate_plans(cfg.shape, cfg.hardware, space, cfg.bytes,
                               opts.common.weight_bytes, opts.common.optimizer_bytes);

  const std::size_t limit =
      std::min<std::size_t>(result.candidates.size(), static_cast<std::size_t>(opts.top));

  if (opts.common.format == "json") {
    nlohmann::json doc = planner::to_json(result);
    doc["candidates"].erase(limit == 0 ? doc["candidates"].begin() : doc["candidates"].begin() + limit,
                            doc["candidates"].end());
    doc["shown"] = limit;
    doc["evaluated"] = result.candidates.size();
    out << doc.dump(2) << "\n";
  } else if (opts.common.format == "csv") {
    out << "rank,t,p,m,d,b,n_mb,strategy,peak_bytes,params_bytes,optimizer_bytes,"
           "hardware_flops,feasible,headroom_bytes\n";
    for (std::size_t i = 0; i < limit; ++i) {
      const auto& c = result.candidates[i];
      out << i + 1 << ',' << c.layout.tensor << ',' << c.layout.pipeline << ','
          << c.layout.interleave << ',' << c.layout.data_parallel << ',' << c.layout.microbatch
          << ',' << c.layout.microbatches_per_iter << ',' << c.strategy.name() << ','
          << c.peak_bytes << ',' << c.params_bytes << ',' << c.optimizer_bytes << ','
          << c.hardware_flops.str() << ',' << (c.feasible ? 1 : 0) << ',' << c.headroom << "\n";
    }
  } else if (opts.common.format == "table") {
    out << "plan search: " << result.candidates.size() << " candidates, global batch "
        << space.global_batch << "\n";
    if (!result.any_feasible) {
      out << "no feasible candidate; minimum shortfall " << gib_string(result.min_shortfall_bytes)
          << " GiB\n";
    }
    out << "  rank  t  p   m  d  b  n_mb  strategy            peak(GiB)  total(GiB)  headroom(GiB)"
           "  feasible  hw_flops\n";
    for (std::size_t i = 0; i < limit; ++i) {
      const auto& c = result.candidates[i];
      const std::int64_t total = c.peak_bytes + c.params_bytes + c.optimizer_bytes;
      char line[256];
      std::snprintf(line, sizeof(line),
                    "  %-4zu  %-2lld %-3lld %-2lld %-2lld %-2lld %-5lld %-19s %-10s %-11s %-14s %-9s %s\n",
                    i + 1, static_cast<long long>(c.layout.tensor),
                    static_cast<long long>(c.layout.pipeline),
                    static_cast<long long>(c.layout.interleave),
                    static_cast<long long>(c.layout.data_parallel),
                    static_cast<long long>(c.layout.microbatch),
                    static_cast<long long>(c.layout.microbatches_per_iter),
                    c.strategy.name().c_str(), gib_string(c.peak_bytes).c_str(),
                    gib_string(total).c_str(), gib_string(c.headroom).c_str(),
                    c.feasible ? "yes" : "no", sci(to_double(c.hardware_flops)).c_str());
      out << line;
    }
  } else {
    throw UsageError("unknown format " + opts.common.format);
  }
  return result.any_feasible ? kExitOk : kExitInfeasible;
}

// ---- verify ----

struct VerifyOptions {
  std::string format = "json";
};

int run_verify(const VerifyOptions& opts, std::ostream& out) {
  std::uint64_t seed = 42;
  if (const char* env = std::getenv("ACTPLAN_SEED"); env != nullptr && *env != '\0') {
    char* end = nullptr;
    seed = std::strtoull(env, &end, 10);
    if (end == nullptr || *end != '\0') throw UsageError("ACTPLAN_SEED must be an integer");
  }
  const seqpar::VerifyReport report = seqpar::run_verification(seed);
  if (opts.format == "json") {
    out << seqpar::to_json(report).dump(2) << "\n";
  } else if (opts.format == "table") {
    out << "verification, seed " << report.seed << "\n";
    for (const auto& suite : report.suites) {
      char line[192];
      std::snprintf(line, sizeof(line), "  %-28s %5d cases  %2d failures  max_abs %.3e  %s\n",
                    suite.name.c_str(), suite.cases, suite.failures, suite.max_abs_err,
                    suite.passed() ? "pass" : "FAIL");
      out << line;
    }
    out << (report.all_passed() ? "all suites passed\n" : "FAILURES present\n");
  } else {
    throw UsageError("verify formats: json, table");
  }
  return report.all_passed() ? kExitOk : kExitValidation;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"activation memory, FLOPs, and parallel-layout planning for transformer training"};
  app.require_subcommand(1);

  MemoryOptions memory_opts;
  auto* memory_cmd = app.add_subcommand("memory", "activation/parameter memory report");
  memory_opts.common.attach_config_flags(*memory_cmd);
  memory_cmd->add_option("--strategy", memory_opts.common.strategy,
                         "none|full|selective with optional +seq, +mblevel");
  memory_opts.common.attach_format_flag(*memory_cmd);
  memory_opts.common.attach_byte_flags(*memory_cmd);

  FlopsOptions flops_opts;
  flops_opts.common.strategy = "selective+seq";
  auto* flops_cmd = app.add_subcommand("flops", "model/hardware FLOPs, MFU and HFU");
  flops_opts.common.attach_config_flags(*flops_cmd);
  flops_cmd->add_option("--strategy", flops_opts.common.strategy, "recompute strategy");
  flops_cmd->add_option("--iter-time", flops_opts.iter_time, "measured iteration time, seconds");
  flops_cmd->add_option("--flops-selective", flops_opts.selective_model,
                        "selective-recompute FLOPs model: equation|text");
  flops_cmd->add_option("--budget", flops_opts.budget,
                        "activation budget in bytes for +mblevel strategies");
  flops_opts.common.attach_format_flag(*flops_cmd);
  flops_opts.common.attach_byte_flags(*flops_cmd);

  PipelineOptions pipe_opts;
  pipe_opts.common.strategy = "none+seq";
  pipe_opts.common.format = "csv";
  auto* pipe_cmd = app.add_subcommand("pipeline-sim", "1F1B per-rank activation memory timeline");
  pipe_opts.common.attach_config_flags(*pipe_cmd);
  pipe_cmd->add_option("--strategy", pipe_opts.common.strategy, "recompute strategy");
  pipe_cmd->add_option("--dealloc", pipe_opts.dealloc,
                       "deallocate stage-output tensors after forward: on|off");
  pipe_cmd->add_option("--budget", pipe_opts.budget,
                       "activation budget in bytes for +mblevel strategies");
  pipe_opts.common.attach_format_flag(*pipe_cmd, "csv|json");
  pipe_opts.common.attach_byte_flags(*pipe_cmd);

  PlanOptions plan_opts;
  auto* plan_cmd = app.add_subcommand("plan", "search layouts/strategies that fit device memory");
  plan_opts.common.attach_config_flags(*plan_cmd);
  plan_cmd->add_option("--t", plan_opts.tensor_list, "tensor-parallel sizes, comma list");
  plan_cmd->add_option("--p", plan_opts.pipeline_list,
                       "pipeline sizes, comma list or 'auto' (divisors of L)");
  plan_cmd->add_option("--m", plan_opts.interleave_list, "interleave factors, comma list");
  plan_cmd->add_option("--b", plan_opts.microbatch_list, "microbatch sizes, comma list");
  plan_cmd->add_option("--strategies", plan_opts.strategies, "strategy names, comma list");
  plan_cmd->add_option("--global-batch", plan_opts.global_batch,
                       "samples per iteration (default: config's b*n_mb*d)");
  plan_cmd->add_option("--top", plan_opts.top, "show the best N candidates");
  plan_opts.common.attach_format_flag(*plan_cmd);
  plan_opts.common.attach_byte_flags(*plan_cmd);

  VerifyOptions verify_opts;
  auto* verify_cmd = app.add_subcommand("verify", "run the simulated-rank property suites");
  verify_cmd->add_option("--format", verify_opts.format, "output format: json|table");

  std::vector<const char*> argv;
  argv.push_back("actplan");
  for (const std::string& arg : args) argv.push_back(arg.c_str());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& ex) {
    err << ex.what() << "\n\n" << app.help();
    return kExitUsage;
  }

  try {
    if (memory_cmd->parsed()) return run_memory(memory_opts, out, err);
    if (flops_cmd->parsed()) return run_flops(flops_opts, out, err);
    if (pipe_cmd->parsed()) return run_pipeline_sim(pipe_opts, out, err);
    if (plan_cmd->parsed()) return run_plan(plan_opts, out, err);
    if (verify_cmd->parsed()) return run_verify(verify_opts, out);
  } catch (const UsageError& ex) {
    err << "error: " << ex.what() << "\n";
    return kExitUsage;
  } catch (const ValidationError& ex) {
    err << "error: " << ex.what() << "\n";
    return kExitValidation;
  } catch (const ConfigError& ex) {
    err << "config error: " << ex.what() << "\n";
    return kExitValidation;
  } catch (const std::invalid_argument& ex) {
    err << "error: " << ex.what() << "\n";
    return kExitValidation;
  }
  err << "no subcommand given\n" << app.help();
  return kExitUsage;
}

}  // namespace actplan::cli
