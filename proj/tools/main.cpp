/**
 * Copyright (c) gemmsim Contributors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <cstdio>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "gemmsim/cost.hpp"
#include "gemmsim/report.hpp"
#include "gemmsim/runner.hpp"

namespace {

using nlohmann::json;
using namespace gemmsim;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitValidation = 2;
constexpr int kExitMismatch = 3;

struct CommonArgs {
  std::string model_path;
  std::string weights_path;
  std::string input_path;
  std::uint32_t seed = 0;
  std::string config_path;
  std::string out_path;
  std::string format = "json";
};

AccelConfig load_config_or_default(const std::string& path) {
  if (path.empty()) return AccelConfig{};
  return load_accel_config(path);
}

QuantTensor make_input(const ModelSpec& model, const CommonArgs& args) {
  QuantTensor in;
  in.shape = model.input_shape;
  in.scale = model.input.scale;
  in.zero_point = model.input.zero_point;
  const auto need = static_cast<std::size_t>(in.numel());
  if (!args.input_path.empty()) {
    std::ifstream f(args.input_path, std::ios::binary);
    if (!f) throw SimError("cannot open input file '" + args.input_path + "'");
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(f)),
                                    std::istreambuf_iterator<char>());
    if (bytes.size() != need)
      throw SimError("input file '" + args.input_path + "' holds " +
                     std::to_string(bytes.size()) + " bytes, model needs " +
                     std::to_string(need));
    in.data = std::move(bytes);
  } else {
    std::mt19937 rng(args.seed);
    in.data.resize(need);
    for (auto& b : in.data) b = static_cast<std::uint8_t>(rng() & 0xff);
  }
  return in;
}

void emit(const CommonArgs& args, const std::string& text) {
  if (args.out_path.empty())
    std::cout << text;
  else
    write_text_file(args.out_path, text);
}

int cmd_run(const CommonArgs& args, const std::string& backend) {
  const auto model = load_model(args.model_path, args.weights_path);
  const auto config = load_config_or_default(args.config_path);
  const auto input = make_input(model, args);
  auto [output, report] =
      run_inference(model, input, design_kind_from_string(backend), config);
  (void)output;
  json j = inference_report_to_json(report);
  j["command"] = "run";
  j["seed"] = args.seed;
  emit(args, j.dump(2) + "\n");
  return kExitOk;
}

int cmd_sweep(const CommonArgs& args, const std::string& backend,
              const std::vector<int>& sizes) {
  if (backend != "sa")
    throw std::invalid_argument("sweep explores systolic array sizes; --backend must be sa");
  const auto model = load_model(args.model_path, args.weights_path);
  const auto base = load_config_or_default(args.config_path);
  const auto input = make_input(model, args);

  struct Row {
    int size;
    InferenceReport report;
    double mac_util;
  };
  std::vector<Row> rows;
  for (int size : sizes) {
    if (size < 1) throw std::invalid_argument("invalid array size " + std::to_string(size));
    AccelConfig cfg = base;
    cfg.kind = DesignKind::Sa;
    cfg.sa.rows = cfg.sa.cols = size;
    auto [output, report] = run_inference(model, input, DesignKind::Sa, cfg);
    (void)output;
    const double peak = static_cast<double>(size) * size *
                        static_cast<double>(report.accel.total_pass_cycles());
    const double util =
        peak > 0 ? static_cast<double>(report.accel.total_mac_ops()) / peak : 0.0;
    rows.push_back(Row{size, std::move(report), util});
  }

  if (args.format == "csv") {
    std::ostringstream csv;
    csv << "size,total_cycles,conv_cycles,non_conv_cycles,mac_ops,pass_cycles,"
           "mac_utilization,producer_stall_cycles,output_digest\n";
    for (const auto& r : rows) {
      csv << r.size << ',' << r.report.total_cycles << ',' << r.report.conv_cycles << ','
          << r.report.non_conv_cycles << ',' << r.report.accel.total_mac_ops() << ','
          << r.report.accel.total_pass_cycles() << ',' << r.mac_util << ','
          << r.report.counters.producer_stall_cycles << ',' << r.report.output_digest
          << '\n';
    }
    emit(args, csv.str());
  } else {
    json out = json::array();
    for (const auto& r : rows) {
      json jr = inference_report_to_json(r.report);
      jr["size"] = r.size;
      jr["mac_utilization"] = r.mac_util;
      out.push_back(std::move(jr));
    }
    json wrapper{{"command", "sweep"}, {"seed", args.seed}, {"rows", out}};
    emit(args, wrapper.dump(2) + "\n");
  }

  for (std::size_t i = 1; i < rows.size(); ++i)
    if (rows[i].report.output_digest != rows[0].report.output_digest) return kExitMismatch;
  return kExitOk;
}

int cmd_compare(const CommonArgs& args, const std::string& config_a,
                const std::string& config_b) {
  const auto model = load_model(args.model_path, args.weights_path);
  const auto input = make_input(model, args);
  const auto cfg_a = load_accel_config(config_a);
  const auto cfg_b = load_accel_config(config_b);
  auto [out_a, rep_a] = run_inference(model, input, cfg_a.kind, cfg_a);
  auto [out_b, rep_b] = run_inference(model, input, cfg_b.kind, cfg_b);
  (void)out_a;
  (void)out_b;

  const bool match = rep_a.output_digest == rep_b.output_digest;
  auto ratio = [](std::uint64_t a, std::uint64_t b) -> json {
    if (a == 0) return nullptr;
    return static_cast<double>(b) / static_cast<double>(a);
  };
  json j{
      {"command", "compare"},
      {"seed", args.seed},
      {"digest_match", match},
      {"a", inference_report_to_json(rep_a)},
      {"b", inference_report_to_json(rep_b)},
      {"deltas",
       {{"total_cycles",
         static_cast<std::int64_t>(rep_b.total_cycles) -
             static_cast<std::int64_t>(rep_a.total_cycles)},
        {"dma_bytes_out_ratio",
         ratio(rep_a.counters.dma_bytes_out, rep_b.counters.dma_bytes_out)},
        {"dma_bytes_in_ratio",
         ratio(rep_a.counters.dma_bytes_in, rep_b.counters.dma_bytes_in)},
        {"global_weight_buffer_reads_ratio",
         ratio(rep_a.counters.global_weight_buffer_reads,
               rep_b.counters.global_weight_buffer_reads)}}},
  };
  emit(args, j.dump(2) + "\n");
  if (!match) {
    std::cerr << "functional mismatch: output digests differ\n";
    return kExitMismatch;
  }
  return kExitOk;
}

int cmd_cost(const CommonArgs& args, const CostModelParams& params) {
  const double mixed = et_mixed_loop(params);
  const double synth_only = et_synth_only(params);
  const double fullsim_only = et_fullsim_only(params);
  auto safe_ratio = [](double num, double den) -> json {
    if (den == 0.0) return nullptr;
    return num / den;
  };
  json j{
      {"command", "cost"},
      {"params",
       {{"num_sim", params.num_sim},
        {"num_synth", params.num_synth},
        {"compile_time", params.compile_time},
        {"sim_infer_time", params.sim_infer_time},
        {"synth_time", params.synth_time},
        {"hw_infer_time", params.hw_infer_time}}},
      {"et_mixed_loop", mixed},
      {"et_synth_only", synth_only},
      {"et_fullsim_only", fullsim_only},
      {"synth_vs_sim_compile_ratio", safe_ratio(params.synth_time, params.compile_time)},
      {"synth_only_vs_mixed_ratio", safe_ratio(synth_only, mixed)},
      {"fullsim_vs_mixed_ratio", safe_ratio(fullsim_only, mixed)},
  };
  emit(args, j.dump(2) + "\n");
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"transaction-level simulator for int8 GEMM accelerators"};
  app.require_subcommand(1);

  CommonArgs args;
  std::string backend = "cpu";
  std::vector<int> sizes{4, 8, 16};
  std::string config_a, config_b;
  CostModelParams params;

  auto add_common = [&](CLI::App* cmd, bool needs_model) {
    if (needs_model) {
      cmd->add_option("--model", args.model_path, "model spec (JSON)")->required();
      cmd->add_option("--weights", args.weights_path, "raw weights file")->required();
      cmd->add_option("--input", args.input_path, "raw input tensor bytes");
      cmd->add_option("--seed", args.seed, "seed for generated input");
      cmd->add_option("--config", args.config_path, "accelerator config (JSON)");
    }
    cmd->add_option("--out", args.out_path, "write the report here instead of stdout");
    cmd->add_option("--format", args.format, "json|csv")
        ->check(CLI::IsMember({"json", "csv"}));
  };

  CLI::App* run = app.add_subcommand("run", "run one inference and report counters");
  add_common(run, true);
  run->add_option("--backend", backend, "cpu|vm|sa")
      ->check(CLI::IsMember({"cpu", "vm", "sa"}));

  CLI::App* sweep = app.add_subcommand("sweep", "compare systolic array sizes");
  add_common(sweep, true);
  sweep->add_option("--backend", backend, "must be sa")->default_val("sa");
  sweep->add_option("--sizes", sizes, "array sizes to sweep")->delimiter(',');

  CLI::App* compare = app.add_subcommand("compare", "diff two accelerator configs");
  add_common(compare, true);
  compare->add_option("--config-a", config_a, "first config")->required();
  compare->add_option("--config-b", config_b, "second config")->required();

  CLI::App* cost = app.add_subcommand("cost", "development-time estimates");
  add_common(cost, false);
  cost->add_option("--num-sim", params.num_sim, "simulated design iterations")->required();
  cost->add_option("--num-synth", params.num_synth, "synthesis passes")->required();
  cost->add_option("--compile-time", params.compile_time, "seconds")->required();
  cost->add_option("--sim-infer-time", params.sim_infer_time, "seconds")->required();
  cost->add_option("--synth-time", params.synth_time, "seconds")->required();
  cost->add_option("--hw-infer-time", params.hw_infer_time, "seconds")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << "\n";
    return kExitUsage;
  }

  try {
    if (run->parsed()) return cmd_run(args, backend);
    if (sweep->parsed()) {
      if (!sweep->count("--format")) args.format = "csv";
      return cmd_sweep(args, backend, sizes);
    }
    if (compare->parsed()) return cmd_compare(args, config_a, config_b);
    if (cost->parsed()) return cmd_cost(args, params);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  }
  return kExitUsage;
}
