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

#include "gemmsim/config.hpp"

#include <fstream>
#include <stdexcept>

#include <json.hpp>

namespace gemmsim {

using nlohmann::json;

std::string to_string(DesignKind kind) {
  switch (kind) {
    case DesignKind::Cpu: return "cpu";
    case DesignKind::Vm: return "vm";
    case DesignKind::Sa: return "sa";
  }
  return "?";
}

DesignKind design_kind_from_string(const std::string& s) {
  if (s == "cpu") return DesignKind::Cpu;
  if (s == "vm") return DesignKind::Vm;
  if (s == "sa") return DesignKind::Sa;
  throw std::invalid_argument("unknown design kind '" + s + "'");
}

void AccelConfig::validate() const {
  if (vm.num_gemm_units < 1 || vm.macs_per_output < 1 || vm.num_banks < 1)
    throw std::invalid_argument("vm: unit/mac/bank counts must be positive");
  if (vm.tile_dim != 4)
    throw std::invalid_argument("vm: tile_dim is fixed at 4 for this design");
  if (vm.global_weight_buffer_bytes < 1 || vm.local_input_buffer_bytes < 1 ||
      vm.local_weight_tile_bytes < 1)
    throw std::invalid_argument("vm: buffer capacities must be positive");
  if (vm.adder_tree_latency_cycles < 0 || vm.ppu_cycles_per_tile < 0)
    throw std::invalid_argument("vm: latencies must be non-negative");
  if (sa.rows < 1 || sa.cols < 1 || sa.rows != sa.cols)
    throw std::invalid_argument("sa: array must be square and positive");
  if (sa.queue_depth < 1)
    throw std::invalid_argument("sa: queue_depth must be >= 1");
  if (sa.global_input_buffer_bytes < 1 || sa.global_weight_buffer_bytes < 1)
    throw std::invalid_argument("sa: buffer capacities must be positive");
  if (bus.width_bytes < 1 || bus.num_links < 1 || bus.setup_cycles < 0)
    throw std::invalid_argument("bus: invalid parameters");
  if (cpu_bytes_per_cycle < 1)
    throw std::invalid_argument("cpu_bytes_per_cycle must be >= 1");
  if (num_input_buffers < 1)
    throw std::invalid_argument("num_input_buffers must be >= 1");
}

namespace {

void from_json_vm(const json& j, VmConfig& c) {
  c.num_gemm_units = j.value("num_gemm_units", c.num_gemm_units);
  c.macs_per_output = j.value("macs_per_output", c.macs_per_output);
  c.tile_dim = j.value("tile_dim", c.tile_dim);
  c.global_weight_buffer_bytes = j.value("global_weight_buffer_bytes", c.global_weight_buffer_bytes);
  c.local_input_buffer_bytes = j.value("local_input_buffer_bytes", c.local_input_buffer_bytes);
  c.local_weight_tile_bytes = j.value("local_weight_tile_bytes", c.local_weight_tile_bytes);
  c.num_banks = j.value("num_banks", c.num_banks);
  c.adder_tree_latency_cycles = j.value("adder_tree_latency_cycles", c.adder_tree_latency_cycles);
  c.ppu_cycles_per_tile = j.value("ppu_cycles_per_tile", c.ppu_cycles_per_tile);
  c.ppu_enabled = j.value("ppu_enabled", c.ppu_enabled);
  c.broadcast_enabled = j.value("broadcast_enabled", c.broadcast_enabled);
}

void from_json_sa(const json& j, SaConfig& c) {
  c.rows = j.value("rows", c.rows);
  c.cols = j.value("cols", c.cols);
  c.queue_depth = j.value("queue_depth", c.queue_depth);
  c.global_input_buffer_bytes = j.value("global_input_buffer_bytes", c.global_input_buffer_bytes);
  c.global_weight_buffer_bytes = j.value("global_weight_buffer_bytes", c.global_weight_buffer_bytes);
  c.ppu_cycles_per_column = j.value("ppu_cycles_per_column", c.ppu_cycles_per_column);
  c.ppu_enabled = j.value("ppu_enabled", c.ppu_enabled);
}

void from_json_bus(const json& j, BusConfig& c) {
  c.width_bytes = j.value("width_bytes", c.width_bytes);
  c.num_links = j.value("num_links", c.num_links);
  c.setup_cycles = j.value("setup_cycles", c.setup_cycles);
}

json to_json(const AccelConfig& c) {
  return json{
      {"kind", to_string(c.kind)},
      {"cpu_bytes_per_cycle", c.cpu_bytes_per_cycle},
      {"num_input_buffers", c.num_input_buffers},
      {"bus",
       {{"width_bytes", c.bus.width_bytes},
        {"num_links", c.bus.num_links},
        {"setup_cycles", c.bus.setup_cycles}}},
      {"vm",
       {{"num_gemm_units", c.vm.num_gemm_units},
        {"macs_per_output", c.vm.macs_per_output},
        {"tile_dim", c.vm.tile_dim},
        {"global_weight_buffer_bytes", c.vm.global_weight_buffer_bytes},
        {"local_input_buffer_bytes", c.vm.local_input_buffer_bytes},
        {"local_weight_tile_bytes", c.vm.local_weight_tile_bytes},
        {"num_banks", c.vm.num_banks},
        {"adder_tree_latency_cycles", c.vm.adder_tree_latency_cycles},
        {"ppu_cycles_per_tile", c.vm.ppu_cycles_per_tile},
        {"ppu_enabled", c.vm.ppu_enabled},
        {"broadcast_enabled", c.vm.broadcast_enabled}}},
      {"sa",
       {{"rows", c.sa.rows},
        {"cols", c.sa.cols},
        {"queue_depth", c.sa.queue_depth},
        {"global_input_buffer_bytes", c.sa.global_input_buffer_bytes},
        {"global_weight_buffer_bytes", c.sa.global_weight_buffer_bytes},
        {"ppu_cycles_per_column", c.sa.ppu_cycles_per_column},
        {"ppu_enabled", c.sa.ppu_enabled}}},
  };
}

}  // namespace

AccelConfig accel_config_from_json(const std::string& text) {
  json j = json::parse(text);
  AccelConfig c;
  if (j.contains("kind")) c.kind = design_kind_from_string(j.at("kind").get<std::string>());
  c.cpu_bytes_per_cycle = j.value("cpu_bytes_per_cycle", c.cpu_bytes_per_cycle);
  c.num_input_buffers = j.value("num_input_buffers", c.num_input_buffers);
  if (j.contains("vm")) from_json_vm(j.at("vm"), c.vm);
  if (j.contains("sa")) from_json_sa(j.at("sa"), c.sa);
  if (j.contains("bus")) from_json_bus(j.at("bus"), c.bus);
  c.validate();
  return c;
}

std::string accel_config_to_json(const AccelConfig& config) {
  return to_json(config).dump(2) + "\n";
}

AccelConfig load_accel_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw SimError("cannot open config file '" + path + "'");
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  try {
    return accel_config_from_json(text);
  } catch (const json::exception& e) {
    throw SimError("config '" + path + "': " + e.what());
  }
}

void save_accel_config(const AccelConfig& config, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw SimError("cannot write config file '" + path + "'");
  out << accel_config_to_json(config);
}

}  // namespace gemmsim
