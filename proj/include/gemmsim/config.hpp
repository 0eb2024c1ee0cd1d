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

#pragma once

#include <cstdint>
#include <string>

#include "gemmsim/sim.hpp"

namespace gemmsim {

enum class DesignKind { Cpu, Vm, Sa };

std::string to_string(DesignKind kind);
DesignKind design_kind_from_string(const std::string& s);

// Vector-MAC design: four SIMD-style GEMM units, each producing 4x4 output
// tiles through groups of 4 MACs reduced by an adder tree.
struct VmConfig {
  int num_gemm_units = 4;
  int macs_per_output = 4;
  int tile_dim = 4;  // fixed for this design
  std::uint64_t global_weight_buffer_bytes = 64 * 1024;
  std::uint64_t local_input_buffer_bytes = 16 * 1024;
  std::uint64_t local_weight_tile_bytes = 4 * 1024;
  int num_banks = 4;
  int adder_tree_latency_cycles = 2;
  int ppu_cycles_per_tile = 4;
  bool ppu_enabled = true;
  bool broadcast_enabled = true;
};

// Systolic-array design: an RxC output-stationary MAC grid fed from skewed
// row/column data queues, drained through a single PPU.
struct SaConfig {
  int rows = 16;
  int cols = 16;
  int queue_depth = 8;
  std::uint64_t global_input_buffer_bytes = 64 * 1024;
  std::uint64_t global_weight_buffer_bytes = 64 * 1024;
  int ppu_cycles_per_column = 1;
  bool ppu_enabled = true;

  int num_queues() const { return rows + cols; }
};

struct AccelConfig {
  DesignKind kind = DesignKind::Vm;
  VmConfig vm;
  SaConfig sa;
  BusConfig bus;
  // Modeled host CPU pack/unpack throughput (bytes per cycle).
  int cpu_bytes_per_cycle = 4;
  // Input rows are partitioned across this many memory-mapped buffers.
  int num_input_buffers = 2;

  void validate() const;
};

AccelConfig load_accel_config(const std::string& path);
void save_accel_config(const AccelConfig& config, const std::string& path);

std::string accel_config_to_json(const AccelConfig& config);
AccelConfig accel_config_from_json(const std::string& text);

}  // namespace gemmsim
