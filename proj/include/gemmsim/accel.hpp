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
#include <memory>
#include <vector>

#include "gemmsim/packing.hpp"
#include "gemmsim/sim.hpp"

namespace gemmsim {

// One task's result stream, in the design's output tile order. Bytes are
// uint8 results when the PPU is enabled, little-endian int32 accumulators
// when it is bypassed.
struct TaskOutput {
  std::size_t task_index = 0;
  std::vector<std::uint8_t> stream;
};

struct AccelPorts {
  std::shared_ptr<FifoChannel<PackedBuffer>> in;
  std::shared_ptr<FifoChannel<TaskOutput>> out;
};

// One array pass (SA) or one 4x4 unit tile (VM): cycles from first operand
// injection to accumulator completion, inclusive on both ends.
struct TilePassRecord {
  std::uint64_t start_cycle = 0;
  std::uint64_t complete_cycle = 0;
  Index k_len = 0;
  std::uint64_t mac_ops = 0;

  std::uint64_t latency() const { return complete_cycle - start_cycle + 1; }
};

struct AccelStats {
  std::vector<TilePassRecord> passes;
  std::vector<std::uint64_t> bank_writes;  // routed bus words per bank
  std::uint64_t tasks_completed = 0;
  std::uint64_t operands_dequeued = 0;  // SA: words pulled from the data queues

  std::uint64_t total_pass_cycles() const {
    std::uint64_t t = 0;
    for (const auto& p : passes) t += p.latency();
    return t;
  }
  std::uint64_t total_mac_ops() const {
    std::uint64_t t = 0;
    for (const auto& p : passes) t += p.mac_ops;
    return t;
  }
};

// Transaction-level accelerator model. attach() wires the design's processes
// onto an engine and returns the DMA-facing ports; the driver pushes each
// task's config, input and weight buffers (in that order) into `in` and
// receives one TaskOutput per task from `out`. Closing `in` shuts the model
// down after pending work drains.
class Accelerator {
 public:
  explicit Accelerator(AccelConfig config)
      : config_(std::move(config)), stats_(std::make_shared<AccelStats>()) {
    config_.validate();
  }
  virtual ~Accelerator() = default;

  const AccelConfig& config() const { return config_; }
  const AccelStats& stats() const { return *stats_; }
  virtual DesignKind kind() const = 0;
  virtual AccelPorts attach(Engine& engine) = 0;

 protected:
  AccelConfig config_;
  // Shared with the model's coroutines, which may outlive the accelerator
  // object inside a still-allocated engine.
  std::shared_ptr<AccelStats> stats_;
};

std::unique_ptr<Accelerator> make_accelerator(const AccelConfig& config);

}  // namespace gemmsim
