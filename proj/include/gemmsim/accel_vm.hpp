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
#include <utility>
#include <vector>

#include "gemmsim/accel.hpp"

namespace gemmsim {

// Vector-MAC accelerator: Input Handler routing into banked buffers, a
// Scheduler broadcasting native weight strips, four GEMM units producing 4x4
// output-stationary tiles through 4-wide MAC groups and an adder tree,
// per-unit PPUs, and an Output Crossbar restoring row-major tile order.
class VmAccel : public Accelerator {
 public:
  using Accelerator::Accelerator;

  DesignKind kind() const override { return DesignKind::Vm; }
  AccelPorts attach(Engine& engine) override;
};

// One broadcast step: a native-width weight strip paired with every output
// row strip. Strips follow plan-tile order with K ascending inside each
// N-range.
struct VmScheduleEntry {
  Index k0 = 0, k1 = 0;
  Index n_strip = 0;  // output tile column index
  bool last_k = true;
  std::vector<Index> row_strips;  // every pairing computed under this strip
};

// Pure form of the scheduler's broadcast order: each weight strip appears
// once and pairs against all row strips.
std::vector<VmScheduleEntry> vm_broadcast_schedule(const TilePlan& plan,
                                                   const TaskShape& shape);

// One GEMM-unit tile: inputs (4 x k) against weights (k x 4), exact integer
// accumulation. Returns the 4x4 tile and the unstalled cycle cost
// ceil(k / macs_per_output) + adder tree latency.
std::pair<MatI32, std::uint64_t> vm_unit_tile_compute(const MatU8& input_rows,
                                                      std::int32_t lhs_zp,
                                                      const MatU8& weight_cols,
                                                      std::int32_t rhs_zp,
                                                      const VmConfig& config);

struct VmTaggedTile {
  Index row_strip = 0;
  Index col_strip = 0;
  std::vector<std::uint8_t> bytes;
};

// Reorders tagged tiles into row-major tile order regardless of arrival
// order. Throws on duplicate or missing tags.
std::vector<std::uint8_t> crossbar_collect(std::vector<VmTaggedTile> tiles,
                                           Index row_strips, Index col_strips);

}  // namespace gemmsim
