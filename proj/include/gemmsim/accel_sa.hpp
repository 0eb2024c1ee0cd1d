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

#include "gemmsim/accel.hpp"

namespace gemmsim {

// Systolic-array accelerator: a scheduler fills rows+cols skewed data queues
// while an RxC output-stationary MAC grid streams inputs rightward and
// weights downward, one shift per cycle; a single PPU drains finished tiles
// column by column.
class SaAccel : public Accelerator {
 public:
  using Accelerator::Accelerator;

  DesignKind kind() const override { return DesignKind::Sa; }
  AccelPorts attach(Engine& engine) override;
};

// Unstalled pass latency from first operand injection to accumulator
// completion: skew fill + reduction depth + propagation + completion latch.
constexpr std::uint64_t sa_pass_latency(Index k, int rows, int cols) {
  return static_cast<std::uint64_t>(k) + static_cast<std::uint64_t>(rows) +
         static_cast<std::uint64_t>(cols) - 1;
}

}  // namespace gemmsim
