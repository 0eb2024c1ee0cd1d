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
#include <stdexcept>
#include <string>

#include <Eigen/Core>

namespace gemmsim {

using Index = Eigen::Index;

// Dense row-major matrix aliases used across the simulator. Quantized
// operands are unsigned 8-bit, accumulators are signed 32-bit.
using MatU8  = Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatI32 = Eigen::Matrix<std::int32_t, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using VecI32 = Eigen::Matrix<std::int32_t, Eigen::Dynamic, 1>;

using MapU8        = Eigen::Map<const MatU8>;
using MutableMapU8 = Eigen::Map<MatU8>;

// Base for all simulator-specific failures.
struct SimError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// An operand or payload does not fit a configured on-chip buffer.
struct CapacityError : SimError {
  using SimError::SimError;
};

// Every live process is blocked on a channel and none can make progress.
struct DeadlockError : SimError {
  using SimError::SimError;
};

}  // namespace gemmsim
