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

#include <string>
#include <vector>

#include "gemmsim/accel.hpp"
#include "gemmsim/model.hpp"

namespace gemmsim {

struct LayerReport {
  std::string name;
  std::string kind;
  bool conv_class = false;  // conv2d / fully_connected (the offloadable class)
  std::uint64_t cycles = 0;
};

struct InferenceReport {
  std::string model;
  std::string backend;
  std::vector<LayerReport> layers;
  std::uint64_t conv_cycles = 0;
  std::uint64_t non_conv_cycles = 0;
  std::uint64_t total_cycles = 0;
  CycleCounters counters;
  AccelStats accel;
  std::string output_digest;
};

// End-to-end inference of a ModelSpec. conv2d and fully_connected layers are
// lowered to GEMM and dispatched to the chosen accelerator (vm/sa); every
// other layer, including depthwise convolutions, runs on the modeled CPU.
// Output bytes are identical across the cpu, vm and sa backends.
std::pair<QuantTensor, InferenceReport> run_inference(const ModelSpec& model,
                                                      const QuantTensor& input,
                                                      DesignKind backend,
                                                      const AccelConfig& config);

// Exact integer reference for a single layer (the path every layer takes on
// the cpu backend). `residual` supplies the second operand of add layers.
QuantTensor cpu_reference_layer(const ModelSpec& model, std::size_t layer_index,
                                const QuantTensor& input, const QuantTensor* residual);

// uint8 clamp bounds implied by an activation on a given output quantization.
std::pair<std::int32_t, std::int32_t> activation_range(const std::string& activation,
                                                       const QuantInfo& out);

// FNV-1a 64-bit digest, printed as 16 hex digits.
std::string digest_bytes(const std::vector<std::uint8_t>& bytes);

}  // namespace gemmsim
