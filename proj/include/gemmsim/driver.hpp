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
#include <vector>

#include "gemmsim/accel.hpp"
#include "gemmsim/packing.hpp"

namespace gemmsim {

struct CycleReport {
  std::uint64_t start_cycle = 0;
  std::uint64_t end_cycle = 0;
  std::uint64_t elapsed_cycles = 0;
  CycleCounters counters;  // delta over this dispatch
  AccelStats accel;
};

enum class DispatchMode { Pipelined, Serial };

struct DispatchResult {
  std::vector<QuantTensor> outputs;
  CycleReport report;
};

// Runs a batch of GEMM tasks on an accelerator model. Pipelined mode overlaps
// CPU packing/unpacking with accelerator compute of neighboring tasks (the
// CPU itself is a serial resource); serial mode finishes each task before
// starting the next. Outputs are bit-exact in either mode.
DispatchResult dispatch(const std::vector<GemmTask>& tasks, Accelerator& accel,
                        Engine& engine, DispatchMode mode = DispatchMode::Pipelined);

// a - b, fieldwise (component cycles subtract per key).
CycleCounters counters_delta(const CycleCounters& a, const CycleCounters& b);

// Convolution lowering geometry. Padding positions follow the usual
// convention: "same" keeps out = ceil(in / stride), "valid" uses no padding.
struct ConvGeom {
  Index kernel_h = 1, kernel_w = 1;
  Index stride_h = 1, stride_w = 1;
  Index pad_top = 0, pad_left = 0;
  Index out_h = 0, out_w = 0;
};

ConvGeom conv_geometry(Index in_h, Index in_w, Index kernel_h, Index kernel_w,
                       Index stride_h, Index stride_w, bool same_padding);

// Unrolls receptive fields of an NHWC input into patch-matrix rows: row r
// holds the flattened (kh, kw, C) window of output position r, padded lanes
// carrying the input zero point. GEMM of the result with flattened filters
// equals direct convolution.
QuantTensor im2col(const QuantTensor& input, const ConvGeom& g);

}  // namespace gemmsim
