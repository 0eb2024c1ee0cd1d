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

#include "gemmsim/types.hpp"

namespace gemmsim {

// Affine-quantized uint8 tensor: real value = scale * (q - zero_point).
// data is row-major over `shape`; rank 2 tensors map directly onto MatU8.
struct QuantTensor {
  std::vector<Index> shape;
  std::vector<std::uint8_t> data;
  double scale = 1.0;
  std::int32_t zero_point = 0;

  Index numel() const {
    Index n = 1;
    for (Index d : shape) n *= d;
    return n;
  }
  Index rows() const { return shape.at(0); }
  Index cols() const { return shape.at(1); }

  // 2-D view; valid only for rank-2 tensors.
  MapU8 matrix() const { return MapU8(data.data(), rows(), cols()); }
  MutableMapU8 matrix() { return MutableMapU8(data.data(), rows(), cols()); }

  // Flat offset for NHWC indexing (rank-4 tensors).
  Index offset(Index n, Index h, Index w, Index c) const {
    return ((n * shape[1] + h) * shape[2] + w) * shape[3] + c;
  }

  // Throws std::invalid_argument if data length, scale or zero_point are
  // inconsistent with the declared shape.
  void validate() const;
};

QuantTensor make_quant_tensor(std::vector<Index> shape, std::vector<std::uint8_t> data,
                              double scale, std::int32_t zero_point);

// Tensor of the given shape filled with its zero point (real value 0).
QuantTensor zero_like(std::vector<Index> shape, double scale, std::int32_t zero_point);

// 32-bit signed accumulator matrix. Entries are exact integer dot products of
// zero-point-adjusted operands; no overflow for K <= 2^16.
using AccMatrix = MatI32;

// Post-processing parameters for requantizing accumulators back to uint8.
// multiplier is a Q0.31 fixed-point value in [2^30, 2^31) or 0; together with
// right_shift it encodes a real scale factor in (0, 1].
struct RequantParams {
  VecI32 bias;  // per output channel
  std::int32_t multiplier = 1 << 30;
  int right_shift = 0;
  std::int32_t output_zero_point = 0;
  std::int32_t clamp_min = 0;
  std::int32_t clamp_max = 255;

  void validate() const;
};

// acc[i][j] = sum_k (lhs[i][k] - lhs.zp) * (rhs[k][j] - rhs.zp), exact.
AccMatrix reference_gemm(const QuantTensor& lhs, const QuantTensor& rhs);

// High 32 bits of 2*a*b, saturating at 2^31 - 1 (only the a == b == INT32_MIN
// case saturates).
std::int32_t saturating_doubling_high_mul(std::int32_t a, std::int32_t b);

// x / 2^shift, rounding half away from zero. shift in [0, 62].
std::int32_t rounding_right_shift(std::int64_t x, int shift);

// Fixed-point requantization of one accumulator:
//   clamp(zp_out + rrs(sdhm(acc + bias[channel], multiplier), right_shift)).
// The bias addition saturates at the int32 boundaries.
std::uint8_t requantize(std::int32_t acc, Index channel, const RequantParams& p);

// Elementwise requantize with per-column channels; bias length must equal
// acc.cols(). Output scale/zero_point are taken from p and out_scale.
QuantTensor requantize_matrix(const AccMatrix& acc, const RequantParams& p,
                              double out_scale = 1.0);

// Encode real_scale in (0, 1) as (multiplier, right_shift) with
// multiplier * 2^(-31 - right_shift) within 2^-30 relative error.
std::pair<std::int32_t, int> quantize_multiplier(double real_scale);

}  // namespace gemmsim
