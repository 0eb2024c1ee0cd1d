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

// Test-only reference oracles, kept independent of the library code paths
// they are used to check.

#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "gemmsim/quant.hpp"

namespace gemmsim::testing {

// Brute-force integer GEMM over zero-point-adjusted uint8 operands, written
// as a plain triple loop in wide arithmetic.
inline std::vector<std::int64_t> naive_gemm(const std::vector<std::uint8_t>& lhs,
                                            const std::vector<std::uint8_t>& rhs,
                                            int M, int K, int N, int lhs_zp, int rhs_zp) {
  std::vector<std::int64_t> out(static_cast<std::size_t>(M) * N, 0);
  for (int i = 0; i < M; ++i)
    for (int j = 0; j < N; ++j) {
      std::int64_t acc = 0;
      for (int k = 0; k < K; ++k)
        acc += (std::int64_t{lhs[i * K + k]} - lhs_zp) * (std::int64_t{rhs[k * N + j]} - rhs_zp);
      out[static_cast<std::size_t>(i) * N + j] = acc;
    }
  return out;
}

// Double-precision requantization oracle. Fixed-point requantize must land
// within +/-1 of this on every input.
inline int float_requantize(std::int32_t acc, std::int32_t bias, double real_scale,
                            int zp_out, int clamp_min, int clamp_max) {
  const double v = real_scale * (static_cast<double>(acc) + bias);
  const auto r = static_cast<int>(std::llround(v)) + zp_out;
  return std::max(clamp_min, std::min(clamp_max, r));
}

// Direct 7-loop quantized convolution in exact integer arithmetic over NHWC
// input and HWIO filters, independent of the library's lowering path.
// Returns raw accumulators indexed [n][oh][ow][oc].
inline std::vector<std::int64_t> direct_conv_acc(
    const std::vector<std::uint8_t>& input, int N, int H, int W, int C, int in_zp,
    const std::vector<std::uint8_t>& filter, int kh, int kw, int OC, int f_zp,
    int stride_h, int stride_w, int pad_top, int pad_left, int out_h, int out_w) {
  std::vector<std::int64_t> acc(static_cast<std::size_t>(N) * out_h * out_w * OC, 0);
  for (int n = 0; n < N; ++n)
    for (int oh = 0; oh < out_h; ++oh)
      for (int ow = 0; ow < out_w; ++ow)
        for (int oc = 0; oc < OC; ++oc) {
          std::int64_t sum = 0;
          for (int dy = 0; dy < kh; ++dy)
            for (int dx = 0; dx < kw; ++dx)
              for (int c = 0; c < C; ++c) {
                const int iy = oh * stride_h + dy - pad_top;
                const int ix = ow * stride_w + dx - pad_left;
                std::int64_t x = in_zp;  // padding holds the zero point
                if (iy >= 0 && iy < H && ix >= 0 && ix < W)
                  x = input[((static_cast<std::size_t>(n) * H + iy) * W + ix) * C + c];
                const std::int64_t f =
                    filter[((static_cast<std::size_t>(dy) * kw + dx) * C + c) * OC + oc];
                sum += (x - in_zp) * (f - f_zp);
              }
          acc[((static_cast<std::size_t>(n) * out_h + oh) * out_w + ow) * OC + oc] = sum;
        }
  return acc;
}

inline QuantTensor random_tensor(std::mt19937& rng, std::vector<Index> shape,
                                 double scale, std::int32_t zp) {
  std::uniform_int_distribution<int> dist(0, 255);
  QuantTensor t;
  t.shape = std::move(shape);
  t.scale = scale;
  t.zero_point = zp;
  t.data.resize(static_cast<std::size_t>(t.numel()));
  for (auto& b : t.data) b = static_cast<std::uint8_t>(dist(rng));
  return t;
}

}  // namespace gemmsim::testing
