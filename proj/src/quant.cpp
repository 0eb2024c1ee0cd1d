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

#include "gemmsim/quant.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace gemmsim {

void QuantTensor::validate() const {
  if (shape.empty()) throw std::invalid_argument("QuantTensor: empty shape");
  for (Index d : shape)
    if (d <= 0) throw std::invalid_argument("QuantTensor: non-positive dim");
  if (static_cast<Index>(data.size()) != numel())
    throw std::invalid_argument("QuantTensor: data length does not match shape");
  if (!(scale > 0.0)) throw std::invalid_argument("QuantTensor: scale must be > 0");
  if (zero_point < 0 || zero_point > 255)
    throw std::invalid_argument("QuantTensor: zero_point outside [0, 255]");
}

QuantTensor make_quant_tensor(std::vector<Index> shape, std::vector<std::uint8_t> data,
                              double scale, std::int32_t zero_point) {
  QuantTensor t{std::move(shape), std::move(data), scale, zero_point};
  t.validate();
  return t;
}

QuantTensor zero_like(std::vector<Index> shape, double scale, std::int32_t zero_point) {
  QuantTensor t;
  t.shape = std::move(shape);
  t.scale = scale;
  t.zero_point = zero_point;
  t.data.assign(static_cast<std::size_t>(t.numel()),
                static_cast<std::uint8_t>(zero_point));
  t.validate();
  return t;
}

void RequantParams::validate() const {
  if (multiplier != 0 && (multiplier < (1 << 30)))
    throw std::invalid_argument("RequantParams: multiplier outside [2^30, 2^31) or 0");
  if (right_shift < 0 || right_shift > 62)
    throw std::invalid_argument("RequantParams: right_shift outside [0, 62]");
  if (clamp_min > output_zero_point || output_zero_point > clamp_max)
    throw std::invalid_argument("RequantParams: clamp range must contain zero_point");
  if (clamp_min < 0 || clamp_max > 255)
    throw std::invalid_argument("RequantParams: clamp range outside [0, 255]");
}

AccMatrix reference_gemm(const QuantTensor& lhs, const QuantTensor& rhs) {
  if (lhs.shape.size() != 2 || rhs.shape.size() != 2)
    throw std::invalid_argument("reference_gemm: operands must be rank 2");
  if (lhs.cols() != rhs.rows())
    throw std::invalid_argument("reference_gemm: inner dimensions do not match");
  const MatI32 a =
      (lhs.matrix().cast<std::int32_t>().array() - lhs.zero_point).matrix();
  const MatI32 b =
      (rhs.matrix().cast<std::int32_t>().array() - rhs.zero_point).matrix();
  return a * b;
}

std::int32_t saturating_doubling_high_mul(std::int32_t a, std::int32_t b) {
  constexpr auto kMin = std::numeric_limits<std::int32_t>::min();
  constexpr auto kMax = std::numeric_limits<std::int32_t>::max();
  if (a == kMin && b == kMin) return kMax;
  const std::int64_t p = std::int64_t{a} * std::int64_t{b};
  // high 32 bits of 2*p == p >> 31 (arithmetic shift)
  return static_cast<std::int32_t>(p >> 31);
}

std::int32_t rounding_right_shift(std::int64_t x, int shift) {
  if (shift == 0) return static_cast<std::int32_t>(x);
  const std::int64_t mask = (std::int64_t{1} << shift) - 1;
  const std::int64_t remainder = x & mask;
  const std::int64_t threshold = (mask >> 1) + (x < 0 ? 1 : 0);
  return static_cast<std::int32_t>((x >> shift) + (remainder > threshold ? 1 : 0));
}

std::uint8_t requantize(std::int32_t acc, Index channel, const RequantParams& p) {
  constexpr std::int64_t kMin = std::numeric_limits<std::int32_t>::min();
  constexpr std::int64_t kMax = std::numeric_limits<std::int32_t>::max();
  std::int64_t sum = std::int64_t{acc} + p.bias[channel];
  sum = std::clamp(sum, kMin, kMax);  // 32-bit adder saturates
  const std::int32_t scaled = rounding_right_shift(
      saturating_doubling_high_mul(static_cast<std::int32_t>(sum), p.multiplier),
      p.right_shift);
  const std::int32_t q =
      std::clamp(p.output_zero_point + scaled, p.clamp_min, p.clamp_max);
  return static_cast<std::uint8_t>(q);
}

QuantTensor requantize_matrix(const AccMatrix& acc, const RequantParams& p,
                              double out_scale) {
  if (p.bias.size() != acc.cols())
    throw std::invalid_argument("requantize_matrix: bias length != columns");
  QuantTensor out;
  out.shape = {acc.rows(), acc.cols()};
  out.scale = out_scale;
  out.zero_point = p.output_zero_point;
  out.data.resize(static_cast<std::size_t>(acc.size()));
  for (Index i = 0; i < acc.rows(); ++i)
    for (Index j = 0; j < acc.cols(); ++j)
      out.data[static_cast<std::size_t>(i * acc.cols() + j)] =
          requantize(acc(i, j), j, p);
  return out;
}

std::pair<std::int32_t, int> quantize_multiplier(double real_scale) {
  if (!(real_scale > 0.0) || !(real_scale < 1.0))
    throw std::invalid_argument("quantize_multiplier: scale outside (0, 1)");
  int exponent = 0;
  const double q = std::frexp(real_scale, &exponent);  // q in [0.5, 1)
  auto q31 = static_cast<std::int64_t>(std::llround(q * (std::int64_t{1} << 31)));
  if (q31 == (std::int64_t{1} << 31)) {
    q31 /= 2;
    ++exponent;
  }
  int right_shift = -exponent;
  if (right_shift < 0) {
    // real_scale rounded up to 1.0; use the largest representable value
    return {std::numeric_limits<std::int32_t>::max(), 0};
  }
  if (right_shift > 62) throw std::invalid_argument("quantize_multiplier: scale too small");
  return {static_cast<std::int32_t>(q31), right_shift};
}

}  // namespace gemmsim
