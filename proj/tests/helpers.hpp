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

#include <random>

#include "gemmsim/driver.hpp"
#include "gemmsim/model.hpp"
#include "gemmsim/packing.hpp"
#include "oracles.hpp"

namespace gemmsim::testing {

inline GemmTask random_task(std::mt19937& rng, Index m, Index n, Index k) {
  std::uniform_int_distribution<int> zp(0, 255);
  std::uniform_int_distribution<std::int32_t> bias(-10000, 10000);
  std::uniform_real_distribution<double> scale(1e-4, 0.9);

  GemmTask t;
  t.m = m;
  t.n = n;
  t.k = k;
  t.lhs = random_tensor(rng, {m, k}, 0.05, zp(rng));
  t.rhs = random_tensor(rng, {k, n}, 0.02, zp(rng));
  auto [mult, shift] = quantize_multiplier(scale(rng));
  t.requant.multiplier = mult;
  t.requant.right_shift = shift;
  t.requant.bias = VecI32::NullaryExpr(n, [&](Index) { return bias(rng); });
  t.requant.output_zero_point = zp(rng);
  t.requant.clamp_min = 0;
  t.requant.clamp_max = 255;
  t.out_scale = 0.1;
  return t;
}

// Expected result through the quant-core path (itself checked against the
// brute-force oracle in the quant tests).
inline QuantTensor oracle_output(const GemmTask& t) {
  return requantize_matrix(reference_gemm(t.lhs, t.rhs), t.requant, t.out_scale);
}

inline bool same_bytes(const QuantTensor& a, const QuantTensor& b) {
  return a.shape == b.shape && a.data == b.data;
}

// Six-layer desk-scale CNN exercising every supported layer kind, with
// seeded random weights. Scales are chosen so every rescale factor lies in
// (0, 1).
inline ModelSpec toy_cnn(std::uint32_t seed = 1234) {
  std::mt19937 rng(seed);
  std::uniform_int_distribution<int> byte(0, 255);
  std::uniform_int_distribution<std::int32_t> bias(-400, 400);

  ModelSpec m;
  m.name = "toy_cnn";
  m.input_shape = {1, 8, 8, 3};
  m.input = {0.05, 128};

  LayerSpec conv1;
  conv1.name = "conv1";
  conv1.kind = LayerKind::Conv2d;
  conv1.kernel_h = conv1.kernel_w = 3;
  conv1.same_padding = true;
  conv1.out_channels = 8;
  conv1.filter = {0.01, 130};
  conv1.out = {0.04, 3};
  conv1.activation = "relu";
  m.layers.push_back(conv1);

  LayerSpec pool1;
  pool1.name = "pool1";
  pool1.kind = LayerKind::MaxPool;
  pool1.pool_h = pool1.pool_w = 2;
  pool1.stride_h = pool1.stride_w = 2;
  m.layers.push_back(pool1);

  LayerSpec dw1;
  dw1.name = "dw1";
  dw1.kind = LayerKind::DepthwiseConv2d;
  dw1.kernel_h = dw1.kernel_w = 3;
  dw1.same_padding = true;
  dw1.filter = {0.008, 125};
  dw1.out = {0.05, 128};
  m.layers.push_back(dw1);

  LayerSpec clamp1;
  clamp1.name = "clamp1";
  clamp1.kind = LayerKind::Clamp;
  clamp1.clamp_min = 10;
  clamp1.clamp_max = 240;
  m.layers.push_back(clamp1);

  LayerSpec add1;
  add1.name = "add1";
  add1.kind = LayerKind::Add;
  add1.add_input = "dw1";
  add1.out = {0.06, 120};
  m.layers.push_back(add1);

  LayerSpec fc1;
  fc1.name = "fc1";
  fc1.kind = LayerKind::FullyConnected;
  fc1.out_channels = 10;
  fc1.filter = {0.01, 128};
  fc1.out = {0.1, 100};
  m.layers.push_back(fc1);

  m.weights.resize(m.layers.size());
  m.biases.resize(m.layers.size());
  std::vector<Index> shape = m.input_shape;
  for (std::size_t i = 0; i < m.layers.size(); ++i) {
    const LayerSpec& l = m.layers[i];
    if (l.has_weights()) {
      const auto fs = filter_shape(l, shape);
      QuantTensor wt;
      wt.shape = fs;
      wt.scale = l.filter.scale;
      wt.zero_point = l.filter.zero_point;
      Index count = 1;
      for (Index d : fs) count *= d;
      wt.data.resize(static_cast<std::size_t>(count));
      for (auto& b : wt.data) b = static_cast<std::uint8_t>(byte(rng));
      const Index oc = l.kind == LayerKind::DepthwiseConv2d ? shape[3] : l.out_channels;
      VecI32 bv(oc);
      for (Index b = 0; b < oc; ++b) bv(b) = bias(rng);
      m.weights[i] = std::move(wt);
      m.biases[i] = std::move(bv);
    }
    shape = m.shape_after(i);
  }
  return m;
}

inline QuantTensor random_input_for(const ModelSpec& m, std::uint32_t seed) {
  std::mt19937 rng(seed);
  return random_tensor(rng, m.input_shape, m.input.scale, m.input.zero_point);
}

// Convolution-heavy fixture: most cycles land in the GEMM offload, so array
// size sweeps are compute-bound.
inline ModelSpec conv_stack(std::uint32_t seed = 4321) {
  std::mt19937 rng(seed);
  std::uniform_int_distribution<int> byte(0, 255);
  std::uniform_int_distribution<std::int32_t> bias(-200, 200);

  ModelSpec m;
  m.name = "conv_stack";
  m.input_shape = {1, 32, 32, 8};
  m.input = {0.05, 128};

  LayerSpec conv1;
  conv1.name = "conv1";
  conv1.kind = LayerKind::Conv2d;
  conv1.kernel_h = conv1.kernel_w = 3;
  conv1.same_padding = true;
  conv1.out_channels = 16;
  conv1.filter = {0.01, 128};
  conv1.out = {0.04, 5};
  conv1.activation = "relu";
  m.layers.push_back(conv1);

  LayerSpec pool1;
  pool1.name = "pool1";
  pool1.kind = LayerKind::MaxPool;
  pool1.pool_h = pool1.pool_w = 2;
  pool1.stride_h = pool1.stride_w = 2;
  m.layers.push_back(pool1);

  LayerSpec conv2;
  conv2.name = "conv2";
  conv2.kind = LayerKind::Conv2d;
  conv2.kernel_h = conv2.kernel_w = 3;
  conv2.same_padding = true;
  conv2.out_channels = 32;
  conv2.filter = {0.008, 120};
  conv2.out = {0.05, 4};
  conv2.activation = "relu6";
  m.layers.push_back(conv2);

  LayerSpec pool2;
  pool2.name = "pool2";
  pool2.kind = LayerKind::AvgPool;
  pool2.pool_h = pool2.pool_w = 4;
  pool2.stride_h = pool2.stride_w = 4;
  m.layers.push_back(pool2);

  LayerSpec fc1;
  fc1.name = "fc1";
  fc1.kind = LayerKind::FullyConnected;
  fc1.out_channels = 10;
  fc1.filter = {0.01, 128};
  fc1.out = {0.1, 100};
  m.layers.push_back(fc1);

  m.weights.resize(m.layers.size());
  m.biases.resize(m.layers.size());
  std::vector<Index> shape = m.input_shape;
  for (std::size_t i = 0; i < m.layers.size(); ++i) {
    const LayerSpec& l = m.layers[i];
    if (l.has_weights()) {
      const auto fs = filter_shape(l, shape);
      QuantTensor wt;
      wt.shape = fs;
      wt.scale = l.filter.scale;
      wt.zero_point = l.filter.zero_point;
      Index count = 1;
      for (Index d : fs) count *= d;
      wt.data.resize(static_cast<std::size_t>(count));
      for (auto& b : wt.data) b = static_cast<std::uint8_t>(byte(rng));
      VecI32 bv(l.out_channels);
      for (Index b = 0; b < l.out_channels; ++b) bv(b) = bias(rng);
      m.weights[i] = std::move(wt);
      m.biases[i] = std::move(bv);
    }
    shape = m.shape_after(i);
  }
  return m;
}

}  // namespace gemmsim::testing
