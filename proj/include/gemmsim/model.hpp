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

#include "gemmsim/quant.hpp"

namespace gemmsim {

enum class LayerKind {
  Conv2d,
  DepthwiseConv2d,
  FullyConnected,
  MaxPool,
  AvgPool,
  Add,
  Clamp,
};

std::string to_string(LayerKind kind);
LayerKind layer_kind_from_string(const std::string& s);

struct QuantInfo {
  double scale = 1.0;
  std::int32_t zero_point = 0;
};

struct LayerSpec {
  std::string name;
  LayerKind kind = LayerKind::Clamp;

  // conv2d / depthwise_conv2d / fully_connected
  Index kernel_h = 1, kernel_w = 1;
  Index stride_h = 1, stride_w = 1;
  bool same_padding = false;
  Index out_channels = 0;
  QuantInfo filter;
  QuantInfo out;
  std::string activation = "none";  // none | relu | relu6

  // max_pool / avg_pool (valid padding)
  Index pool_h = 2, pool_w = 2;

  // add: name of an earlier layer (or "input") providing the second operand
  std::string add_input;

  // clamp
  std::int32_t clamp_min = 0, clamp_max = 255;

  bool has_weights() const {
    return kind == LayerKind::Conv2d || kind == LayerKind::DepthwiseConv2d ||
           kind == LayerKind::FullyConnected;
  }
};

// A small sequential CNN with optional residual adds. Weights live in a
// separate raw file: for each weighted layer in declared order, the filter
// bytes (uint8) followed by the per-channel bias (int32 little-endian).
struct ModelSpec {
  std::string name;
  std::vector<Index> input_shape;  // NHWC
  QuantInfo input;
  std::vector<LayerSpec> layers;
  std::vector<QuantTensor> weights;  // parallel to layers; empty when unused
  std::vector<VecI32> biases;

  void validate() const;
  // Shape produced by layer `upto` (inclusive); layers.size()-1 for the output.
  std::vector<Index> shape_after(std::size_t upto) const;
  QuantInfo quant_after(std::size_t upto) const;
  std::size_t weight_bytes(std::size_t layer) const;
};

ModelSpec load_model(const std::string& spec_path, const std::string& weights_path);
void save_model(const ModelSpec& model, const std::string& spec_path,
                const std::string& weights_path);

// Filter shape for a weighted layer, given its input shape.
std::vector<Index> filter_shape(const LayerSpec& layer, const std::vector<Index>& in_shape);

}  // namespace gemmsim
