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

#include "gemmsim/model.hpp"

#include <fstream>
#include <set>
#include <stdexcept>

#include <json.hpp>

#include "gemmsim/driver.hpp"

namespace gemmsim {

using nlohmann::json;

std::string to_string(LayerKind kind) {
  switch (kind) {
    case LayerKind::Conv2d: return "conv2d";
    case LayerKind::DepthwiseConv2d: return "depthwise_conv2d";
    case LayerKind::FullyConnected: return "fully_connected";
    case LayerKind::MaxPool: return "max_pool";
    case LayerKind::AvgPool: return "avg_pool";
    case LayerKind::Add: return "add";
    case LayerKind::Clamp: return "clamp";
  }
  return "?";
}

LayerKind layer_kind_from_string(const std::string& s) {
  if (s == "conv2d") return LayerKind::Conv2d;
  if (s == "depthwise_conv2d") return LayerKind::DepthwiseConv2d;
  if (s == "fully_connected") return LayerKind::FullyConnected;
  if (s == "max_pool") return LayerKind::MaxPool;
  if (s == "avg_pool") return LayerKind::AvgPool;
  if (s == "add") return LayerKind::Add;
  if (s == "clamp") return LayerKind::Clamp;
  throw std::invalid_argument("unknown layer kind '" + s + "'");
}

std::vector<Index> filter_shape(const LayerSpec& layer, const std::vector<Index>& in_shape) {
  const Index c = in_shape[3];
  switch (layer.kind) {
    case LayerKind::Conv2d:
      return {layer.kernel_h, layer.kernel_w, c, layer.out_channels};
    case LayerKind::DepthwiseConv2d:
      return {layer.kernel_h, layer.kernel_w, c};
    case LayerKind::FullyConnected:
      return {in_shape[1] * in_shape[2] * c, layer.out_channels};
    default:
      return {};
  }
}

namespace {

std::vector<Index> apply_layer_shape(const LayerSpec& layer, const std::string& model_name,
                                     const std::vector<Index>& in) {
  const auto fail = [&](const std::string& why) {
    throw std::invalid_argument("model '" + model_name + "', layer '" + layer.name +
                                "': " + why);
  };
  switch (layer.kind) {
    case LayerKind::Conv2d:
    case LayerKind::DepthwiseConv2d: {
      const ConvGeom g = conv_geometry(in[1], in[2], layer.kernel_h, layer.kernel_w,
                                       layer.stride_h, layer.stride_w, layer.same_padding);
      const Index oc = layer.kind == LayerKind::Conv2d ? layer.out_channels : in[3];
      if (oc <= 0) fail("out_channels must be positive");
      return {in[0], g.out_h, g.out_w, oc};
    }
    case LayerKind::FullyConnected:
      if (layer.out_channels <= 0) fail("out_channels must be positive");
      return {in[0], 1, 1, layer.out_channels};
    case LayerKind::MaxPool:
    case LayerKind::AvgPool: {
      const Index oh = (in[1] - layer.pool_h) / layer.stride_h + 1;
      const Index ow = (in[2] - layer.pool_w) / layer.stride_w + 1;
      if (layer.pool_h > in[1] || layer.pool_w > in[2]) fail("pool window exceeds input");
      return {in[0], oh, ow, in[3]};
    }
    case LayerKind::Add:
    case LayerKind::Clamp:
      return in;
  }
  fail("unhandled layer kind");
  return {};
}

void check_quant(const QuantInfo& q, const std::string& what, const std::string& model,
                 const std::string& layer) {
  if (!(q.scale > 0.0) || q.zero_point < 0 || q.zero_point > 255)
    throw std::invalid_argument("model '" + model + "', layer '" + layer + "': invalid " +
                                what + " quantization");
}

}  // namespace

std::vector<Index> ModelSpec::shape_after(std::size_t upto) const {
  std::vector<Index> shape = input_shape;
  for (std::size_t i = 0; i <= upto && i < layers.size(); ++i)
    shape = apply_layer_shape(layers[i], name, shape);
  return shape;
}

QuantInfo ModelSpec::quant_after(std::size_t upto) const {
  QuantInfo q = input;
  for (std::size_t i = 0; i <= upto && i < layers.size(); ++i) {
    const LayerSpec& l = layers[i];
    if (l.kind == LayerKind::Conv2d || l.kind == LayerKind::DepthwiseConv2d ||
        l.kind == LayerKind::FullyConnected || l.kind == LayerKind::Add)
      q = l.out;
  }
  return q;
}

std::size_t ModelSpec::weight_bytes(std::size_t layer) const {
  std::vector<Index> in = input_shape;
  for (std::size_t i = 0; i < layer; ++i) in = apply_layer_shape(layers[i], name, in);
  std::size_t bytes = 1;
  const auto fs = filter_shape(layers[layer], in);
  if (fs.empty()) return 0;
  for (Index d : fs) bytes *= static_cast<std::size_t>(d);
  return bytes;
}

void ModelSpec::validate() const {
  if (input_shape.size() != 4)
    throw std::invalid_argument("model '" + name + "': input shape must be NHWC");
  for (Index d : input_shape)
    if (d <= 0) throw std::invalid_argument("model '" + name + "': non-positive input dim");
  check_quant(input, "input", name, "<input>");
  if (layers.empty()) throw std::invalid_argument("model '" + name + "': no layers");
  if (weights.size() != layers.size() || biases.size() != layers.size())
    throw std::invalid_argument("model '" + name + "': weight tables out of sync");

  std::set<std::string> seen;
  std::vector<Index> shape = input_shape;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const LayerSpec& l = layers[i];
    if (l.name.empty() || !seen.insert(l.name).second)
      throw std::invalid_argument("model '" + name + "': duplicate or empty layer name");
    if (l.activation != "none" && l.activation != "relu" && l.activation != "relu6")
      throw std::invalid_argument("layer '" + l.name + "': unknown activation");
    if (l.kind == LayerKind::Add) {
      if (l.add_input != "input" && !seen.contains(l.add_input))
        throw std::invalid_argument("layer '" + l.name + "': add input '" + l.add_input +
                                    "' does not name an earlier layer");
      // operand shapes must match; quant params may differ
      std::vector<Index> other =
          l.add_input == "input" ? input_shape : std::vector<Index>{};
      if (other.empty()) {
        std::vector<Index> s = input_shape;
        for (std::size_t j = 0; j < i; ++j) {
          s = apply_layer_shape(layers[j], name, s);
          if (layers[j].name == l.add_input) {
            other = s;
            break;
          }
        }
      }
      if (other != shape)
        throw std::invalid_argument("layer '" + l.name + "': add operand shape mismatch");
      check_quant(l.out, "output", name, l.name);
    }
    if (l.has_weights()) {
      check_quant(l.filter, "filter", name, l.name);
      check_quant(l.out, "output", name, l.name);
      const auto fs = filter_shape(l, shape);
      const QuantTensor& wt = weights[i];
      if (wt.shape != fs)
        throw std::invalid_argument("layer '" + l.name + "': weight shape mismatch");
      wt.validate();
      const Index oc = l.kind == LayerKind::DepthwiseConv2d ? shape[3] : l.out_channels;
      if (biases[i].size() != oc)
        throw std::invalid_argument("layer '" + l.name + "': bias length mismatch");
    }
    shape = apply_layer_shape(l, name, shape);
  }
}

namespace {

QuantInfo quant_from_json(const json& j) {
  return QuantInfo{j.at("scale").get<double>(), j.at("zero_point").get<std::int32_t>()};
}

json quant_to_json(const QuantInfo& q) {
  return json{{"scale", q.scale}, {"zero_point", q.zero_point}};
}

LayerSpec layer_from_json(const json& j) {
  LayerSpec l;
  l.name = j.at("name").get<std::string>();
  l.kind = layer_kind_from_string(j.at("kind").get<std::string>());
  if (j.contains("kernel")) {
    l.kernel_h = j.at("kernel").at(0).get<Index>();
    l.kernel_w = j.at("kernel").at(1).get<Index>();
  }
  if (j.contains("stride")) {
    l.stride_h = j.at("stride").at(0).get<Index>();
    l.stride_w = j.at("stride").at(1).get<Index>();
  }
  if (j.contains("padding")) {
    const auto p = j.at("padding").get<std::string>();
    if (p != "same" && p != "valid")
      throw std::invalid_argument("layer '" + l.name + "': padding must be same|valid");
    l.same_padding = p == "same";
  }
  l.out_channels = j.value("out_channels", Index{0});
  if (j.contains("filter")) l.filter = quant_from_json(j.at("filter"));
  if (j.contains("out")) l.out = quant_from_json(j.at("out"));
  l.activation = j.value("activation", std::string("none"));
  if (j.contains("pool")) {
    l.pool_h = j.at("pool").at(0).get<Index>();
    l.pool_w = j.at("pool").at(1).get<Index>();
  }
  l.add_input = j.value("from", std::string());
  if (j.contains("clamp")) {
    l.clamp_min = j.at("clamp").at(0).get<std::int32_t>();
    l.clamp_max = j.at("clamp").at(1).get<std::int32_t>();
  }
  if (l.has_weights() && !j.contains("filter"))
    throw std::invalid_argument("layer '" + l.name + "': missing filter quantization");
  if (l.has_weights() && !j.contains("out"))
    throw std::invalid_argument("layer '" + l.name + "': missing output quantization");
  return l;
}

json layer_to_json(const LayerSpec& l) {
  json j{{"name", l.name}, {"kind", to_string(l.kind)}};
  switch (l.kind) {
    case LayerKind::Conv2d:
    case LayerKind::DepthwiseConv2d:
      j["kernel"] = {l.kernel_h, l.kernel_w};
      j["stride"] = {l.stride_h, l.stride_w};
      j["padding"] = l.same_padding ? "same" : "valid";
      if (l.kind == LayerKind::Conv2d) j["out_channels"] = l.out_channels;
      j["filter"] = quant_to_json(l.filter);
      j["out"] = quant_to_json(l.out);
      j["activation"] = l.activation;
      break;
    case LayerKind::FullyConnected:
      j["out_channels"] = l.out_channels;
      j["filter"] = quant_to_json(l.filter);
      j["out"] = quant_to_json(l.out);
      j["activation"] = l.activation;
      break;
    case LayerKind::MaxPool:
    case LayerKind::AvgPool:
      j["pool"] = {l.pool_h, l.pool_w};
      j["stride"] = {l.stride_h, l.stride_w};
      if (l.activation != "none") j["activation"] = l.activation;
      break;
    case LayerKind::Add:
      j["from"] = l.add_input;
      j["out"] = quant_to_json(l.out);
      if (l.activation != "none") j["activation"] = l.activation;
      break;
    case LayerKind::Clamp:
      j["clamp"] = {l.clamp_min, l.clamp_max};
      break;
  }
  return j;
}

}  // namespace

ModelSpec load_model(const std::string& spec_path, const std::string& weights_path) {
  std::ifstream in(spec_path);
  if (!in) throw SimError("cannot open model spec '" + spec_path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw SimError("model spec '" + spec_path + "': " + e.what());
  }

  ModelSpec model;
  try {
    model.name = j.at("name").get<std::string>();
    model.input_shape = j.at("input").at("shape").get<std::vector<Index>>();
    model.input = quant_from_json(j.at("input"));
    for (const auto& lj : j.at("layers")) model.layers.push_back(layer_from_json(lj));
  } catch (const json::exception& e) {
    throw SimError("model spec '" + spec_path + "': " + e.what());
  }

  std::ifstream wf(weights_path, std::ios::binary);
  if (!wf) throw SimError("cannot open weights file '" + weights_path + "'");
  std::vector<std::uint8_t> blob((std::istreambuf_iterator<char>(wf)),
                                 std::istreambuf_iterator<char>());

  model.weights.resize(model.layers.size());
  model.biases.resize(model.layers.size());
  std::size_t pos = 0;
  std::vector<Index> shape = model.input_shape;
  for (std::size_t i = 0; i < model.layers.size(); ++i) {
    const LayerSpec& l = model.layers[i];
    if (l.has_weights()) {
      const auto fs = filter_shape(l, shape);
      std::size_t fbytes = 1;
      for (Index d : fs) fbytes *= static_cast<std::size_t>(d);
      const Index oc = l.kind == LayerKind::DepthwiseConv2d ? shape[3] : l.out_channels;
      const std::size_t bbytes = static_cast<std::size_t>(oc) * 4;
      if (pos + fbytes + bbytes > blob.size())
        throw SimError("weights file '" + weights_path + "' too short at layer '" + l.name +
                       "': need " + std::to_string(fbytes + bbytes) + " bytes, have " +
                       std::to_string(blob.size() - pos));
      QuantTensor wt;
      wt.shape = fs;
      wt.scale = l.filter.scale;
      wt.zero_point = l.filter.zero_point;
      wt.data.assign(blob.begin() + static_cast<std::ptrdiff_t>(pos),
                     blob.begin() + static_cast<std::ptrdiff_t>(pos + fbytes));
      pos += fbytes;
      VecI32 bias(oc);
      for (Index b = 0; b < oc; ++b) {
        const std::size_t o = pos + static_cast<std::size_t>(b) * 4;
        bias(b) = static_cast<std::int32_t>(
            std::uint32_t{blob[o]} | (std::uint32_t{blob[o + 1]} << 8) |
            (std::uint32_t{blob[o + 2]} << 16) | (std::uint32_t{blob[o + 3]} << 24));
      }
      pos += bbytes;
      model.weights[i] = std::move(wt);
      model.biases[i] = std::move(bias);
    }
    shape = apply_layer_shape(l, model.name, shape);
  }
  if (pos != blob.size())
    throw SimError("weights file '" + weights_path + "' has " +
                   std::to_string(blob.size() - pos) + " trailing bytes");

  model.validate();
  return model;
}

void save_model(const ModelSpec& model, const std::string& spec_path,
                const std::string& weights_path) {
  model.validate();
  json j{{"name", model.name},
         {"input",
          {{"shape", model.input_shape},
           {"scale", model.input.scale},
           {"zero_point", model.input.zero_point}}}};
  j["layers"] = json::array();
  for (const auto& l : model.layers) j["layers"].push_back(layer_to_json(l));
  std::ofstream out(spec_path);
  if (!out) throw SimError("cannot write model spec '" + spec_path + "'");
  out << j.dump(2) << "\n";

  std::ofstream wf(weights_path, std::ios::binary);
  if (!wf) throw SimError("cannot write weights file '" + weights_path + "'");
  for (std::size_t i = 0; i < model.layers.size(); ++i) {
    if (!model.layers[i].has_weights()) continue;
    const auto& wt = model.weights[i];
    wf.write(reinterpret_cast<const char*>(wt.data.data()),
             static_cast<std::streamsize>(wt.data.size()));
    for (Index b = 0; b < model.biases[i].size(); ++b) {
      const auto v = static_cast<std::uint32_t>(model.biases[i](b));
      const char bytes[4] = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
                             static_cast<char>((v >> 16) & 0xff),
                             static_cast<char>((v >> 24) & 0xff)};
      wf.write(bytes, 4);
    }
  }
}

}  // namespace gemmsim
