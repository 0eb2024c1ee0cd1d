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

#include "gemmsim/runner.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <stdexcept>
#include <utility>

#include "gemmsim/driver.hpp"

namespace gemmsim {

namespace {

std::uint64_t ceil_div(std::uint64_t a, std::uint64_t b) { return (a + b - 1) / b; }

// Fixed-point multiply used by the add layer: value * scale for scale < 1.
std::int32_t scaled(std::int32_t value, std::int32_t multiplier, int shift) {
  return rounding_right_shift(saturating_doubling_high_mul(value, multiplier), shift);
}

RequantParams layer_requant(const LayerSpec& layer, const QuantInfo& in_q, VecI32 bias) {
  const double real = in_q.scale * layer.filter.scale / layer.out.scale;
  if (!(real > 0.0) || !(real < 1.0))
    throw std::invalid_argument("layer '" + layer.name +
                                "': combined rescale must lie in (0, 1), got " +
                                std::to_string(real));
  RequantParams p;
  auto [m, s] = quantize_multiplier(real);
  p.multiplier = m;
  p.right_shift = s;
  p.bias = std::move(bias);
  p.output_zero_point = layer.out.zero_point;
  std::tie(p.clamp_min, p.clamp_max) = activation_range(layer.activation, layer.out);
  return p;
}

QuantTensor conv_reference(const ModelSpec& model, std::size_t li, const QuantTensor& in) {
  const LayerSpec& l = model.layers[li];
  const Index n = in.shape[0], h = in.shape[1], w = in.shape[2], c = in.shape[3];
  const ConvGeom g = conv_geometry(h, w, l.kernel_h, l.kernel_w, l.stride_h, l.stride_w,
                                   l.same_padding);
  const bool depthwise = l.kind == LayerKind::DepthwiseConv2d;
  const Index oc = depthwise ? c : l.out_channels;
  const QuantTensor& filter = model.weights[li];
  const RequantParams p = layer_requant(l, QuantInfo{in.scale, in.zero_point},
                                        model.biases[li]);

  QuantTensor out;
  out.shape = {n, g.out_h, g.out_w, oc};
  out.scale = l.out.scale;
  out.zero_point = l.out.zero_point;
  out.data.resize(static_cast<std::size_t>(out.numel()));

  std::size_t pos = 0;
  for (Index b = 0; b < n; ++b)
    for (Index oh = 0; oh < g.out_h; ++oh)
      for (Index ow = 0; ow < g.out_w; ++ow)
        for (Index ch = 0; ch < oc; ++ch) {
          std::int32_t acc = 0;
          for (Index dy = 0; dy < l.kernel_h; ++dy)
            for (Index dx = 0; dx < l.kernel_w; ++dx) {
              const Index iy = oh * l.stride_h + dy - g.pad_top;
              const Index ix = ow * l.stride_w + dx - g.pad_left;
              const Index c_lo = depthwise ? ch : 0;
              const Index c_hi = depthwise ? ch + 1 : c;
              for (Index cc = c_lo; cc < c_hi; ++cc) {
                std::int32_t x = in.zero_point;
                if (iy >= 0 && iy < h && ix >= 0 && ix < w)
                  x = in.data[static_cast<std::size_t>(in.offset(b, iy, ix, cc))];
                const std::size_t fo =
                    depthwise
                        ? static_cast<std::size_t>((dy * l.kernel_w + dx) * c + cc)
                        : static_cast<std::size_t>(((dy * l.kernel_w + dx) * c + cc) * oc + ch);
                acc += (x - in.zero_point) *
                       (std::int32_t{filter.data[fo]} - filter.zero_point);
              }
            }
          out.data[pos++] = requantize(acc, ch, p);
        }
  return out;
}

QuantTensor pool_reference(const LayerSpec& l, const QuantTensor& in, bool is_max) {
  const Index n = in.shape[0], h = in.shape[1], w = in.shape[2], c = in.shape[3];
  const Index oh = (h - l.pool_h) / l.stride_h + 1;
  const Index ow = (w - l.pool_w) / l.stride_w + 1;
  const auto [cmin, cmax] =
      activation_range(l.activation, QuantInfo{in.scale, in.zero_point});

  QuantTensor out;
  out.shape = {n, oh, ow, c};
  out.scale = in.scale;
  out.zero_point = in.zero_point;
  out.data.resize(static_cast<std::size_t>(out.numel()));
  std::size_t pos = 0;
  for (Index b = 0; b < n; ++b)
    for (Index y = 0; y < oh; ++y)
      for (Index x = 0; x < ow; ++x)
        for (Index ch = 0; ch < c; ++ch) {
          std::int32_t best = 0;
          std::int32_t sum = 0;
          for (Index dy = 0; dy < l.pool_h; ++dy)
            for (Index dx = 0; dx < l.pool_w; ++dx) {
              const std::int32_t v = in.data[static_cast<std::size_t>(
                  in.offset(b, y * l.stride_h + dy, x * l.stride_w + dx, ch))];
              best = (dy == 0 && dx == 0) ? v : std::max(best, v);
              sum += v;
            }
          const std::int32_t count = static_cast<std::int32_t>(l.pool_h * l.pool_w);
          // average rounds half up (operands are non-negative)
          const std::int32_t v = is_max ? best : (sum + count / 2) / count;
          out.data[pos++] = static_cast<std::uint8_t>(std::clamp(v, cmin, cmax));
        }
  return out;
}

// Rescale-and-add in fixed point with a shared left shift of 20 bits, so
// both operands and the result use the requantize primitives.
QuantTensor add_reference(const LayerSpec& l, const QuantTensor& a, const QuantTensor& b) {
  if (a.shape != b.shape)
    throw std::invalid_argument("add layer '" + l.name + "': operand shape mismatch");
  constexpr int kLeftShift = 20;
  const double twice_max = 2.0 * std::max(a.scale, b.scale);
  auto [ma, sa] = quantize_multiplier(a.scale / twice_max);
  auto [mb, sb] = quantize_multiplier(b.scale / twice_max);
  const double out_real = twice_max / ((1 << kLeftShift) * l.out.scale);
  if (!(out_real > 0.0) || !(out_real < 1.0))
    throw std::invalid_argument("add layer '" + l.name + "': output rescale out of range");
  auto [mo, so] = quantize_multiplier(out_real);
  const auto [cmin, cmax] = activation_range(l.activation, l.out);

  QuantTensor out;
  out.shape = a.shape;
  out.scale = l.out.scale;
  out.zero_point = l.out.zero_point;
  out.data.resize(a.data.size());
  for (std::size_t i = 0; i < a.data.size(); ++i) {
    const std::int32_t av = (std::int32_t{a.data[i]} - a.zero_point) << kLeftShift;
    const std::int32_t bv = (std::int32_t{b.data[i]} - b.zero_point) << kLeftShift;
    const std::int32_t sum = scaled(av, ma, sa) + scaled(bv, mb, sb);
    const std::int32_t q = l.out.zero_point + scaled(sum, mo, so);
    out.data[i] = static_cast<std::uint8_t>(std::clamp(q, cmin, cmax));
  }
  return out;
}

QuantTensor fc_reference(const ModelSpec& model, std::size_t li, const QuantTensor& in) {
  const LayerSpec& l = model.layers[li];
  QuantTensor flat = in;
  flat.shape = {in.shape[0], in.shape[1] * in.shape[2] * in.shape[3]};
  const RequantParams p =
      layer_requant(l, QuantInfo{in.scale, in.zero_point}, model.biases[li]);
  QuantTensor out = requantize_matrix(reference_gemm(flat, model.weights[li]), p,
                                      l.out.scale);
  out.shape = {in.shape[0], 1, 1, l.out_channels};
  return out;
}

QuantTensor clamp_reference(const LayerSpec& l, const QuantTensor& in) {
  QuantTensor out = in;
  for (auto& v : out.data)
    v = static_cast<std::uint8_t>(
        std::clamp<std::int32_t>(v, l.clamp_min, l.clamp_max));
  return out;
}

struct LoweredGemm {
  QuantTensor patches;  // M x K
  QuantTensor rhs;      // K x OC
  RequantParams requant;
  std::vector<Index> out_shape;
  std::uint64_t im2col_bytes = 0;
};

LoweredGemm lower_to_gemm(const ModelSpec& model, std::size_t li, const QuantTensor& in) {
  const LayerSpec& l = model.layers[li];
  LoweredGemm g;
  if (l.kind == LayerKind::Conv2d) {
    const ConvGeom geom = conv_geometry(in.shape[1], in.shape[2], l.kernel_h, l.kernel_w,
                                        l.stride_h, l.stride_w, l.same_padding);
    g.patches = im2col(in, geom);
    g.out_shape = {in.shape[0], geom.out_h, geom.out_w, l.out_channels};
    g.im2col_bytes = g.patches.data.size();
  } else {  // fully connected: a reshape, no data movement modeled
    g.patches = in;
    g.patches.shape = {in.shape[0], in.shape[1] * in.shape[2] * in.shape[3]};
    g.out_shape = {in.shape[0], 1, 1, l.out_channels};
  }
  g.rhs = model.weights[li];  // HWIO flattens row-major to K x OC
  g.rhs.shape = {g.patches.cols(), l.out_channels};
  g.requant = layer_requant(l, QuantInfo{in.scale, in.zero_point}, model.biases[li]);
  return g;
}

// Split the patch rows into up to four strip-aligned batches so the driver
// pipeline has neighbors to overlap within one layer.
std::vector<GemmTask> batch_tasks(const LoweredGemm& g, const LayerSpec& l,
                                  const AccelConfig& config) {
  const Index m = g.patches.rows();
  const Index k = g.patches.cols();
  const Index oc = g.rhs.cols();
  const TaskShape shape = task_shape(m, oc, k, config);
  const Index strips = shape.row_strips();
  const Index parts = std::min<Index>(4, strips);
  std::vector<GemmTask> tasks;
  Index strip0 = 0;
  for (Index p = 0; p < parts; ++p) {
    const Index strips_here = strips / parts + (p < strips % parts ? 1 : 0);
    const Index r0 = strip0 * shape.tile_rows;
    const Index r1 = std::min(m, (strip0 + strips_here) * shape.tile_rows);
    strip0 += strips_here;
    if (r1 <= r0) continue;
    GemmTask t;
    t.m = r1 - r0;
    t.n = oc;
    t.k = k;
    t.lhs.shape = {t.m, k};
    t.lhs.scale = g.patches.scale;
    t.lhs.zero_point = g.patches.zero_point;
    t.lhs.data.assign(
        g.patches.data.begin() + static_cast<std::ptrdiff_t>(r0 * k),
        g.patches.data.begin() + static_cast<std::ptrdiff_t>(r1 * k));
    t.rhs = g.rhs;
    t.requant = g.requant;
    t.out_scale = l.out.scale;
    tasks.push_back(std::move(t));
  }
  return tasks;
}

void merge_accel_stats(AccelStats& into, const AccelStats& from) {
  into.passes.insert(into.passes.end(), from.passes.begin(), from.passes.end());
  if (into.bank_writes.size() < from.bank_writes.size())
    into.bank_writes.resize(from.bank_writes.size(), 0);
  for (std::size_t i = 0; i < from.bank_writes.size(); ++i)
    into.bank_writes[i] += from.bank_writes[i];
  into.tasks_completed += from.tasks_completed;
  into.operands_dequeued += from.operands_dequeued;
}

}  // namespace

std::pair<std::int32_t, std::int32_t> activation_range(const std::string& activation,
                                                       const QuantInfo& out) {
  if (activation == "none") return {0, 255};
  if (activation == "relu") return {std::clamp<std::int32_t>(out.zero_point, 0, 255), 255};
  if (activation == "relu6") {
    const auto hi = static_cast<std::int32_t>(
        out.zero_point + std::llround(6.0 / out.scale));
    return {std::clamp<std::int32_t>(out.zero_point, 0, 255),
            std::clamp<std::int32_t>(hi, 0, 255)};
  }
  throw std::invalid_argument("unknown activation '" + activation + "'");
}

std::string digest_bytes(const std::vector<std::uint8_t>& bytes) {
  std::uint64_t h = 14695981039346656037ull;
  for (std::uint8_t b : bytes) {
    h ^= b;
    h *= 1099511628211ull;
  }
  static const char* hex = "0123456789abcdef";
  std::string s(16, '0');
  for (int i = 15; i >= 0; --i) {
    s[static_cast<std::size_t>(i)] = hex[h & 0xf];
    h >>= 4;
  }
  return s;
}

QuantTensor cpu_reference_layer(const ModelSpec& model, std::size_t layer_index,
                                const QuantTensor& input, const QuantTensor* residual) {
  const LayerSpec& l = model.layers[layer_index];
  switch (l.kind) {
    case LayerKind::Conv2d:
    case LayerKind::DepthwiseConv2d:
      return conv_reference(model, layer_index, input);
    case LayerKind::FullyConnected:
      return fc_reference(model, layer_index, input);
    case LayerKind::MaxPool:
      return pool_reference(l, input, true);
    case LayerKind::AvgPool:
      return pool_reference(l, input, false);
    case LayerKind::Add:
      if (!residual)
        throw std::invalid_argument("add layer '" + l.name + "': missing residual operand");
      return add_reference(l, input, *residual);
    case LayerKind::Clamp:
      return clamp_reference(l, input);
  }
  throw std::invalid_argument("unsupported layer kind");
}

std::pair<QuantTensor, InferenceReport> run_inference(const ModelSpec& model,
                                                      const QuantTensor& input,
                                                      DesignKind backend,
                                                      const AccelConfig& config) {
  model.validate();
  input.validate();
  if (input.shape != model.input_shape)
    throw std::invalid_argument("input shape does not match model '" + model.name + "'");
  if (input.zero_point != model.input.zero_point)
    throw std::invalid_argument("input zero_point does not match model '" + model.name + "'");

  AccelConfig cfg = config;
  cfg.kind = backend;
  cfg.validate();
  const auto cpu_rate = static_cast<std::uint64_t>(cfg.cpu_bytes_per_cycle);

  Engine engine(cfg.bus);
  std::unique_ptr<Accelerator> accel;
  if (backend != DesignKind::Cpu) accel = make_accelerator(cfg);

  InferenceReport report;
  report.model = model.name;
  report.backend = to_string(backend);

  std::map<std::string, QuantTensor> by_name;
  by_name.emplace("input", input);
  QuantTensor current = input;

  for (std::size_t i = 0; i < model.layers.size(); ++i) {
    const LayerSpec& l = model.layers[i];
    const bool conv_class =
        l.kind == LayerKind::Conv2d || l.kind == LayerKind::FullyConnected;
    QuantTensor next;
    std::uint64_t cycles = 0;

    if (conv_class && backend != DesignKind::Cpu) {
      const LoweredGemm g = lower_to_gemm(model, i, current);
      const auto tasks = batch_tasks(g, l, cfg);
      const DispatchResult res = dispatch(tasks, *accel, engine);
      next.shape = g.out_shape;
      next.scale = l.out.scale;
      next.zero_point = l.out.zero_point;
      next.data.reserve(static_cast<std::size_t>(next.numel()));
      for (const auto& part : res.outputs)
        next.data.insert(next.data.end(), part.data.begin(), part.data.end());
      cycles = ceil_div(g.im2col_bytes, cpu_rate) + res.report.elapsed_cycles;
      accumulate_counters(report.counters, res.report.counters);
      merge_accel_stats(report.accel, res.report.accel);
    } else {
      const QuantTensor* residual =
          l.kind == LayerKind::Add ? &by_name.at(l.add_input) : nullptr;
      next = cpu_reference_layer(model, i, current, residual);
      cycles = ceil_div(current.data.size() + next.data.size(), cpu_rate);
      report.counters.component_cycles["cpu.layers"] += cycles;
    }

    report.layers.push_back(LayerReport{l.name, to_string(l.kind), conv_class, cycles});
    if (conv_class)
      report.conv_cycles += cycles;
    else
      report.non_conv_cycles += cycles;
    by_name[l.name] = next;
    current = std::move(next);
  }

  report.total_cycles = report.conv_cycles + report.non_conv_cycles;
  report.output_digest = digest_bytes(current.data);
  return {std::move(current), std::move(report)};
}

}  // namespace gemmsim
