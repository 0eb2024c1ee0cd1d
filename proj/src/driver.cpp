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

#include "gemmsim/driver.hpp"

#include <algorithm>
#include <memory>
#include <string>
#include <utility>

namespace gemmsim {

namespace {

std::uint64_t ceil_div(std::uint64_t a, std::uint64_t b) { return (a + b - 1) / b; }

struct TaskMeta {
  Index m = 0, n = 0, k = 0;
  RequantParams requant;
  double out_scale = 1.0;
};

struct TaskBundle {
  std::size_t index = 0;
  std::vector<PackedBuffer> buffers;
};

struct DispatchState {
  AccelConfig config;
  bool ppu_enabled = true;
  std::vector<TaskBundle> bundles;
  std::vector<TaskMeta> meta;
  AccelPorts ports;
  std::shared_ptr<FifoChannel<TaskBundle>> bundle_ch;
  std::vector<QuantTensor> outputs;
  std::uint64_t cpu_free_at = 0;  // the host CPU is a serial resource
  int out_link_rr = 0;
};
using State = std::shared_ptr<DispatchState>;

// Claims the modeled CPU for `cycles`, charging them to `component`.
Delay claim_cpu(Engine& eng, State st, const std::string& component, std::uint64_t cycles) {
  const std::uint64_t start = std::max(eng.now(), st->cpu_free_at);
  st->cpu_free_at = start + cycles;
  eng.counters().component_cycles[component] += cycles;
  return eng.delay(st->cpu_free_at - eng.now());
}

std::uint64_t pack_cycles(const State& st, const TaskBundle& b) {
  return ceil_div(total_wire_bytes(b.buffers),
                  static_cast<std::uint64_t>(st->config.cpu_bytes_per_cycle));
}

std::uint64_t unpack_cycles(const State& st, std::size_t stream_bytes) {
  const auto rate = static_cast<std::uint64_t>(st->config.cpu_bytes_per_cycle);
  std::uint64_t cycles = ceil_div(stream_bytes, rate);
  // Raw accumulators still need the CPU-side requantization pass.
  if (!st->ppu_enabled) cycles += ceil_div(stream_bytes, rate);
  return cycles;
}

// Issues every buffer of a bundle on its assigned link; transfers on
// distinct links overlap, buffers sharing a link serialize.
Delay scatter_dma(Engine& eng, const TaskBundle& b) {
  std::uint64_t max_end = eng.now();
  for (const auto& buf : b.buffers) {
    const Delay d = eng.dma(buf.total_bytes(), buf.link, DmaDir::In);
    max_end = std::max(max_end, eng.now() + d.cycles);
  }
  eng.counters().component_cycles["driver.transfer_in"] += max_end - eng.now();
  return eng.delay(max_end - eng.now());
}

QuantTensor assemble_output(const State& st, const TaskMeta& meta,
                            const std::vector<std::uint8_t>& stream) {
  const TaskShape shape = task_shape(meta.m, meta.n, meta.k, st->config);
  const TilePlan plan = plan_weight_tiles(meta.m, meta.n, meta.k, st->config);
  const TileOrder order = output_tile_order(shape, plan, st->config.kind);
  MatU8 result;
  if (st->ppu_enabled) {
    result = unpack_outputs_q8(stream, shape, order);
  } else {
    const MatI32 acc = unpack_outputs_acc(stream, shape, order);
    const QuantTensor q = requantize_matrix(acc, meta.requant, meta.out_scale);
    result = q.matrix();
  }
  QuantTensor out;
  out.shape = {meta.m, meta.n};
  out.scale = meta.out_scale;
  out.zero_point = meta.requant.output_zero_point;
  out.data.assign(result.data(), result.data() + result.size());
  return out;
}

Process packer(Engine& eng, State st) {
  for (auto& bundle : st->bundles) {
    co_await claim_cpu(eng, st, "cpu.pack", pack_cycles(st, bundle));
    co_await st->bundle_ch->write(bundle);
  }
  st->bundle_ch->close();
}

Process transferrer(Engine& eng, State st) {
  for (;;) {
    auto bundle = co_await st->bundle_ch->read();
    if (!bundle) break;
    co_await scatter_dma(eng, *bundle);
    for (auto& buf : bundle->buffers) co_await st->ports.in->write(buf);
  }
  st->ports.in->close();
}

Process collector(Engine& eng, State st) {
  for (;;) {
    auto out = co_await st->ports.out->read();
    if (!out) break;
    const int link = st->out_link_rr;
    st->out_link_rr = (st->out_link_rr + 1) % st->config.bus.num_links;
    const Delay d = eng.dma(out->stream.size(), link, DmaDir::Out);
    eng.counters().component_cycles["driver.transfer_out"] += d.cycles;
    co_await d;
    co_await claim_cpu(eng, st, "cpu.unpack", unpack_cycles(st, out->stream.size()));
    st->outputs[out->task_index] =
        assemble_output(st, st->meta[out->task_index], out->stream);
  }
}

Process serial_driver(Engine& eng, State st) {
  for (auto& bundle : st->bundles) {
    const std::size_t index = bundle.index;
    co_await claim_cpu(eng, st, "cpu.pack", pack_cycles(st, bundle));
    co_await scatter_dma(eng, bundle);
    for (auto& buf : bundle.buffers) co_await st->ports.in->write(buf);
    if (index + 1 == st->bundles.size()) st->ports.in->close();
    auto out = co_await st->ports.out->read();
    if (!out || out->task_index != index)
      throw SimError("serial dispatch: output stream out of order");
    const Delay d = eng.dma(out->stream.size(), 0, DmaDir::Out);
    eng.counters().component_cycles["driver.transfer_out"] += d.cycles;
    co_await d;
    co_await claim_cpu(eng, st, "cpu.unpack", unpack_cycles(st, out->stream.size()));
    st->outputs[index] = assemble_output(st, st->meta[index], out->stream);
  }
  if (st->bundles.empty()) st->ports.in->close();
}

}  // namespace

CycleCounters counters_delta(const CycleCounters& a, const CycleCounters& b) {
  CycleCounters d;
  d.component_cycles = a.component_cycles;
  for (const auto& [k, v] : b.component_cycles) d.component_cycles[k] -= v;
  d.producer_stall_cycles = a.producer_stall_cycles - b.producer_stall_cycles;
  d.consumer_stall_cycles = a.consumer_stall_cycles - b.consumer_stall_cycles;
  d.dma_bytes_in = a.dma_bytes_in - b.dma_bytes_in;
  d.dma_bytes_out = a.dma_bytes_out - b.dma_bytes_out;
  d.global_weight_buffer_reads = a.global_weight_buffer_reads - b.global_weight_buffer_reads;
  d.local_buffer_reads = a.local_buffer_reads - b.local_buffer_reads;
  d.mac_ops_issued = a.mac_ops_issued - b.mac_ops_issued;
  d.pe_active_cycles = a.pe_active_cycles - b.pe_active_cycles;
  d.partial_sum_spill_bytes = a.partial_sum_spill_bytes - b.partial_sum_spill_bytes;
  return d;
}

DispatchResult dispatch(const std::vector<GemmTask>& tasks, Accelerator& accel,
                        Engine& engine, DispatchMode mode) {
  auto st = std::make_shared<DispatchState>();
  st->config = accel.config();
  st->ppu_enabled = st->config.kind == DesignKind::Sa ? st->config.sa.ppu_enabled
                                                      : st->config.vm.ppu_enabled;
  st->outputs.resize(tasks.size());
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    const GemmTask& t = tasks[i];
    t.validate();
    const TilePlan plan = plan_weight_tiles(t.m, t.n, t.k, st->config);
    st->bundles.push_back(TaskBundle{i, pack_operands(t, plan, st->config)});
    st->meta.push_back(TaskMeta{t.m, t.n, t.k, t.requant, t.out_scale});
  }

  const CycleCounters before = engine.snapshot_counters();
  const std::uint64_t start = engine.now();
  st->ports = accel.attach(engine);
  st->bundle_ch = engine.make_channel<TaskBundle>("driver.bundles", 1);

  if (mode == DispatchMode::Pipelined) {
    engine.spawn("driver.packer", packer(engine, st));
    engine.spawn("driver.transferrer", transferrer(engine, st));
    engine.spawn("driver.collector", collector(engine, st));
  } else {
    engine.spawn("driver.serial", serial_driver(engine, st));
  }

  DispatchResult result;
  result.report.start_cycle = start;
  result.report.end_cycle = engine.run_until_idle();
  result.report.elapsed_cycles = result.report.end_cycle - start;
  result.report.counters = counters_delta(engine.snapshot_counters(), before);
  result.report.accel = accel.stats();
  result.outputs = std::move(st->outputs);
  return result;
}

ConvGeom conv_geometry(Index in_h, Index in_w, Index kernel_h, Index kernel_w,
                       Index stride_h, Index stride_w, bool same_padding) {
  if (kernel_h <= 0 || kernel_w <= 0 || stride_h <= 0 || stride_w <= 0)
    throw std::invalid_argument("conv_geometry: kernel and stride must be positive");
  ConvGeom g;
  g.kernel_h = kernel_h;
  g.kernel_w = kernel_w;
  g.stride_h = stride_h;
  g.stride_w = stride_w;
  if (same_padding) {
    g.out_h = (in_h + stride_h - 1) / stride_h;
    g.out_w = (in_w + stride_w - 1) / stride_w;
    const Index pad_h = std::max<Index>(0, (g.out_h - 1) * stride_h + kernel_h - in_h);
    const Index pad_w = std::max<Index>(0, (g.out_w - 1) * stride_w + kernel_w - in_w);
    g.pad_top = pad_h / 2;
    g.pad_left = pad_w / 2;
  } else {
    g.out_h = (in_h - kernel_h) / stride_h + 1;
    g.out_w = (in_w - kernel_w) / stride_w + 1;
    if (in_h < kernel_h || in_w < kernel_w)
      throw std::invalid_argument("conv_geometry: kernel larger than input");
  }
  if (g.out_h <= 0 || g.out_w <= 0)
    throw std::invalid_argument("conv_geometry: empty output");
  return g;
}

QuantTensor im2col(const QuantTensor& input, const ConvGeom& g) {
  input.validate();
  if (input.shape.size() != 4)
    throw std::invalid_argument("im2col: input must be NHWC");
  const Index n = input.shape[0], h = input.shape[1], w = input.shape[2], c = input.shape[3];
  const Index rows = n * g.out_h * g.out_w;
  const Index cols = g.kernel_h * g.kernel_w * c;

  QuantTensor patches;
  patches.shape = {rows, cols};
  patches.scale = input.scale;
  patches.zero_point = input.zero_point;
  patches.data.resize(static_cast<std::size_t>(rows * cols));

  std::size_t pos = 0;
  for (Index b = 0; b < n; ++b)
    for (Index oh = 0; oh < g.out_h; ++oh)
      for (Index ow = 0; ow < g.out_w; ++ow)
        for (Index dy = 0; dy < g.kernel_h; ++dy)
          for (Index dx = 0; dx < g.kernel_w; ++dx)
            for (Index ch = 0; ch < c; ++ch) {
              const Index iy = oh * g.stride_h + dy - g.pad_top;
              const Index ix = ow * g.stride_w + dx - g.pad_left;
              std::uint8_t v = static_cast<std::uint8_t>(input.zero_point);
              if (iy >= 0 && iy < h && ix >= 0 && ix < w)
                v = input.data[static_cast<std::size_t>(input.offset(b, iy, ix, ch))];
              patches.data[pos++] = v;
            }
  return patches;
}

}  // namespace gemmsim
