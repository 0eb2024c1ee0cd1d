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

#include "gemmsim/accel_vm.hpp"

#include <map>
#include <memory>
#include <string>
#include <utility>

namespace gemmsim {

namespace {

std::uint64_t ceil_div(std::uint64_t a, std::uint64_t b) { return (a + b - 1) / b; }

// Buffer reads are counted in 32-bit BRAM words.
std::uint64_t buffer_words(std::uint64_t bytes) { return ceil_div(bytes, 4); }

struct VmTaskCtx {
  std::size_t task_index = 0;
  TaskShape shape;
  TilePlan plan;
  TaskConfigWords cfg;
  std::vector<MatU8> unit_inputs;  // owned row strips, strip-major
};
using CtxPtr = std::shared_ptr<const VmTaskCtx>;
using TilePtr = std::shared_ptr<const MatU8>;

struct StripCmd {
  CtxPtr ctx;
  TilePtr tile;
  Index col_in_tile = 0;
  Index k0 = 0, k1 = 0;
  Index n_strip = 0;
  bool last_k = true;
};

struct AccTileMsg {
  CtxPtr ctx;
  Index row_strip = 0, col_strip = 0;
  MatI32 acc;
};

struct OutTileMsg {
  CtxPtr ctx;
  Index row_strip = 0, col_strip = 0;
  std::vector<std::uint8_t> bytes;
};

struct VmWiring {
  AccelConfig config;
  std::shared_ptr<AccelStats> stats;
  AccelPorts ports;
  std::shared_ptr<FifoChannel<CtxPtr>> task_ch;
  std::shared_ptr<FifoChannel<TilePtr>> tile_ch;
  std::vector<std::shared_ptr<FifoChannel<StripCmd>>> unit_ch;
  std::vector<std::shared_ptr<FifoChannel<AccTileMsg>>> ppu_ch;
  std::shared_ptr<FifoChannel<OutTileMsg>> xbar_ch;
};
using Wiring = std::shared_ptr<VmWiring>;

// Routing charge: the handler writes bus words across num_banks ports, one
// word per port per cycle.
Delay route_buffer(Engine& eng, const Wiring& w, const PackedBuffer& buf) {
  const auto width = static_cast<std::uint64_t>(w->config.bus.width_bytes);
  const std::uint64_t payload_words = ceil_div(buf.payload.size(), width);
  const auto banks = static_cast<std::uint64_t>(w->config.vm.num_banks);
  for (std::uint64_t i = 0; i < payload_words; ++i)
    ++w->stats->bank_writes[static_cast<std::size_t>(i % banks)];
  const std::uint64_t total_words = ceil_div(buf.total_bytes(), width);
  return eng.work("vm.input_handler", ceil_div(total_words, banks));
}

Process input_handler(Engine& eng, Wiring w) {
  const auto& cfg = w->config;
  std::size_t task_index = 0;
  for (;;) {
    auto first = co_await w->ports.in->read();
    if (!first) break;
    if (first->header.kind != static_cast<std::uint32_t>(BufferKind::Config))
      throw SimError("vm input handler: expected config buffer first");
    co_await route_buffer(eng, w, *first);

    auto ctx = std::make_shared<VmTaskCtx>();
    ctx->task_index = task_index++;
    const Index m = first->header.m, n = first->header.n, k = first->header.k;
    ctx->shape = task_shape(m, n, k, cfg);
    ctx->plan = plan_weight_tiles(m, n, k, cfg);
    ctx->cfg = decode_task_config(*first);

    // Inputs arrive next, one buffer per row range.
    MatU8 all_rows(ctx->shape.padded_m, k);
    for (const auto& [r0, r1] : input_row_ranges(ctx->shape, cfg.num_input_buffers)) {
      auto buf = co_await w->ports.in->read();
      if (!buf || buf->header.kind != static_cast<std::uint32_t>(BufferKind::Inputs))
        throw SimError("vm input handler: expected input buffer");
      co_await route_buffer(eng, w, *buf);
      all_rows.middleRows(r0, r1 - r0) = decode_input_rows(*buf, r1 - r0, k);
    }

    const int units = cfg.vm.num_gemm_units;
    const Index row_strips = ctx->shape.row_strips();
    const Index tile_rows = ctx->shape.tile_rows;
    ctx->unit_inputs.resize(static_cast<std::size_t>(units));
    for (int u = 0; u < units; ++u) {
      Index owned = 0;
      for (Index rs = u; rs < row_strips; rs += units) ++owned;
      const std::uint64_t bytes =
          static_cast<std::uint64_t>(owned) * tile_rows * static_cast<std::uint64_t>(k);
      if (bytes > cfg.vm.local_input_buffer_bytes)
        throw CapacityError("vm unit " + std::to_string(u) +
                            ": local input buffer capacity exceeded (" +
                            std::to_string(bytes) + " > " +
                            std::to_string(cfg.vm.local_input_buffer_bytes) + " bytes)");
      MatU8& mine = ctx->unit_inputs[static_cast<std::size_t>(u)];
      mine.resize(owned * tile_rows, k);
      Index o = 0;
      for (Index rs = u; rs < row_strips; rs += units, ++o)
        mine.middleRows(o * tile_rows, tile_rows) = all_rows.middleRows(rs * tile_rows, tile_rows);
    }
    CtxPtr ready(ctx);
    co_await w->task_ch->write(ready);

    for (const auto& tile : ctx->plan.tiles) {
      auto buf = co_await w->ports.in->read();
      if (!buf || buf->header.kind != static_cast<std::uint32_t>(BufferKind::Weights))
        throw SimError("vm input handler: expected weight buffer");
      if (tile.footprint_bytes() > cfg.vm.global_weight_buffer_bytes)
        throw CapacityError("vm input handler: global weight buffer capacity "
                            "exceeded by weight tile (" +
                            std::to_string(tile.footprint_bytes()) + " > " +
                            std::to_string(cfg.vm.global_weight_buffer_bytes) + " bytes)");
      co_await route_buffer(eng, w, *buf);
      TilePtr decoded = std::make_shared<MatU8>(
          decode_weight_tile(*buf, tile, ctx->plan.native_width));
      co_await w->tile_ch->write(decoded);
    }
  }
  w->task_ch->close();
  w->tile_ch->close();
}

Process scheduler(Engine& eng, Wiring w) {
  const auto& vm = w->config.vm;
  for (;;) {
    auto ctx_opt = co_await w->task_ch->read();
    if (!ctx_opt) break;
    const CtxPtr ctx = *ctx_opt;
    const Index native = ctx->plan.native_width;
    for (const auto& tile : ctx->plan.tiles) {
      auto tile_ptr = co_await w->tile_ch->read();
      if (!tile_ptr) throw SimError("vm scheduler: weight tile stream ended early");
      for (Index s = tile.n0; s < tile.n1; s += native) {
        const Index k_len = tile.k_len();
        const std::uint64_t strip_words =
            buffer_words(static_cast<std::uint64_t>(k_len) * native);
        if (vm.broadcast_enabled)
          eng.counters().global_weight_buffer_reads += strip_words;
        co_await eng.work("vm.scheduler",
                          ceil_div(strip_words, static_cast<std::uint64_t>(vm.num_banks)));
        for (auto& ch : w->unit_ch) {
          StripCmd cmd{ctx, *tile_ptr, s - tile.n0, tile.k0, tile.k1, s / native,
                       tile.last_k};
          co_await ch->write(cmd);
        }
      }
    }
  }
  for (auto& ch : w->unit_ch) ch->close();
}

Process gemm_unit(Engine& eng, Wiring w, int u) {
  const auto& vm = w->config.vm;
  std::map<std::pair<Index, Index>, MatI32> acc_store;
  for (;;) {
    auto cmd_opt = co_await w->unit_ch[static_cast<std::size_t>(u)]->read();
    if (!cmd_opt) break;
    const StripCmd& cmd = *cmd_opt;
    const Index k_len = cmd.k1 - cmd.k0;
    const std::uint64_t strip_bytes = static_cast<std::uint64_t>(k_len) * vm.tile_dim;
    if (!vm.broadcast_enabled)
      eng.counters().global_weight_buffer_reads += buffer_words(strip_bytes);
    if (strip_bytes > vm.local_weight_tile_bytes)
      throw CapacityError("vm unit " + std::to_string(u) +
                          ": weight strip exceeds local tile buffer");
    const MatU8 weight_cols = cmd.tile->block(0, cmd.col_in_tile, k_len, vm.tile_dim);
    for (Index rs = u; rs < cmd.ctx->shape.row_strips(); rs += vm.num_gemm_units) {
      const Index o = (rs - u) / vm.num_gemm_units;
      const MatU8 input_rows =
          cmd.ctx->unit_inputs[static_cast<std::size_t>(u)].block(
              o * vm.tile_dim, cmd.k0, vm.tile_dim, k_len);
      auto [acc, cycles] = vm_unit_tile_compute(input_rows, cmd.ctx->cfg.lhs_zero_point,
                                                weight_cols, cmd.ctx->cfg.rhs_zero_point, vm);
      eng.counters().local_buffer_reads += 2 * buffer_words(strip_bytes);
      eng.counters().mac_ops_issued += 16ull * static_cast<std::uint64_t>(k_len);
      eng.counters().pe_active_cycles += cycles;
      const std::uint64_t start = eng.now();
      co_await eng.work("vm.unit" + std::to_string(u), cycles);
      w->stats->passes.push_back(TilePassRecord{start, eng.now() - 1, k_len,
                                                16ull * static_cast<std::uint64_t>(k_len)});
      const auto key = std::make_pair(rs, cmd.n_strip);
      auto it = acc_store.find(key);
      if (it == acc_store.end())
        it = acc_store.emplace(key, MatI32::Zero(vm.tile_dim, vm.tile_dim)).first;
      it->second += acc;
      if (cmd.last_k) {
        AccTileMsg out{cmd.ctx, rs, cmd.n_strip, std::move(it->second)};
        acc_store.erase(it);
        co_await w->ppu_ch[static_cast<std::size_t>(u)]->write(out);
      }
    }
  }
  w->ppu_ch[static_cast<std::size_t>(u)]->close();
}

Process ppu(Engine& eng, Wiring w, int u) {
  const auto& vm = w->config.vm;
  for (;;) {
    auto msg = co_await w->ppu_ch[static_cast<std::size_t>(u)]->read();
    if (!msg) break;
    std::vector<std::uint8_t> bytes;
    if (vm.ppu_enabled) {
      co_await eng.work("vm.ppu" + std::to_string(u),
                        static_cast<std::uint64_t>(vm.ppu_cycles_per_tile));
      bytes.reserve(16);
      for (Index r = 0; r < vm.tile_dim; ++r)
        for (Index c = 0; c < vm.tile_dim; ++c)
          bytes.push_back(requantize(msg->acc(r, c), msg->col_strip * vm.tile_dim + c,
                                     msg->ctx->cfg.requant));
    } else {
      bytes.reserve(64);
      for (Index r = 0; r < vm.tile_dim; ++r)
        for (Index c = 0; c < vm.tile_dim; ++c) {
          const auto v = static_cast<std::uint32_t>(msg->acc(r, c));
          bytes.push_back(static_cast<std::uint8_t>(v & 0xff));
          bytes.push_back(static_cast<std::uint8_t>((v >> 8) & 0xff));
          bytes.push_back(static_cast<std::uint8_t>((v >> 16) & 0xff));
          bytes.push_back(static_cast<std::uint8_t>((v >> 24) & 0xff));
        }
    }
    OutTileMsg out{msg->ctx, msg->row_strip, msg->col_strip, std::move(bytes)};
    co_await w->xbar_ch->write(out);
  }
  w->xbar_ch->close();
}

Process crossbar(Engine& eng, Wiring w) {
  struct Collect {
    CtxPtr ctx;
    std::map<std::pair<Index, Index>, std::vector<std::uint8_t>> tiles;
  };
  std::map<std::size_t, Collect> pending;
  for (;;) {
    auto msg = co_await w->xbar_ch->read();
    if (!msg) break;
    auto& col = pending[msg->ctx->task_index];
    col.ctx = msg->ctx;
    if (!col.tiles.emplace(std::make_pair(msg->row_strip, msg->col_strip),
                           std::move(msg->bytes)).second)
      throw SimError("vm crossbar: duplicate output tile tag (" +
                     std::to_string(msg->row_strip) + "," +
                     std::to_string(msg->col_strip) + ")");
    co_await eng.work("vm.crossbar", 1);
    while (!pending.empty()) {
      auto it = pending.begin();
      Collect& c = it->second;
      const auto expected = static_cast<std::size_t>(c.ctx->shape.row_strips()) *
                            static_cast<std::size_t>(c.ctx->shape.col_strips());
      if (c.tiles.size() != expected) break;
      std::vector<std::uint8_t> stream;
      for (Index tr = 0; tr < c.ctx->shape.row_strips(); ++tr)
        for (Index tc = 0; tc < c.ctx->shape.col_strips(); ++tc) {
          const auto& t = c.tiles.at(std::make_pair(tr, tc));
          stream.insert(stream.end(), t.begin(), t.end());
        }
      TaskOutput done{it->first, std::move(stream)};
      co_await w->ports.out->write(done);
      ++w->stats->tasks_completed;
      pending.erase(it);
    }
  }
  if (!pending.empty())
    throw SimError("vm crossbar: missing output tiles at shutdown");
  w->ports.out->close();
}

}  // namespace

std::vector<VmScheduleEntry> vm_broadcast_schedule(const TilePlan& plan,
                                                   const TaskShape& shape) {
  std::vector<VmScheduleEntry> entries;
  for (const auto& tile : plan.tiles)
    for (Index s = tile.n0; s < tile.n1; s += plan.native_width) {
      VmScheduleEntry e;
      e.k0 = tile.k0;
      e.k1 = tile.k1;
      e.n_strip = s / plan.native_width;
      e.last_k = tile.last_k;
      for (Index rs = 0; rs < shape.row_strips(); ++rs) e.row_strips.push_back(rs);
      entries.push_back(std::move(e));
    }
  return entries;
}

std::pair<MatI32, std::uint64_t> vm_unit_tile_compute(const MatU8& input_rows,
                                                      std::int32_t lhs_zp,
                                                      const MatU8& weight_cols,
                                                      std::int32_t rhs_zp,
                                                      const VmConfig& config) {
  const Index k = input_rows.cols();
  if (k <= 0) throw std::invalid_argument("vm_unit_tile_compute: k must be positive");
  if (input_rows.rows() != config.tile_dim || weight_cols.cols() != config.tile_dim ||
      weight_cols.rows() != k)
    throw std::invalid_argument("vm_unit_tile_compute: operand shapes do not match");
  const MatI32 a = (input_rows.cast<std::int32_t>().array() - lhs_zp).matrix();
  const MatI32 b = (weight_cols.cast<std::int32_t>().array() - rhs_zp).matrix();
  const std::uint64_t cycles =
      ceil_div(static_cast<std::uint64_t>(k), static_cast<std::uint64_t>(config.macs_per_output)) +
      static_cast<std::uint64_t>(config.adder_tree_latency_cycles);
  return {a * b, cycles};
}

std::vector<std::uint8_t> crossbar_collect(std::vector<VmTaggedTile> tiles,
                                           Index row_strips, Index col_strips) {
  std::map<std::pair<Index, Index>, std::vector<std::uint8_t>> m;
  for (auto& t : tiles) {
    if (t.row_strip < 0 || t.row_strip >= row_strips || t.col_strip < 0 ||
        t.col_strip >= col_strips)
      throw SimError("crossbar_collect: tile tag out of range");
    if (!m.emplace(std::make_pair(t.row_strip, t.col_strip), std::move(t.bytes)).second)
      throw SimError("crossbar_collect: duplicate tile tag");
  }
  if (static_cast<Index>(m.size()) != row_strips * col_strips)
    throw SimError("crossbar_collect: missing tile tag");
  std::vector<std::uint8_t> out;
  for (Index tr = 0; tr < row_strips; ++tr)
    for (Index tc = 0; tc < col_strips; ++tc) {
      const auto& bytes = m.at(std::make_pair(tr, tc));
      out.insert(out.end(), bytes.begin(), bytes.end());
    }
  return out;
}

AccelPorts VmAccel::attach(Engine& engine) {
  *stats_ = AccelStats{};
  stats_->bank_writes.assign(static_cast<std::size_t>(config_.vm.num_banks), 0);
  auto w = std::make_shared<VmWiring>();
  w->config = config_;
  w->stats = stats_;
  w->ports.in = engine.make_channel<PackedBuffer>("vm.dma_in", 8);
  w->ports.out = engine.make_channel<TaskOutput>("vm.dma_out", 4);
  w->task_ch = engine.make_channel<CtxPtr>("vm.tasks", 2);
  w->tile_ch = engine.make_channel<TilePtr>("vm.weight_tiles", 2);
  const int units = config_.vm.num_gemm_units;
  for (int u = 0; u < units; ++u) {
    w->unit_ch.push_back(
        engine.make_channel<StripCmd>("vm.unit" + std::to_string(u) + ".cmd", 2));
    w->ppu_ch.push_back(
        engine.make_channel<AccTileMsg>("vm.ppu" + std::to_string(u) + ".in", 2));
  }
  w->xbar_ch = engine.make_channel<OutTileMsg>("vm.xbar.in", 8);
  for (int u = 1; u < units; ++u) w->xbar_ch->add_producer();

  engine.spawn("vm.input_handler", input_handler(engine, w));
  engine.spawn("vm.scheduler", scheduler(engine, w));
  for (int u = 0; u < units; ++u)
    engine.spawn("vm.unit" + std::to_string(u), gemm_unit(engine, w, u));
  for (int u = 0; u < units; ++u)
    engine.spawn("vm.ppu" + std::to_string(u), ppu(engine, w, u));
  engine.spawn("vm.crossbar", crossbar(engine, w));
  return w->ports;
}

}  // namespace gemmsim
