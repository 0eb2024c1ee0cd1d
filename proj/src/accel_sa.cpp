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

#include "gemmsim/accel_sa.hpp"

#include "gemmsim/accel_vm.hpp"

#include <map>
#include <memory>
#include <string>
#include <utility>
#include <vector>

namespace gemmsim {

namespace {

std::uint64_t ceil_div(std::uint64_t a, std::uint64_t b) { return (a + b - 1) / b; }
std::uint64_t buffer_words(std::uint64_t bytes) { return ceil_div(bytes, 4); }

struct SaTaskCtx {
  std::size_t task_index = 0;
  TaskShape shape;
  TilePlan plan;
  TaskConfigWords cfg;
  MatU8 inputs;  // padded_m x k, rows padded with the input zero point
};
using CtxPtr = std::shared_ptr<const SaTaskCtx>;
using TilePtr = std::shared_ptr<const MatU8>;

struct PassCmd {
  CtxPtr ctx;
  Index row_strip = 0, col_strip = 0;
  Index k_len = 0;
};

struct SaAccTileMsg {
  CtxPtr ctx;
  Index row_strip = 0, col_strip = 0;
  MatI32 acc;
};

using ByteChan = std::shared_ptr<FifoChannel<std::uint8_t>>;

struct SaWiring {
  AccelConfig config;
  std::shared_ptr<AccelStats> stats;
  AccelPorts ports;
  std::shared_ptr<FifoChannel<CtxPtr>> task_ch;
  std::shared_ptr<FifoChannel<TilePtr>> tile_ch;
  std::shared_ptr<FifoChannel<PassCmd>> pass_ch;
  std::shared_ptr<FifoChannel<int>> done_ch;
  std::shared_ptr<FifoChannel<SaAccTileMsg>> ppu_ch;
  std::vector<ByteChan> row_q;
  std::vector<ByteChan> col_q;
};
using Wiring = std::shared_ptr<SaWiring>;

Process input_handler(Engine& eng, Wiring w) {
  const auto& cfg = w->config;
  std::size_t task_index = 0;
  for (;;) {
    auto first = co_await w->ports.in->read();
    if (!first) break;
    if (first->header.kind != static_cast<std::uint32_t>(BufferKind::Config))
      throw SimError("sa input handler: expected config buffer first");
    const auto width = static_cast<std::uint64_t>(cfg.bus.width_bytes);
    co_await eng.work("sa.input_handler", ceil_div(first->total_bytes(), width));

    auto ctx = std::make_shared<SaTaskCtx>();
    ctx->task_index = task_index++;
    const Index m = first->header.m, n = first->header.n, k = first->header.k;
    ctx->shape = task_shape(m, n, k, cfg);
    ctx->plan = plan_weight_tiles(m, n, k, cfg);
    ctx->cfg = decode_task_config(*first);

    const std::uint64_t input_bytes =
        static_cast<std::uint64_t>(ctx->shape.padded_m) * static_cast<std::uint64_t>(k);
    if (input_bytes > cfg.sa.global_input_buffer_bytes)
      throw CapacityError("sa input handler: global input buffer capacity exceeded (" +
                          std::to_string(input_bytes) + " > " +
                          std::to_string(cfg.sa.global_input_buffer_bytes) + " bytes)");

    ctx->inputs.resize(ctx->shape.padded_m, k);
    for (const auto& [r0, r1] : input_row_ranges(ctx->shape, cfg.num_input_buffers)) {
      auto buf = co_await w->ports.in->read();
      if (!buf || buf->header.kind != static_cast<std::uint32_t>(BufferKind::Inputs))
        throw SimError("sa input handler: expected input buffer");
      co_await eng.work("sa.input_handler", ceil_div(buf->total_bytes(), width));
      ctx->inputs.middleRows(r0, r1 - r0) = decode_input_rows(*buf, r1 - r0, k);
    }
    CtxPtr ready(ctx);
    co_await w->task_ch->write(ready);

    for (const auto& tile : ctx->plan.tiles) {
      auto buf = co_await w->ports.in->read();
      if (!buf || buf->header.kind != static_cast<std::uint32_t>(BufferKind::Weights))
        throw SimError("sa input handler: expected weight buffer");
      if (tile.footprint_bytes() > cfg.sa.global_weight_buffer_bytes)
        throw CapacityError("sa input handler: global weight buffer capacity "
                            "exceeded by weight tile");
      co_await eng.work("sa.input_handler", ceil_div(buf->total_bytes(), width));
      TilePtr decoded =
          std::make_shared<MatU8>(decode_weight_tile(*buf, tile, ctx->plan.native_width));
      co_await w->tile_ch->write(decoded);
    }
  }
  w->task_ch->close();
  w->tile_ch->close();
}

Process row_feeder(Engine&, ByteChan q, CtxPtr ctx, Index row, Index k_len) {
  for (Index kk = 0; kk < k_len; ++kk) {
    std::uint8_t v = ctx->inputs(row, kk);
    co_await q->write(v);
  }
}

Process col_feeder(Engine&, ByteChan q, TilePtr tile, Index col, Index k_len) {
  for (Index kk = 0; kk < k_len; ++kk) {
    std::uint8_t v = (*tile)(kk, col);
    co_await q->write(v);
  }
}

// Feeds queues pass by pass; queue filling overlaps the array's consumption
// of the same pass. Passes are sequenced through done_ch so a pass's queues
// are drained before the next pass reuses them.
Process scheduler(Engine& eng, Wiring w) {
  const int rows = w->config.sa.rows;
  const int cols = w->config.sa.cols;
  for (;;) {
    auto ctx_opt = co_await w->task_ch->read();
    if (!ctx_opt) break;
    const CtxPtr ctx = *ctx_opt;
    for (const auto& tile : ctx->plan.tiles) {
      auto tile_ptr = co_await w->tile_ch->read();
      if (!tile_ptr) throw SimError("sa scheduler: weight tile stream ended early");
      const Index k_len = tile.k_len();
      for (Index rs = 0; rs < ctx->shape.row_strips(); ++rs)
        for (Index c0 = tile.n0; c0 < tile.n1; c0 += cols) {
          eng.counters().global_weight_buffer_reads +=
              buffer_words(static_cast<std::uint64_t>(k_len) * cols);
          eng.counters().local_buffer_reads +=
              buffer_words(static_cast<std::uint64_t>(k_len) * rows);
          for (int r = 0; r < rows; ++r)
            eng.spawn("sa.feed_row" + std::to_string(r),
                      row_feeder(eng, w->row_q[static_cast<std::size_t>(r)], ctx,
                                 rs * rows + r, k_len));
          for (int c = 0; c < cols; ++c)
            eng.spawn("sa.feed_col" + std::to_string(c),
                      col_feeder(eng, w->col_q[static_cast<std::size_t>(c)], *tile_ptr,
                                 c0 - tile.n0 + c, k_len));
          PassCmd cmd{ctx, rs, c0 / cols, k_len};
          co_await w->pass_ch->write(cmd);
          co_await w->done_ch->read();
        }
    }
  }
  w->pass_ch->close();
}

// One output-stationary pass: inputs enter row r skewed by r cycles and move
// right; weights enter column c skewed by c cycles and move down; every cell
// multiplies its current pair into its accumulator each cycle. The grid
// freezes whenever a required boundary operand is missing.
Process array(Engine& eng, Wiring w) {
  const int rows = w->config.sa.rows;
  const int cols = w->config.sa.cols;
  for (;;) {
    auto cmd_opt = co_await w->pass_ch->read();
    if (!cmd_opt) break;
    const PassCmd cmd = *cmd_opt;
    const Index K = cmd.k_len;
    const std::int32_t lhs_zp = cmd.ctx->cfg.lhs_zero_point;
    const std::int32_t rhs_zp = cmd.ctx->cfg.rhs_zero_point;

    MatI32 acc = MatI32::Zero(rows, cols);
    MatI32 in_reg = MatI32::Zero(rows, cols);
    MatI32 w_reg = MatI32::Zero(rows, cols);
    Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> in_val(rows, cols), w_val(rows, cols);
    in_val.setConstant(false);
    w_val.setConstant(false);
    std::vector<Index> row_taken(static_cast<std::size_t>(rows), 0);
    std::vector<Index> col_taken(static_cast<std::size_t>(cols), 0);
    Index step = 0;  // advances only on unstalled cycles
    Index corner_macs = 0;
    bool injected = false;
    std::uint64_t inject_cycle = 0;

    while (corner_macs < K) {
      // A row/column starts consuming after its skew delay and takes exactly
      // one operand per unstalled cycle until it has seen all K.
      bool ready = true;
      for (int r = 0; r < rows && ready; ++r)
        if (step >= r && row_taken[static_cast<std::size_t>(r)] < K &&
            w->row_q[static_cast<std::size_t>(r)]->occupancy() == 0)
          ready = false;
      for (int c = 0; c < cols && ready; ++c)
        if (step >= c && col_taken[static_cast<std::size_t>(c)] < K &&
            w->col_q[static_cast<std::size_t>(c)]->occupancy() == 0)
          ready = false;
      if (!ready) {
        co_await eng.work("sa.array_stall", 1);
        continue;
      }

      // Shift: inputs move right, weights move down; boundary cells pull
      // from the queues.
      for (int r = 0; r < rows; ++r) {
        for (int c = cols - 1; c > 0; --c) {
          in_reg(r, c) = in_reg(r, c - 1);
          in_val(r, c) = in_val(r, c - 1);
        }
        if (step >= r && row_taken[static_cast<std::size_t>(r)] < K) {
          auto v = w->row_q[static_cast<std::size_t>(r)]->try_read();
          in_reg(r, 0) = static_cast<std::int32_t>(*v);
          in_val(r, 0) = true;
          ++row_taken[static_cast<std::size_t>(r)];
          ++w->stats->operands_dequeued;
        } else {
          in_val(r, 0) = false;
        }
      }
      for (int c = 0; c < cols; ++c) {
        for (int r = rows - 1; r > 0; --r) {
          w_reg(r, c) = w_reg(r - 1, c);
          w_val(r, c) = w_val(r - 1, c);
        }
        if (step >= c && col_taken[static_cast<std::size_t>(c)] < K) {
          auto v = w->col_q[static_cast<std::size_t>(c)]->try_read();
          w_reg(0, c) = static_cast<std::int32_t>(*v);
          w_val(0, c) = true;
          ++col_taken[static_cast<std::size_t>(c)];
          ++w->stats->operands_dequeued;
        } else {
          w_val(0, c) = false;
        }
      }

      if (!injected) {
        injected = true;
        inject_cycle = eng.now();
      }

      std::uint64_t active = 0;
      for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c)
          if (in_val(r, c) && w_val(r, c)) {
            acc(r, c) += (in_reg(r, c) - lhs_zp) * (w_reg(r, c) - rhs_zp);
            ++active;
            if (r == rows - 1 && c == cols - 1) ++corner_macs;
          }
      eng.counters().mac_ops_issued += active;
      eng.counters().pe_active_cycles += active;
      ++step;
      co_await eng.work("sa.array", 1);
    }

    // The cycle after the corner cell's final MAC is when the tile is
    // observably complete.
    const std::uint64_t complete_cycle = eng.now();
    w->stats->passes.push_back(TilePassRecord{
        inject_cycle, complete_cycle, K,
        static_cast<std::uint64_t>(rows) * static_cast<std::uint64_t>(cols) *
            static_cast<std::uint64_t>(K)});
    SaAccTileMsg tile_msg{cmd.ctx, cmd.row_strip, cmd.col_strip, std::move(acc)};
    co_await w->ppu_ch->write(tile_msg);
    int token = 1;
    co_await w->done_ch->write(token);
  }
  w->ppu_ch->close();
}

Process sa_ppu(Engine& eng, Wiring w) {
  const auto& sa = w->config.sa;
  struct Assembly {
    CtxPtr ctx;
    std::vector<std::uint8_t> stream;
    std::size_t tiles_seen = 0;
  };
  std::map<std::size_t, Assembly> pending;
  for (;;) {
    auto msg = co_await w->ppu_ch->read();
    if (!msg) break;
    auto& asmb = pending[msg->ctx->task_index];
    asmb.ctx = msg->ctx;
    if (sa.ppu_enabled)
      co_await eng.work("sa.ppu",
                        static_cast<std::uint64_t>(sa.ppu_cycles_per_column) *
                            static_cast<std::uint64_t>(sa.cols));
    // Tiles drain column by column.
    for (Index c = 0; c < sa.cols; ++c)
      for (Index r = 0; r < sa.rows; ++r) {
        if (sa.ppu_enabled) {
          asmb.stream.push_back(requantize(msg->acc(r, c), msg->col_strip * sa.cols + c,
                                           msg->ctx->cfg.requant));
        } else {
          const auto v = static_cast<std::uint32_t>(msg->acc(r, c));
          asmb.stream.push_back(static_cast<std::uint8_t>(v & 0xff));
          asmb.stream.push_back(static_cast<std::uint8_t>((v >> 8) & 0xff));
          asmb.stream.push_back(static_cast<std::uint8_t>((v >> 16) & 0xff));
          asmb.stream.push_back(static_cast<std::uint8_t>((v >> 24) & 0xff));
        }
      }
    ++asmb.tiles_seen;
    const auto expected = static_cast<std::size_t>(msg->ctx->shape.row_strips()) *
                          static_cast<std::size_t>(msg->ctx->shape.col_strips());
    if (asmb.tiles_seen == expected) {
      TaskOutput done{msg->ctx->task_index, std::move(asmb.stream)};
      co_await w->ports.out->write(done);
      ++w->stats->tasks_completed;
      pending.erase(msg->ctx->task_index);
    }
  }
  if (!pending.empty()) throw SimError("sa ppu: incomplete output stream at shutdown");
  w->ports.out->close();
}

}  // namespace

AccelPorts SaAccel::attach(Engine& engine) {
  *stats_ = AccelStats{};
  auto w = std::make_shared<SaWiring>();
  w->config = config_;
  w->stats = stats_;
  w->ports.in = engine.make_channel<PackedBuffer>("sa.dma_in", 8);
  w->ports.out = engine.make_channel<TaskOutput>("sa.dma_out", 4);
  w->task_ch = engine.make_channel<CtxPtr>("sa.tasks", 2);
  w->tile_ch = engine.make_channel<TilePtr>("sa.weight_tiles", 1);
  w->pass_ch = engine.make_channel<PassCmd>("sa.passes", 1);
  w->done_ch = engine.make_channel<int>("sa.pass_done", 1);
  w->ppu_ch = engine.make_channel<SaAccTileMsg>("sa.ppu.in", 2);
  const auto depth = static_cast<std::size_t>(config_.sa.queue_depth);
  for (int r = 0; r < config_.sa.rows; ++r)
    w->row_q.push_back(engine.make_channel<std::uint8_t>("sa.row_q" + std::to_string(r), depth));
  for (int c = 0; c < config_.sa.cols; ++c)
    w->col_q.push_back(engine.make_channel<std::uint8_t>("sa.col_q" + std::to_string(c), depth));

  engine.spawn("sa.input_handler", input_handler(engine, w));
  engine.spawn("sa.scheduler", scheduler(engine, w));
  engine.spawn("sa.array", array(engine, w));
  engine.spawn("sa.ppu", sa_ppu(engine, w));
  return w->ports;
}

std::unique_ptr<Accelerator> make_accelerator(const AccelConfig& config) {
  switch (config.kind) {
    case DesignKind::Vm: return std::make_unique<VmAccel>(config);
    case DesignKind::Sa: return std::make_unique<SaAccel>(config);
    case DesignKind::Cpu:
      throw std::invalid_argument("make_accelerator: cpu backend has no accelerator model");
  }
  throw std::invalid_argument("make_accelerator: unknown design kind");
}

}  // namespace gemmsim
