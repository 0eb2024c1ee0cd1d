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

#include "gemmsim/packing.hpp"

#include <algorithm>
#include <cstring>
#include <stdexcept>

namespace gemmsim {

namespace {

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  out.push_back(static_cast<std::uint8_t>(v & 0xff));
  out.push_back(static_cast<std::uint8_t>((v >> 8) & 0xff));
  out.push_back(static_cast<std::uint8_t>((v >> 16) & 0xff));
  out.push_back(static_cast<std::uint8_t>((v >> 24) & 0xff));
}

std::uint32_t get_u32(const std::uint8_t* p) {
  return std::uint32_t{p[0]} | (std::uint32_t{p[1]} << 8) | (std::uint32_t{p[2]} << 16) |
         (std::uint32_t{p[3]} << 24);
}

void put_i32(std::vector<std::uint8_t>& out, std::int32_t v) {
  put_u32(out, static_cast<std::uint32_t>(v));
}

std::int32_t get_i32(const std::uint8_t* p) {
  return static_cast<std::int32_t>(get_u32(p));
}

void pad_to_multiple(std::vector<std::uint8_t>& payload, std::size_t multiple,
                     std::uint8_t fill) {
  while (payload.size() % multiple != 0) payload.push_back(fill);
}

Index round_up(Index v, Index multiple) { return ((v + multiple - 1) / multiple) * multiple; }

// Split `units` items into `parts` equal-as-possible contiguous chunks.
std::vector<Index> split_even(Index units, Index parts) {
  std::vector<Index> sizes(static_cast<std::size_t>(parts), units / parts);
  for (Index i = 0; i < units % parts; ++i) ++sizes[static_cast<std::size_t>(i)];
  return sizes;
}

}  // namespace

void GemmTask::validate() const {
  if (m <= 0 || n <= 0 || k <= 0)
    throw std::invalid_argument("GemmTask: dimensions must be positive");
  lhs.validate();
  rhs.validate();
  if (lhs.shape.size() != 2 || lhs.rows() != m || lhs.cols() != k)
    throw std::invalid_argument("GemmTask: lhs shape does not match m x k");
  if (rhs.shape.size() != 2 || rhs.rows() != k || rhs.cols() != n)
    throw std::invalid_argument("GemmTask: rhs shape does not match k x n");
  requant.validate();
  if (requant.bias.size() != n)
    throw std::invalid_argument("GemmTask: bias length must equal n");
}

std::vector<std::uint8_t> PackedBuffer::serialize() const {
  std::vector<std::uint8_t> out;
  out.reserve(total_bytes());
  put_u32(out, header.magic);
  put_u32(out, header.kind);
  put_u32(out, header.payload_bytes);
  put_u32(out, header.m);
  put_u32(out, header.n);
  put_u32(out, header.k);
  put_u32(out, header.tile_index);
  put_u32(out, header.tile_count);
  out.insert(out.end(), payload.begin(), payload.end());
  return out;
}

PackedBuffer PackedBuffer::deserialize(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < kPackedHeaderBytes)
    throw std::invalid_argument("packed buffer shorter than header");
  PackedBuffer b;
  b.header.magic = get_u32(&bytes[0]);
  b.header.kind = get_u32(&bytes[4]);
  b.header.payload_bytes = get_u32(&bytes[8]);
  b.header.m = get_u32(&bytes[12]);
  b.header.n = get_u32(&bytes[16]);
  b.header.k = get_u32(&bytes[20]);
  b.header.tile_index = get_u32(&bytes[24]);
  b.header.tile_count = get_u32(&bytes[28]);
  if (b.header.magic != kPackedBufferMagic)
    throw std::invalid_argument("packed buffer magic mismatch");
  if (bytes.size() != kPackedHeaderBytes + b.header.payload_bytes)
    throw std::invalid_argument("packed buffer length does not match header");
  b.payload.assign(bytes.begin() + kPackedHeaderBytes, bytes.end());
  return b;
}

TaskShape task_shape(Index m, Index n, Index k, const AccelConfig& config) {
  TaskShape s;
  s.m = m;
  s.n = n;
  s.k = k;
  if (config.kind == DesignKind::Sa) {
    s.tile_rows = config.sa.rows;
    s.tile_cols = config.sa.cols;
    s.tile_col_major = true;  // SA tiles drain column by column
  } else {
    s.tile_rows = config.vm.tile_dim;
    s.tile_cols = config.vm.tile_dim;
    s.tile_col_major = false;
  }
  s.padded_m = round_up(m, s.tile_rows);
  s.padded_n = round_up(n, s.tile_cols);
  return s;
}

TilePlan plan_weight_tiles(Index m, Index n, Index k, const AccelConfig& config) {
  if (m <= 0 || n <= 0 || k <= 0)
    throw std::invalid_argument("plan_weight_tiles: dimensions must be positive");
  const TaskShape shape = task_shape(m, n, k, config);
  const Index native = shape.tile_cols;
  const auto capacity = static_cast<std::int64_t>(
      config.kind == DesignKind::Sa ? config.sa.global_weight_buffer_bytes
                                    : config.vm.global_weight_buffer_bytes);
  // Widest strip of native columns that can be resident at once: the VM
  // broadcasts strips into per-unit tile buffers, the SA streams them from
  // the global buffer.
  const std::int64_t strip_capacity =
      config.kind == DesignKind::Sa
          ? capacity
          : std::min<std::int64_t>(capacity, static_cast<std::int64_t>(
                                                 config.vm.local_weight_tile_bytes));
  if (capacity < native)
    throw CapacityError("plan_weight_tiles: a single native tile exceeds the "
                        "global weight buffer capacity");

  // Split K only if one full-K native strip does not fit.
  Index k_parts = 1;
  while ((k + k_parts - 1) / k_parts * native > strip_capacity) ++k_parts;
  if (k_parts > 1 && config.kind == DesignKind::Sa)
    throw CapacityError("plan_weight_tiles: systolic array requires full-K "
                        "weight strips; global weight buffer too small");
  const std::vector<Index> k_sizes = split_even(k, k_parts);
  const Index k_len_max = *std::max_element(k_sizes.begin(), k_sizes.end());

  // Widest tile that fits alongside the chosen K chunking.
  Index max_cols = std::min<Index>(shape.padded_n, capacity / k_len_max / native * native);
  const Index n_units = shape.padded_n / native;
  const Index n_parts = (shape.padded_n + max_cols - 1) / max_cols;
  const std::vector<Index> n_unit_sizes = split_even(n_units, n_parts);

  TilePlan plan;
  plan.native_width = native;
  Index n0 = 0;
  for (Index units : n_unit_sizes) {
    const Index n1 = n0 + units * native;
    Index k0 = 0;
    for (std::size_t ki = 0; ki < k_sizes.size(); ++ki) {
      const Index k1 = k0 + k_sizes[ki];
      plan.tiles.push_back(WeightTile{k0, k1, n0, n1, ki + 1 == k_sizes.size()});
      k0 = k1;
    }
    n0 = n1;
  }
  return plan;
}

std::vector<std::pair<Index, Index>> input_row_ranges(const TaskShape& shape,
                                                      int num_buffers) {
  const Index strips = shape.row_strips();
  const Index parts = std::min<Index>(num_buffers, strips);
  const std::vector<Index> sizes = split_even(strips, parts);
  std::vector<std::pair<Index, Index>> ranges;
  Index r0 = 0;
  for (Index s : sizes) {
    const Index r1 = r0 + s * shape.tile_rows;
    ranges.emplace_back(r0, r1);
    r0 = r1;
  }
  return ranges;
}

std::vector<std::uint8_t> encode_task_config(const GemmTask& task, Index padded_n) {
  std::vector<std::uint8_t> p;
  p.reserve(static_cast<std::size_t>(7 + padded_n) * 4);
  put_i32(p, task.requant.multiplier);
  put_i32(p, task.requant.right_shift);
  put_i32(p, task.requant.output_zero_point);
  put_i32(p, task.requant.clamp_min);
  put_i32(p, task.requant.clamp_max);
  put_i32(p, task.lhs.zero_point);
  put_i32(p, task.rhs.zero_point);
  for (Index j = 0; j < padded_n; ++j)
    put_i32(p, j < task.n ? task.requant.bias(j) : 0);
  return p;
}

TaskConfigWords decode_task_config(const PackedBuffer& buf) {
  if (buf.header.kind != static_cast<std::uint32_t>(BufferKind::Config))
    throw std::invalid_argument("decode_task_config: not a config buffer");
  if (buf.payload.size() < 7 * 4)
    throw std::invalid_argument("decode_task_config: payload too short");
  TaskConfigWords w;
  w.requant.multiplier = get_i32(&buf.payload[0]);
  w.requant.right_shift = get_i32(&buf.payload[4]);
  w.requant.output_zero_point = get_i32(&buf.payload[8]);
  w.requant.clamp_min = get_i32(&buf.payload[12]);
  w.requant.clamp_max = get_i32(&buf.payload[16]);
  w.lhs_zero_point = get_i32(&buf.payload[20]);
  w.rhs_zero_point = get_i32(&buf.payload[24]);
  const std::size_t nbias = (buf.payload.size() - 28) / 4;
  w.requant.bias = VecI32(static_cast<Index>(nbias));
  for (std::size_t j = 0; j < nbias; ++j)
    w.requant.bias(static_cast<Index>(j)) = get_i32(&buf.payload[28 + 4 * j]);
  return w;
}

std::vector<PackedBuffer> pack_operands(const GemmTask& task, const TilePlan& plan,
                                        const AccelConfig& config) {
  task.validate();
  const TaskShape shape = task_shape(task.m, task.n, task.k, config);
  if (plan.native_width != shape.tile_cols)
    throw std::invalid_argument("pack_operands: plan does not match design tile width");
  const auto bus_word = static_cast<std::size_t>(config.bus.width_bytes);
  const auto weight_capacity =
      config.kind == DesignKind::Sa ? config.sa.global_weight_buffer_bytes
                                    : config.vm.global_weight_buffer_bytes;

  std::vector<PackedBuffer> buffers;
  const auto tile_count = static_cast<std::uint32_t>(plan.tiles.size());

  BufferHeader base;
  base.m = static_cast<std::uint32_t>(task.m);
  base.n = static_cast<std::uint32_t>(task.n);
  base.k = static_cast<std::uint32_t>(task.k);

  {
    PackedBuffer cfg;
    cfg.header = base;
    cfg.header.kind = static_cast<std::uint32_t>(BufferKind::Config);
    cfg.header.tile_count = tile_count;
    cfg.payload = encode_task_config(task, shape.padded_n);
    pad_to_multiple(cfg.payload, bus_word, 0);
    cfg.header.payload_bytes = static_cast<std::uint32_t>(cfg.payload.size());
    buffers.push_back(std::move(cfg));
  }

  // Inputs precede weights on the wire; the accelerator consumes weight
  // tiles one at a time once the input rows are resident.
  const auto lhs = task.lhs.matrix();
  const auto ranges = input_row_ranges(shape, config.num_input_buffers);
  for (std::size_t i = 0; i < ranges.size(); ++i) {
    PackedBuffer ib;
    ib.header = base;
    ib.header.kind = static_cast<std::uint32_t>(BufferKind::Inputs);
    ib.header.tile_index = static_cast<std::uint32_t>(i);
    ib.header.tile_count = static_cast<std::uint32_t>(ranges.size());
    const auto [r0, r1] = ranges[i];
    ib.payload.reserve(static_cast<std::size_t>((r1 - r0) * task.k));
    for (Index r = r0; r < r1; ++r)
      for (Index kk = 0; kk < task.k; ++kk)
        ib.payload.push_back(r < task.m ? lhs(r, kk)
                                        : static_cast<std::uint8_t>(task.lhs.zero_point));
    pad_to_multiple(ib.payload, bus_word, static_cast<std::uint8_t>(task.lhs.zero_point));
    ib.header.payload_bytes = static_cast<std::uint32_t>(ib.payload.size());
    buffers.push_back(std::move(ib));
  }

  const auto rhs = task.rhs.matrix();
  for (std::size_t t = 0; t < plan.tiles.size(); ++t) {
    const WeightTile& tile = plan.tiles[t];
    if (tile.footprint_bytes() > weight_capacity)
      throw CapacityError("pack_operands: weight tile exceeds global weight "
                          "buffer capacity");
    PackedBuffer wb;
    wb.header = base;
    wb.header.kind = static_cast<std::uint32_t>(BufferKind::Weights);
    wb.header.tile_index = static_cast<std::uint32_t>(t);
    wb.header.tile_count = tile_count;
    wb.payload.reserve(static_cast<std::size_t>(tile.footprint_bytes()));
    // Native-width column strips, K-major inside each strip: consecutive bus
    // words stripe cleanly across banks on arrival.
    for (Index s = tile.n0; s < tile.n1; s += plan.native_width)
      for (Index kk = tile.k0; kk < tile.k1; ++kk)
        for (Index c = 0; c < plan.native_width; ++c) {
          const Index col = s + c;
          wb.payload.push_back(col < task.n ? rhs(kk, col)
                                            : static_cast<std::uint8_t>(task.rhs.zero_point));
        }
    pad_to_multiple(wb.payload, bus_word, static_cast<std::uint8_t>(task.rhs.zero_point));
    wb.header.payload_bytes = static_cast<std::uint32_t>(wb.payload.size());
    buffers.push_back(std::move(wb));
  }

  for (std::size_t i = 0; i < buffers.size(); ++i)
    buffers[i].link = static_cast<int>(i % static_cast<std::size_t>(config.bus.num_links));
  return buffers;
}

MatU8 decode_weight_tile(const PackedBuffer& buf, const WeightTile& tile,
                         Index native_width) {
  if (static_cast<std::uint64_t>(buf.payload.size()) < tile.footprint_bytes())
    throw std::invalid_argument("decode_weight_tile: payload shorter than tile");
  MatU8 w(tile.k_len(), tile.n_len());
  std::size_t pos = 0;
  for (Index s = 0; s < tile.n_len(); s += native_width)
    for (Index kk = 0; kk < tile.k_len(); ++kk)
      for (Index c = 0; c < native_width; ++c) w(kk, s + c) = buf.payload[pos++];
  return w;
}

MatU8 decode_input_rows(const PackedBuffer& buf, Index rows, Index k) {
  if (buf.payload.size() < static_cast<std::size_t>(rows * k))
    throw std::invalid_argument("decode_input_rows: payload shorter than rows");
  MatU8 x(rows, k);
  std::memcpy(x.data(), buf.payload.data(), static_cast<std::size_t>(rows * k));
  return x;
}

TileOrder row_major_tile_order(const TaskShape& shape) {
  TileOrder order;
  for (Index tr = 0; tr < shape.row_strips(); ++tr)
    for (Index tc = 0; tc < shape.col_strips(); ++tc) order.emplace_back(tr, tc);
  return order;
}

TileOrder sa_tile_order(const TaskShape& shape, const TilePlan& plan) {
  TileOrder order;
  for (const auto& tile : plan.tiles) {
    if (!tile.last_k) continue;
    for (Index tr = 0; tr < shape.row_strips(); ++tr)
      for (Index tc = tile.n0 / shape.tile_cols; tc < tile.n1 / shape.tile_cols; ++tc)
        order.emplace_back(tr, tc);
  }
  return order;
}

TileOrder output_tile_order(const TaskShape& shape, const TilePlan& plan, DesignKind kind) {
  return kind == DesignKind::Sa ? sa_tile_order(shape, plan) : row_major_tile_order(shape);
}

namespace {

template <typename Scalar, typename Mat>
Mat unpack_stream(const std::vector<std::uint8_t>& stream, const TaskShape& shape,
                  const TileOrder& order, std::size_t bytes_per_elem) {
  const auto padded =
      static_cast<std::size_t>(shape.padded_m) * static_cast<std::size_t>(shape.padded_n);
  if (stream.size() != padded * bytes_per_elem)
    throw std::invalid_argument("unpack_outputs: stream length " +
                                std::to_string(stream.size()) + " does not match expected " +
                                std::to_string(padded * bytes_per_elem));
  if (static_cast<std::size_t>(shape.row_strips() * shape.col_strips()) != order.size())
    throw std::invalid_argument("unpack_outputs: tile order does not cover the grid");
  Mat out(shape.padded_m, shape.padded_n);
  std::size_t pos = 0;
  for (const auto& [tr, tc] : order) {
    for (Index a = 0; a < shape.tile_rows * shape.tile_cols; ++a) {
      const Index r = shape.tile_col_major ? a % shape.tile_rows : a / shape.tile_cols;
      const Index c = shape.tile_col_major ? a / shape.tile_rows : a % shape.tile_cols;
      Scalar v;
      if constexpr (sizeof(Scalar) == 1) {
        v = static_cast<Scalar>(stream[pos]);
        pos += 1;
      } else {
        v = static_cast<Scalar>(get_u32(&stream[pos]));
        pos += 4;
      }
      out(tr * shape.tile_rows + r, tc * shape.tile_cols + c) = v;
    }
  }
  return Mat(out.topLeftCorner(shape.m, shape.n));
}

}  // namespace

MatU8 unpack_outputs_q8(const std::vector<std::uint8_t>& stream, const TaskShape& shape,
                        const TileOrder& order) {
  return unpack_stream<std::uint8_t, MatU8>(stream, shape, order, 1);
}

MatI32 unpack_outputs_acc(const std::vector<std::uint8_t>& stream, const TaskShape& shape,
                          const TileOrder& order) {
  return unpack_stream<std::int32_t, MatI32>(stream, shape, order, 4);
}

std::uint64_t total_wire_bytes(const std::vector<PackedBuffer>& buffers) {
  std::uint64_t total = 0;
  for (const auto& b : buffers) total += b.total_bytes();
  return total;
}

}  // namespace gemmsim
