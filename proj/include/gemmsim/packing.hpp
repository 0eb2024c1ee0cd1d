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

#include <cstdint>
#include <vector>

#include "gemmsim/config.hpp"
#include "gemmsim/quant.hpp"

namespace gemmsim {

// One offloaded GEMM call: out[m x n] = requantize(lhs[m x k] * rhs[k x n]).
struct GemmTask {
  Index m = 0, n = 0, k = 0;
  QuantTensor lhs;  // inputs, m x k
  QuantTensor rhs;  // weights, k x n
  RequantParams requant;
  double out_scale = 1.0;

  void validate() const;
};

// Operand stream wire format. Every buffer starts with eight little-endian
// 32-bit words:
//   [0] magic  [1] kind  [2] payload bytes  [3] M  [4] N  [5] K
//   [6] tile index  [7] tile count
// and is identical across both accelerator designs.
inline constexpr std::uint32_t kPackedBufferMagic = 0x53454344u;
inline constexpr std::size_t kPackedHeaderBytes = 32;

enum class BufferKind : std::uint32_t { Weights = 0, Inputs = 1, Config = 2 };

struct BufferHeader {
  std::uint32_t magic = kPackedBufferMagic;
  std::uint32_t kind = 0;
  std::uint32_t payload_bytes = 0;
  std::uint32_t m = 0, n = 0, k = 0;
  std::uint32_t tile_index = 0;
  std::uint32_t tile_count = 0;
};

struct PackedBuffer {
  BufferHeader header;
  std::vector<std::uint8_t> payload;
  int link = 0;  // DMA link carrying this buffer

  std::uint64_t total_bytes() const { return kPackedHeaderBytes + payload.size(); }
  std::vector<std::uint8_t> serialize() const;
  static PackedBuffer deserialize(const std::vector<std::uint8_t>& bytes);
};

// One weight tile: the half-open K and N ranges it covers, in padded
// coordinates. Tiles of one N-range arrive with K ascending; last_k marks the
// range after which the output columns are complete and may be drained.
struct WeightTile {
  Index k0 = 0, k1 = 0;
  Index n0 = 0, n1 = 0;
  bool last_k = true;

  Index k_len() const { return k1 - k0; }
  Index n_len() const { return n1 - n0; }
  std::uint64_t footprint_bytes() const {
    return static_cast<std::uint64_t>(k_len()) * static_cast<std::uint64_t>(n_len());
  }
};

struct TilePlan {
  std::vector<WeightTile> tiles;
  Index native_width = 4;  // tile width of the target design
};

// Padded output geometry for a task on a given design. Output streams cover
// the padded grid in row-major tile order; the SA drains tiles column-major
// internally, the VM crossbar emits row-major tiles.
struct TaskShape {
  Index m = 0, n = 0, k = 0;
  Index tile_rows = 4, tile_cols = 4;
  Index padded_m = 0, padded_n = 0;
  bool tile_col_major = false;

  Index row_strips() const { return padded_m / tile_rows; }
  Index col_strips() const { return padded_n / tile_cols; }
};

TaskShape task_shape(Index m, Index n, Index k, const AccelConfig& config);

// Contiguous padded-row ranges carried by each input buffer (whole row
// strips; at most num_buffers ranges).
std::vector<std::pair<Index, Index>> input_row_ranges(const TaskShape& shape,
                                                      int num_buffers);

// Splits the weight matrix along N first (full K per tile) into
// equal-as-possible chunks that are multiples of the design's native tile
// width and fit the global weight buffer; splits K as well only when a
// full-K column strip exceeds what the design can hold (for the VM that is
// also bounded by the per-unit weight tile buffer). The SA streams full-K
// columns through its cells, so an oversized full-K strip is a capacity
// error there rather than a K split. Inputs are reused across all weight
// tiles sharing a K-range.
TilePlan plan_weight_tiles(Index m, Index n, Index k, const AccelConfig& config);

// Reshape task operands into header-tagged buffers: one config buffer
// (requantization parameters and bias), one weight buffer per plan tile, and
// the input rows partitioned across config.num_input_buffers buffers. Links
// are assigned round-robin. Padding bytes hold the operand zero point.
std::vector<PackedBuffer> pack_operands(const GemmTask& task, const TilePlan& plan,
                                        const AccelConfig& config);

// Accelerator-side payload decoders (the inverse of pack_operands).
MatU8 decode_weight_tile(const PackedBuffer& buf, const WeightTile& tile, Index native_width);
MatU8 decode_input_rows(const PackedBuffer& buf, Index rows, Index k);

struct TaskConfigWords {
  RequantParams requant;
  std::int32_t lhs_zero_point = 0;
  std::int32_t rhs_zero_point = 0;
};
std::vector<std::uint8_t> encode_task_config(const GemmTask& task, Index padded_n);
TaskConfigWords decode_task_config(const PackedBuffer& buf);

// Order in which output tiles appear on the wire. The VM crossbar restores
// global row-major tile order; the SA emits tiles as computed, grouped by the
// plan's N-ranges (row-major within each range).
using TileOrder = std::vector<std::pair<Index, Index>>;
TileOrder row_major_tile_order(const TaskShape& shape);
TileOrder sa_tile_order(const TaskShape& shape, const TilePlan& plan);
TileOrder output_tile_order(const TaskShape& shape, const TilePlan& plan, DesignKind kind);

// Reorders a design-ordered output stream into a row-major M x N result,
// dropping tile padding. The q8 variant consumes 1 byte per padded element
// (PPU enabled), the acc variant 4 bytes (raw accumulators, PPU disabled).
MatU8 unpack_outputs_q8(const std::vector<std::uint8_t>& stream, const TaskShape& shape,
                        const TileOrder& order);
MatI32 unpack_outputs_acc(const std::vector<std::uint8_t>& stream, const TaskShape& shape,
                          const TileOrder& order);

// Total wire bytes for a packed buffer list (headers + payloads).
std::uint64_t total_wire_bytes(const std::vector<PackedBuffer>& buffers);

}  // namespace gemmsim
