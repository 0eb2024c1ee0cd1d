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

#include <doctest.h>

#include <random>

#include "gemmsim/packing.hpp"
#include "helpers.hpp"

using namespace gemmsim;

static AccelConfig vm_config() {
  AccelConfig c;
  c.kind = DesignKind::Vm;
  return c;
}

TEST_CASE("packed buffer header is bit-exact little-endian") {
  PackedBuffer b;
  b.header.kind = static_cast<std::uint32_t>(BufferKind::Inputs);
  b.header.m = 7;
  b.header.n = 0x01020304;
  b.header.k = 9;
  b.header.tile_index = 2;
  b.header.tile_count = 3;
  b.payload = {0xaa, 0xbb};
  b.header.payload_bytes = 2;
  auto bytes = b.serialize();
  REQUIRE(bytes.size() == 34);
  // magic 0x53454344, little-endian
  CHECK(bytes[0] == 0x44);
  CHECK(bytes[1] == 0x43);
  CHECK(bytes[2] == 0x45);
  CHECK(bytes[3] == 0x53);
  CHECK(bytes[4] == 1);   // kind
  CHECK(bytes[8] == 2);   // payload bytes
  CHECK(bytes[12] == 7);  // m
  CHECK(bytes[16] == 0x04);
  CHECK(bytes[17] == 0x03);
  CHECK(bytes[18] == 0x02);
  CHECK(bytes[19] == 0x01);
  auto back = PackedBuffer::deserialize(bytes);
  CHECK(back.header.n == 0x01020304);
  CHECK(back.payload == b.payload);

  bytes[0] = 0x45;
  CHECK_THROWS_AS(PackedBuffer::deserialize(bytes), std::invalid_argument);
}

TEST_CASE("plan_weight_tiles: everything fits gives one tile") {
  auto cfg = vm_config();
  auto plan = plan_weight_tiles(16, 16, 8, cfg);
  REQUIRE(plan.tiles.size() == 1);
  CHECK(plan.tiles[0].k0 == 0);
  CHECK(plan.tiles[0].k1 == 8);
  CHECK(plan.tiles[0].n0 == 0);
  CHECK(plan.tiles[0].n1 == 16);
  CHECK(plan.tiles[0].last_k);
}

TEST_CASE("plan_weight_tiles: capacity of half the weights splits N in two") {
  auto cfg = vm_config();
  cfg.vm.global_weight_buffer_bytes = 8 * 32;  // half of the 8 x 64 weights
  auto plan = plan_weight_tiles(8, 64, 8, cfg);
  REQUIRE(plan.tiles.size() == 2);
  CHECK(plan.tiles[0].n0 == 0);
  CHECK(plan.tiles[0].n1 == 32);
  CHECK(plan.tiles[1].n0 == 32);
  CHECK(plan.tiles[1].n1 == 64);

  cfg.vm.global_weight_buffer_bytes = 8 * 16;  // two N-tiles for N=32
  plan = plan_weight_tiles(8, 32, 8, cfg);
  REQUIRE(plan.tiles.size() == 2);
  CHECK(plan.tiles[0].n1 == 16);
  CHECK(plan.tiles[1].n0 == 16);
}

TEST_CASE("plan_weight_tiles: K splits only when a full-K strip overflows") {
  auto cfg = vm_config();
  cfg.vm.global_weight_buffer_bytes = 1024;
  cfg.vm.local_weight_tile_bytes = 4096;
  auto plan = plan_weight_tiles(8, 16, 512, cfg);  // strip = 512*4 = 2048 > 1024
  REQUIRE(plan.tiles.size() == 8);                 // 2 K-ranges x 4 single-strip N-ranges
  for (const auto& t : plan.tiles) CHECK(t.footprint_bytes() <= 1024);
  // coverage: disjoint K x N union
  std::vector<std::vector<bool>> seen(512, std::vector<bool>(16, false));
  for (const auto& t : plan.tiles)
    for (Index kk = t.k0; kk < t.k1; ++kk)
      for (Index nn = t.n0; nn < t.n1; ++nn) {
        CHECK_FALSE(seen[kk][nn]);
        seen[kk][nn] = true;
      }
  for (const auto& row : seen)
    for (bool s : row) CHECK(s);
  // last_k marks only the final K-range of each N-range
  int last_count = 0;
  for (const auto& t : plan.tiles)
    if (t.last_k) {
      ++last_count;
      CHECK(t.k1 == 512);
    }
  CHECK(last_count == 4);
}

TEST_CASE("plan_weight_tiles: VM strips are bounded by the local tile buffer") {
  auto cfg = vm_config();
  cfg.vm.local_weight_tile_bytes = 64;
  auto plan = plan_weight_tiles(8, 8, 32, cfg);  // strip 128 > 64 forces K split
  REQUIRE(plan.tiles.size() >= 2);
  for (const auto& t : plan.tiles) CHECK(t.k_len() * 4 <= 64);
}

TEST_CASE("plan_weight_tiles: SA refuses K splits as a capacity error") {
  AccelConfig cfg;
  cfg.kind = DesignKind::Sa;
  cfg.sa.rows = cfg.sa.cols = 4;
  cfg.sa.global_weight_buffer_bytes = 64;
  CHECK_THROWS_AS(plan_weight_tiles(8, 8, 512, cfg), CapacityError);
}

TEST_CASE("plan_weight_tiles: property check on random plans") {
  std::mt19937 rng(3);
  std::uniform_int_distribution<Index> dim(1, 96);
  std::uniform_int_distribution<std::uint64_t> cap(64, 4096);
  for (int iter = 0; iter < 100; ++iter) {
    auto cfg = vm_config();
    cfg.vm.global_weight_buffer_bytes = cap(rng);
    const Index m = dim(rng), n = dim(rng), k = dim(rng);
    auto plan = plan_weight_tiles(m, n, k, cfg);
    auto shape = task_shape(m, n, k, cfg);
    std::uint64_t covered = 0;
    for (const auto& t : plan.tiles) {
      CHECK(t.footprint_bytes() <= cfg.vm.global_weight_buffer_bytes);
      CHECK(t.n_len() % plan.native_width == 0);
      covered += t.footprint_bytes();
    }
    CHECK(covered == static_cast<std::uint64_t>(k) * shape.padded_n);
  }
}

TEST_CASE("pack_operands: smallest case yields config, weight and input buffers") {
  std::mt19937 rng(17);
  auto task = testing::random_task(rng, 4, 4, 4);
  auto cfg = vm_config();
  auto plan = plan_weight_tiles(4, 4, 4, cfg);
  auto bufs = pack_operands(task, plan, cfg);
  REQUIRE(bufs.size() == 3);
  CHECK(bufs[0].header.kind == static_cast<std::uint32_t>(BufferKind::Config));
  CHECK(bufs[1].header.kind == static_cast<std::uint32_t>(BufferKind::Inputs));
  CHECK(bufs[2].header.kind == static_cast<std::uint32_t>(BufferKind::Weights));
  CHECK(bufs[1].header.tile_count == 1);
  CHECK(bufs[2].header.tile_count == 1);
  CHECK(bufs[0].header.m == 4);
  CHECK(bufs[0].header.n == 4);
  CHECK(bufs[0].header.k == 4);
  // round-robin link assignment over the default 2 links
  CHECK(bufs[0].link == 0);
  CHECK(bufs[1].link == 1);
  CHECK(bufs[2].link == 0);
}

TEST_CASE("pack_operands/decode round trip reproduces the operands exactly") {
  std::mt19937 rng(23);
  for (int iter = 0; iter < 20; ++iter) {
    std::uniform_int_distribution<Index> dim(1, 40);
    const Index m = dim(rng), n = dim(rng), k = dim(rng);
    auto task = testing::random_task(rng, m, n, k);
    auto cfg = vm_config();
    cfg.vm.global_weight_buffer_bytes = 256;  // force tiling frequently
    auto plan = plan_weight_tiles(m, n, k, cfg);
    auto shape = task_shape(m, n, k, cfg);
    auto bufs = pack_operands(task, plan, cfg);

    // reassemble inputs (config buffer first, then input buffers)
    MatU8 rows(shape.padded_m, k);
    auto ranges = input_row_ranges(shape, cfg.num_input_buffers);
    for (std::size_t i = 0; i < ranges.size(); ++i) {
      auto [r0, r1] = ranges[i];
      rows.middleRows(r0, r1 - r0) = decode_input_rows(bufs[1 + i], r1 - r0, k);
    }
    CHECK(rows.topRows(m) == task.lhs.matrix());

    // reassemble weights from tile buffers
    MatU8 weights(k, shape.padded_n);
    weights.setConstant(static_cast<std::uint8_t>(task.rhs.zero_point));
    std::size_t wi = 1 + ranges.size();
    for (const auto& tile : plan.tiles) {
      MatU8 dec = decode_weight_tile(bufs[wi++], tile, plan.native_width);
      for (Index kk = 0; kk < tile.k_len(); ++kk)
        for (Index c = 0; c < tile.n_len(); ++c)
          weights(tile.k0 + kk, tile.n0 + c) = dec(kk, c);
    }
    CHECK(weights.topLeftCorner(k, n) == task.rhs.matrix());
    // padded columns carry the zero point
    for (Index c = n; c < shape.padded_n; ++c)
      for (Index kk = 0; kk < k; ++kk)
        CHECK(weights(kk, c) == static_cast<std::uint8_t>(task.rhs.zero_point));

    // config round trip
    auto words = decode_task_config(bufs[0]);
    CHECK(words.requant.multiplier == task.requant.multiplier);
    CHECK(words.requant.right_shift == task.requant.right_shift);
    CHECK(words.requant.output_zero_point == task.requant.output_zero_point);
    CHECK(words.lhs_zero_point == task.lhs.zero_point);
    CHECK(words.rhs_zero_point == task.rhs.zero_point);
    CHECK(words.requant.bias.head(n) == task.requant.bias);

    // payload conservation: every payload byte is weights, inputs or padding
    std::uint64_t payload = 0;
    for (const auto& b : bufs) payload += b.payload.size();
    const std::uint64_t weights_bytes = static_cast<std::uint64_t>(k) * shape.padded_n;
    const std::uint64_t input_bytes = static_cast<std::uint64_t>(shape.padded_m) * k;
    CHECK(payload >= weights_bytes + input_bytes);
    CHECK(payload < weights_bytes + input_bytes + bufs.size() * 8 + 28 + 4 * shape.padded_n + 8);
  }
}

TEST_CASE("unpack_outputs: single 4x4 tile is an identity reorder") {
  auto cfg = vm_config();
  auto shape = task_shape(4, 4, 4, cfg);
  std::vector<std::uint8_t> stream(16);
  for (int i = 0; i < 16; ++i) stream[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(i);
  MatU8 out = unpack_outputs_q8(stream, shape, row_major_tile_order(shape));
  for (Index r = 0; r < 4; ++r)
    for (Index c = 0; c < 4; ++c) CHECK(out(r, c) == r * 4 + c);
}

TEST_CASE("unpack_outputs: SA tiles are column-major inside") {
  AccelConfig cfg;
  cfg.kind = DesignKind::Sa;
  cfg.sa.rows = cfg.sa.cols = 4;
  auto shape = task_shape(4, 4, 4, cfg);
  std::vector<std::uint8_t> stream(16);
  for (int i = 0; i < 16; ++i) stream[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(i);
  MatU8 out = unpack_outputs_q8(stream, shape, row_major_tile_order(shape));
  // element (r, c) was drained as c * rows + r
  for (Index r = 0; r < 4; ++r)
    for (Index c = 0; c < 4; ++c) CHECK(out(r, c) == c * 4 + r);
}

TEST_CASE("unpack_outputs: stream length mismatch throws") {
  auto cfg = vm_config();
  auto shape = task_shape(4, 4, 4, cfg);
  std::vector<std::uint8_t> stream(15);
  CHECK_THROWS_AS(unpack_outputs_q8(stream, shape, row_major_tile_order(shape)),
                  std::invalid_argument);
}

TEST_CASE("sa_tile_order groups tiles by plan N-range") {
  AccelConfig cfg;
  cfg.kind = DesignKind::Sa;
  cfg.sa.rows = cfg.sa.cols = 4;
  cfg.sa.global_weight_buffer_bytes = 8 * 4;  // one 4-wide strip at K=8
  auto plan = plan_weight_tiles(8, 8, 8, cfg);
  REQUIRE(plan.tiles.size() == 2);
  auto shape = task_shape(8, 8, 8, cfg);
  auto order = sa_tile_order(shape, plan);
  REQUIRE(order.size() == 4);
  CHECK(order[0] == std::make_pair<Index, Index>(0, 0));
  CHECK(order[1] == std::make_pair<Index, Index>(1, 0));
  CHECK(order[2] == std::make_pair<Index, Index>(0, 1));
  CHECK(order[3] == std::make_pair<Index, Index>(1, 1));
}
