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

#include <cstdint>
#include <memory>
#include <vector>

#include "gemmsim/sim.hpp"

using namespace gemmsim;

namespace {

using WordChan = std::shared_ptr<FifoChannel<std::uint32_t>>;

Process paced_producer(Engine& eng, WordChan ch, int words, std::uint64_t gap) {
  for (int i = 0; i < words; ++i) {
    std::uint32_t word = static_cast<std::uint32_t>(i);
    co_await ch->write(word);
    co_await eng.delay(gap);
  }
  ch->close();
}

Process paced_consumer(Engine& eng, WordChan ch, std::uint64_t gap,
                       std::vector<std::uint32_t>& sink) {
  while (auto w = co_await ch->read()) {
    sink.push_back(*w);
    if (gap > 0) co_await eng.delay(gap);
  }
}

}  // namespace

TEST_CASE("run_until_idle: empty process set finishes at cycle 0") {
  Engine eng;
  CHECK(eng.run_until_idle() == 0);
}

TEST_CASE("run_until_idle: producer at one word per cycle takes 8 cycles") {
  Engine eng;
  auto ch = eng.make_channel<std::uint32_t>("words", 8);
  std::vector<std::uint32_t> sink;
  eng.spawn("producer", paced_producer(eng, ch, 8, 1));
  eng.spawn("consumer", paced_consumer(eng, ch, 0, sink));
  CHECK(eng.run_until_idle() == 8);
  CHECK(sink.size() == 8);
  CHECK(ch->producer_stalls() == 0);
}

TEST_CASE("run_until_idle: bounded channel with slow consumer, hand-stepped") {
  // Producer pushes one word per cycle into a capacity-2 channel; consumer
  // drains one word every 2 cycles; 16 words total.
  //
  //   cycle 0..3 : producer pushes w0..w3 unblocked (consumer reads w0 at 0,
  //                w1 at 2); queue is full after cycle 3
  //   cycle 4+   : steady state with period 2 -- producer blocks on the even
  //                cycle, pushes on the odd cycle (1 stall per remaining
  //                word), consumer reads on the even cycle
  //   w15 is pushed at cycle 27; consumer reads w15 at cycle 30 and observes
  //   the closed channel at 32.
  Engine eng;
  auto ch = eng.make_channel<std::uint32_t>("words", 2);
  std::vector<std::uint32_t> sink;
  eng.spawn("producer", paced_producer(eng, ch, 16, 1));
  eng.spawn("consumer", paced_consumer(eng, ch, 2, sink));
  CHECK(eng.run_until_idle() == 32);
  CHECK(sink.size() == 16);
  for (std::size_t i = 0; i < sink.size(); ++i) CHECK(sink[i] == i);
  CHECK(ch->producer_stalls() == 12);
  CHECK(ch->consumer_stalls() == 0);
  CHECK(ch->observed_full());
}

TEST_CASE("run_until_idle: slow producer charges consumer stalls, hand-stepped") {
  // Producer pushes w0..w3 at cycles 0,3,6,9 then closes at 12. The eager
  // consumer blocks after each read and is charged 3 stall cycles per wait,
  // including the final wait for the close.
  Engine eng;
  auto ch = eng.make_channel<std::uint32_t>("words", 4);
  std::vector<std::uint32_t> sink;
  eng.spawn("producer", paced_producer(eng, ch, 4, 3));
  eng.spawn("consumer", paced_consumer(eng, ch, 0, sink));
  CHECK(eng.run_until_idle() == 12);
  CHECK(sink.size() == 4);
  CHECK(ch->consumer_stalls() == 12);
  CHECK(ch->producer_stalls() == 0);
  CHECK_FALSE(ch->observed_full());
}

TEST_CASE("stall accounting: producer stalls imply the channel was seen full") {
  Engine eng;
  auto ch = eng.make_channel<std::uint32_t>("narrow", 1);
  std::vector<std::uint32_t> sink;
  eng.spawn("producer", paced_producer(eng, ch, 6, 0));
  eng.spawn("consumer", paced_consumer(eng, ch, 4, sink));
  eng.run_until_idle();
  CHECK(ch->producer_stalls() > 0);
  CHECK(ch->observed_full());
}

TEST_CASE("dma: formula and counters") {
  Engine eng;  // defaults: width 8, 2 links, setup 10
  CHECK(eng.dma_cycles(0) == 10);
  CHECK(eng.dma_cycles(64) == 18);
  CHECK(eng.dma_cycles(65) == 19);

  auto xfer = [](Engine& e, std::uint64_t bytes, int link) -> Process {
    co_await e.dma(bytes, link, DmaDir::In);
  };

  SUBCASE("two transfers on distinct links overlap fully") {
    eng.spawn("t0", xfer(eng, 64, 0));
    eng.spawn("t1", xfer(eng, 64, 1));
    CHECK(eng.run_until_idle() == 18);
    CHECK(eng.counters().dma_bytes_in == 128);
  }
  SUBCASE("two transfers sharing a link serialize") {
    eng.spawn("t0", xfer(eng, 64, 0));
    eng.spawn("t1", xfer(eng, 64, 0));
    CHECK(eng.run_until_idle() == 36);
  }
  SUBCASE("invalid link index throws") {
    eng.spawn("bad", xfer(eng, 8, 5));
    CHECK_THROWS_AS(eng.run_until_idle(), std::invalid_argument);
  }
}

TEST_CASE("snapshot_counters: zero before activity, bytes after") {
  Engine eng;
  auto before = eng.snapshot_counters();
  CHECK(before.dma_bytes_in == 0);
  CHECK(before.dma_bytes_out == 0);
  CHECK(before.component_cycles.empty());

  auto xfer = [](Engine& e) -> Process { co_await e.dma(64, 0, DmaDir::In); };
  eng.spawn("t", xfer(eng));
  eng.run_until_idle();
  CHECK(eng.snapshot_counters().dma_bytes_in == 64);
}

TEST_CASE("deadlock: mutually blocked readers are diagnosed with channel names") {
  Engine eng;
  auto a = eng.make_channel<std::uint32_t>("chan_a", 1);
  auto b = eng.make_channel<std::uint32_t>("chan_b", 1);
  auto waiter = [](Engine& e, WordChan from, WordChan to) -> Process {
    auto w = co_await from->read();
    if (w) {
      std::uint32_t v = *w;
      co_await to->write(v);
    }
    (void)e;
  };
  eng.spawn("p0", waiter(eng, a, b));
  eng.spawn("p1", waiter(eng, b, a));
  CHECK_THROWS_WITH_AS(eng.run_until_idle(),
                       doctest::Contains("chan_a"), DeadlockError);
}

TEST_CASE("determinism: identical runs give identical cycles and counters") {
  auto run_once = [](std::uint64_t& cycles, CycleCounters& c) {
    Engine eng;
    auto ch = eng.make_channel<std::uint32_t>("words", 3);
    std::vector<std::uint32_t> sink;
    eng.spawn("producer", paced_producer(eng, ch, 20, 1));
    eng.spawn("consumer", paced_consumer(eng, ch, 2, sink));
    cycles = eng.run_until_idle();
    c = eng.snapshot_counters();
  };
  std::uint64_t c1 = 0, c2 = 0;
  CycleCounters k1, k2;
  run_once(c1, k1);
  run_once(c2, k2);
  CHECK(c1 == c2);
  CHECK(k1.producer_stall_cycles == k2.producer_stall_cycles);
  CHECK(k1.consumer_stall_cycles == k2.consumer_stall_cycles);
}

TEST_CASE("work: charges cycles to a named component") {
  Engine eng;
  auto p = [](Engine& e) -> Process {
    co_await e.work("unit0", 5);
    co_await e.work("unit0", 3);
  };
  eng.spawn("p", p(eng));
  CHECK(eng.run_until_idle() == 8);
  CHECK(eng.counters().component_cycles.at("unit0") == 8);
}
