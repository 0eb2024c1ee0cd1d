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

#include <coroutine>
#include <cstdint>
#include <deque>
#include <exception>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "gemmsim/types.hpp"

namespace gemmsim {

// Cooperatively scheduled, cycle-quantized simulation engine.
//
// Processes are coroutines spawned onto an Engine. Each cycle the engine
// sweeps all processes once, in creation order; a resumed process runs until
// it delays, blocks on a channel, or finishes. A process that blocks stays
// suspended until the next cycle even if the condition clears later in the
// same sweep, which makes every run bit-deterministic for identical inputs.

class Engine;
class ChannelBase;

struct ProcessPromise;
using ProcessHandle = std::coroutine_handle<ProcessPromise>;

enum class WaitKind : std::uint8_t { Ready, Until, Read, Write, Done };

struct ProcessPromise {
  Engine* engine = nullptr;
  WaitKind kind = WaitKind::Ready;
  std::uint64_t wake_at = 0;
  ChannelBase* chan = nullptr;
  std::uint64_t blocked_at = 0;
  std::exception_ptr exception;

  struct Process get_return_object();
  std::suspend_always initial_suspend() noexcept { return {}; }
  std::suspend_always final_suspend() noexcept { return {}; }
  void return_void() noexcept { kind = WaitKind::Done; }
  void unhandled_exception() noexcept {
    exception = std::current_exception();
    kind = WaitKind::Done;
  }
};

// Handle returned by a process coroutine; ownership transfers to the Engine
// via spawn().
struct [[nodiscard]] Process {
  using promise_type = ProcessPromise;

  Process() = default;
  explicit Process(ProcessHandle h) : handle(h) {}
  Process(Process&& o) noexcept : handle(std::exchange(o.handle, {})) {}
  Process& operator=(Process&& o) noexcept {
    if (this != &o) {
      if (handle) handle.destroy();
      handle = std::exchange(o.handle, {});
    }
    return *this;
  }
  Process(const Process&) = delete;
  Process& operator=(const Process&) = delete;
  ~Process() {
    if (handle) handle.destroy();
  }

  ProcessHandle handle{};
};

inline Process ProcessPromise::get_return_object() {
  return Process{ProcessHandle::from_promise(*this)};
}

// co_await Delay{n}: suspend for n cycles (n == 0 is a no-op).
struct Delay {
  std::uint64_t cycles = 0;

  bool await_ready() const noexcept { return cycles == 0; }
  void await_suspend(ProcessHandle h) const;
  void await_resume() const noexcept {}
};

class ChannelBase {
 public:
  ChannelBase(std::string name, std::size_t capacity)
      : name_(std::move(name)), capacity_(capacity) {
    if (capacity_ < 1) throw std::invalid_argument("channel capacity must be >= 1");
  }
  virtual ~ChannelBase() = default;

  const std::string& name() const { return name_; }
  std::size_t capacity() const { return capacity_; }
  virtual std::size_t occupancy() const = 0;

  bool write_ready() const { return occupancy() < capacity_; }
  bool read_ready() const { return occupancy() > 0 || closed(); }

  // Fan-in support: a channel starts with one producer; close() retires one.
  void add_producer() { ++producers_; }
  void close() {
    if (producers_ > 0) --producers_;
  }
  bool closed() const { return producers_ == 0; }

  std::uint64_t producer_stalls() const { return producer_stalls_; }
  std::uint64_t consumer_stalls() const { return consumer_stalls_; }
  bool observed_full() const { return observed_full_; }

 protected:
  friend class Engine;
  template <typename T>
  friend struct ReadAwait;
  template <typename T>
  friend struct WriteAwait;

  std::string name_;
  std::size_t capacity_;
  int producers_ = 1;
  std::uint64_t producer_stalls_ = 0;
  std::uint64_t consumer_stalls_ = 0;
  bool observed_full_ = false;
};

template <typename T>
struct ReadAwait;
template <typename T>
struct WriteAwait;

// Bounded FIFO with blocking awaitable read/write and per-side stall counters.
// Reading an empty channel whose producers have all closed yields nullopt.
//
// write() moves from a named lvalue that must stay alive across the await;
// awaitables deliberately hold no owned state (g++ 11 destroys co_await
// operand temporaries before suspension, so only trivially destructible
// awaitables are safe to suspend on).
template <typename T>
class FifoChannel : public ChannelBase {
 public:
  using ChannelBase::ChannelBase;

  std::size_t occupancy() const override { return q_.size(); }

  WriteAwait<T> write(T& value);
  WriteAwait<T> write(T&& value) = delete;  // name the value; see above
  ReadAwait<T> read();

  // Non-blocking variants.
  bool try_write(T value) {
    if (!write_ready()) {
      observed_full_ = true;
      return false;
    }
    q_.push_back(std::move(value));
    return true;
  }
  std::optional<T> try_read() {
    if (q_.empty()) return std::nullopt;
    T v = std::move(q_.front());
    q_.pop_front();
    return v;
  }

 private:
  template <typename>
  friend struct ReadAwait;
  template <typename>
  friend struct WriteAwait;

  std::deque<T> q_;
};

// Aggregated run counters; per-component cycles are keyed by process-chosen
// names so accelerator models can attribute work without engine changes.
struct CycleCounters {
  std::map<std::string, std::uint64_t> component_cycles;
  std::uint64_t producer_stall_cycles = 0;
  std::uint64_t consumer_stall_cycles = 0;
  std::uint64_t dma_bytes_in = 0;
  std::uint64_t dma_bytes_out = 0;
  std::uint64_t global_weight_buffer_reads = 0;
  std::uint64_t local_buffer_reads = 0;
  std::uint64_t mac_ops_issued = 0;
  std::uint64_t pe_active_cycles = 0;
  std::uint64_t partial_sum_spill_bytes = 0;
};

inline void accumulate_counters(CycleCounters& into, const CycleCounters& from) {
  for (const auto& [k, v] : from.component_cycles) into.component_cycles[k] += v;
  into.producer_stall_cycles += from.producer_stall_cycles;
  into.consumer_stall_cycles += from.consumer_stall_cycles;
  into.dma_bytes_in += from.dma_bytes_in;
  into.dma_bytes_out += from.dma_bytes_out;
  into.global_weight_buffer_reads += from.global_weight_buffer_reads;
  into.local_buffer_reads += from.local_buffer_reads;
  into.mac_ops_issued += from.mac_ops_issued;
  into.pe_active_cycles += from.pe_active_cycles;
  into.partial_sum_spill_bytes += from.partial_sum_spill_bytes;
}

// DMA/bus timing model: parallel links, fixed per-transfer setup cost,
// width_bytes transferred per cycle per link.
struct BusConfig {
  int width_bytes = 8;
  int num_links = 2;
  int setup_cycles = 10;
};

enum class DmaDir { In, Out };

class Engine {
 public:
  explicit Engine(BusConfig bus = {});
  Engine(const Engine&) = delete;
  Engine& operator=(const Engine&) = delete;
  ~Engine();

  std::uint64_t now() const { return now_; }
  const BusConfig& bus() const { return bus_; }

  CycleCounters& counters() { return counters_; }
  CycleCounters snapshot_counters() const { return counters_; }

  void spawn(std::string name, Process p);

  // Runs until every process has terminated; returns the final cycle.
  // Throws DeadlockError naming the blocked channels if no progress is
  // possible while work is pending.
  std::uint64_t run_until_idle();

  Delay delay(std::uint64_t cycles) const { return Delay{cycles}; }

  // Counts `cycles` against component `name` and returns the matching delay.
  Delay work(const std::string& name, std::uint64_t cycles) {
    counters_.component_cycles[name] += cycles;
    return Delay{cycles};
  }

  // Claims `link` for setup + ceil(bytes/width) cycles starting at the first
  // cycle the link is free; returns a Delay to the transfer's completion.
  // Transfers sharing a link serialize; distinct links overlap.
  Delay dma(std::uint64_t bytes, int link, DmaDir dir);

  std::uint64_t dma_cycles(std::uint64_t bytes) const;

  template <typename T>
  std::shared_ptr<FifoChannel<T>> make_channel(std::string name, std::size_t capacity) {
    auto ch = std::make_shared<FifoChannel<T>>(std::move(name), capacity);
    channels_.push_back(ch);
    return ch;
  }

 private:
  friend struct Delay;
  template <typename>
  friend struct ReadAwait;
  template <typename>
  friend struct WriteAwait;

  struct ProcRec {
    std::string name;
    ProcessHandle handle;
  };

  bool runnable(const ProcessPromise& pr) const;

  std::uint64_t now_ = 0;
  BusConfig bus_;
  std::vector<std::uint64_t> link_free_at_;
  std::vector<ProcRec> procs_;
  std::vector<std::shared_ptr<ChannelBase>> channels_;
  CycleCounters counters_;
};

inline void Delay::await_suspend(ProcessHandle h) const {
  auto& pr = h.promise();
  pr.kind = WaitKind::Until;
  pr.wake_at = pr.engine->now() + cycles;
}

template <typename T>
struct ReadAwait {
  FifoChannel<T>* ch;
  bool suspended = false;
  ProcessHandle h{};

  bool await_ready() const { return ch->read_ready(); }
  void await_suspend(ProcessHandle handle) {
    suspended = true;
    h = handle;
    auto& pr = h.promise();
    pr.kind = WaitKind::Read;
    pr.chan = ch;
    pr.blocked_at = pr.engine->now();
  }
  std::optional<T> await_resume() {
    if (suspended) {
      auto& pr = h.promise();
      const std::uint64_t stalled = pr.engine->now() - pr.blocked_at;
      ch->consumer_stalls_ += stalled;
      pr.engine->counters().consumer_stall_cycles += stalled;
      pr.chan = nullptr;
    }
    return ch->try_read();
  }
};

template <typename T>
struct WriteAwait {
  FifoChannel<T>* ch;
  T* slot;
  bool suspended = false;
  ProcessHandle h{};

  bool await_ready() {
    if (ch->closed()) throw SimError("write on closed channel '" + ch->name() + "'");
    if (ch->write_ready()) return true;
    ch->observed_full_ = true;
    return false;
  }
  void await_suspend(ProcessHandle handle) {
    suspended = true;
    h = handle;
    auto& pr = h.promise();
    pr.kind = WaitKind::Write;
    pr.chan = ch;
    pr.blocked_at = pr.engine->now();
  }
  void await_resume() {
    if (suspended) {
      auto& pr = h.promise();
      const std::uint64_t stalled = pr.engine->now() - pr.blocked_at;
      ch->producer_stalls_ += stalled;
      pr.engine->counters().producer_stall_cycles += stalled;
      pr.chan = nullptr;
    }
    ch->q_.push_back(std::move(*slot));
  }
};

template <typename T>
WriteAwait<T> FifoChannel<T>::write(T& value) {
  return WriteAwait<T>{this, &value};
}

template <typename T>
ReadAwait<T> FifoChannel<T>::read() {
  return ReadAwait<T>{this};
}

}  // namespace gemmsim
