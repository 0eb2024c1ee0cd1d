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

#include "gemmsim/sim.hpp"

#include <algorithm>
#include <limits>

namespace gemmsim {

Engine::Engine(BusConfig bus) : bus_(bus) {
  if (bus_.width_bytes < 1 || bus_.num_links < 1 || bus_.setup_cycles < 0)
    throw std::invalid_argument("invalid bus configuration");
  link_free_at_.assign(static_cast<std::size_t>(bus_.num_links), 0);
}

Engine::~Engine() {
  for (auto& rec : procs_)
    if (rec.handle) rec.handle.destroy();
}

void Engine::spawn(std::string name, Process p) {
  ProcessHandle h = std::exchange(p.handle, {});
  h.promise().engine = this;
  procs_.push_back(ProcRec{std::move(name), h});
}

bool Engine::runnable(const ProcessPromise& pr) const {
  switch (pr.kind) {
    case WaitKind::Ready: return true;
    case WaitKind::Until: return pr.wake_at <= now_;
    case WaitKind::Read: return pr.chan->read_ready();
    case WaitKind::Write: return pr.chan->write_ready();
    case WaitKind::Done: return false;
  }
  return false;
}

std::uint64_t Engine::run_until_idle() {
  for (;;) {
    // One sweep per cycle, fixed creation order. Processes spawned during the
    // sweep are appended and visited within the same cycle.
    std::size_t done_count = 0;
    for (std::size_t i = 0; i < procs_.size(); ++i) {
      ProcessHandle h = procs_[i].handle;
      auto& pr = h.promise();
      if (pr.kind == WaitKind::Done) {
        ++done_count;
        continue;
      }
      if (!runnable(pr)) continue;
      h.resume();
      if (pr.exception) std::rethrow_exception(pr.exception);
    }

    // Retire finished processes once they dominate the table. Removal keeps
    // the creation order of the remainder, so scheduling is unaffected.
    if (done_count > 64 && done_count * 2 > procs_.size()) {
      std::vector<ProcRec> live;
      live.reserve(procs_.size() - done_count);
      for (auto& rec : procs_) {
        if (rec.handle.promise().kind == WaitKind::Done)
          rec.handle.destroy();
        else
          live.push_back(rec);
      }
      procs_ = std::move(live);
    }

    bool all_done = true;
    bool channel_progress = false;
    std::uint64_t next_wake = std::numeric_limits<std::uint64_t>::max();
    std::string blocked_desc;
    for (const auto& rec : procs_) {
      const auto& pr = rec.handle.promise();
      if (pr.kind == WaitKind::Done) continue;
      all_done = false;
      if (pr.kind == WaitKind::Until) {
        next_wake = std::min(next_wake, pr.wake_at);
      } else if (pr.kind == WaitKind::Read || pr.kind == WaitKind::Write) {
        if (runnable(pr)) {
          channel_progress = true;
        } else {
          if (!blocked_desc.empty()) blocked_desc += ", ";
          blocked_desc += "'" + rec.name + "' " +
                          (pr.kind == WaitKind::Read ? "reading" : "writing") +
                          " channel '" + pr.chan->name() + "'";
        }
      }
    }

    if (all_done) return now_;
    if (channel_progress) {
      ++now_;
      continue;
    }
    if (next_wake == std::numeric_limits<std::uint64_t>::max())
      throw DeadlockError("deadlock at cycle " + std::to_string(now_) + ": " + blocked_desc);
    now_ = next_wake;
  }
}

std::uint64_t Engine::dma_cycles(std::uint64_t bytes) const {
  const auto width = static_cast<std::uint64_t>(bus_.width_bytes);
  return static_cast<std::uint64_t>(bus_.setup_cycles) + (bytes + width - 1) / width;
}

Delay Engine::dma(std::uint64_t bytes, int link, DmaDir dir) {
  if (link < 0 || link >= bus_.num_links)
    throw std::invalid_argument("dma: invalid link index " + std::to_string(link));
  auto& free_at = link_free_at_[static_cast<std::size_t>(link)];
  const std::uint64_t start = std::max(now_, free_at);
  const std::uint64_t end = start + dma_cycles(bytes);
  free_at = end;
  if (dir == DmaDir::In)
    counters_.dma_bytes_in += bytes;
  else
    counters_.dma_bytes_out += bytes;
  return Delay{end - now_};
}

}  // namespace gemmsim
