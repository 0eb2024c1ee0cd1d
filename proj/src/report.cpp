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

#include "gemmsim/report.hpp"

#include <fstream>

namespace gemmsim {

using nlohmann::json;

json counters_to_json(const CycleCounters& c) {
  json comp = json::object();
  for (const auto& [k, v] : c.component_cycles) comp[k] = v;
  return json{
      {"component_cycles", comp},
      {"producer_stall_cycles", c.producer_stall_cycles},
      {"consumer_stall_cycles", c.consumer_stall_cycles},
      {"dma_bytes_in", c.dma_bytes_in},
      {"dma_bytes_out", c.dma_bytes_out},
      {"global_weight_buffer_reads", c.global_weight_buffer_reads},
      {"local_buffer_reads", c.local_buffer_reads},
      {"mac_ops_issued", c.mac_ops_issued},
      {"pe_active_cycles", c.pe_active_cycles},
      {"partial_sum_spill_bytes", c.partial_sum_spill_bytes},
  };
}

json accel_stats_to_json(const AccelStats& s) {
  std::uint64_t min_latency = 0, max_latency = 0;
  if (!s.passes.empty()) {
    min_latency = s.passes.front().latency();
    max_latency = min_latency;
    for (const auto& p : s.passes) {
      min_latency = std::min(min_latency, p.latency());
      max_latency = std::max(max_latency, p.latency());
    }
  }
  return json{
      {"tile_passes", s.passes.size()},
      {"pass_cycles_total", s.total_pass_cycles()},
      {"pass_mac_ops_total", s.total_mac_ops()},
      {"pass_latency_min", min_latency},
      {"pass_latency_max", max_latency},
      {"tasks_completed", s.tasks_completed},
      {"operands_dequeued", s.operands_dequeued},
      {"bank_writes", s.bank_writes},
  };
}

json inference_report_to_json(const InferenceReport& r) {
  json layers = json::array();
  for (const auto& l : r.layers)
    layers.push_back(json{{"name", l.name},
                          {"kind", l.kind},
                          {"conv_class", l.conv_class},
                          {"cycles", l.cycles}});
  return json{
      {"model", r.model},
      {"backend", r.backend},
      {"layers", layers},
      {"conv_cycles", r.conv_cycles},
      {"non_conv_cycles", r.non_conv_cycles},
      {"total_cycles", r.total_cycles},
      {"counters", counters_to_json(r.counters)},
      {"accel", accel_stats_to_json(r.accel)},
      {"output_digest", r.output_digest},
  };
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw SimError("cannot write '" + path + "'");
  out << text;
}

}  // namespace gemmsim
