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

#include <string>

#include <json.hpp>

#include "gemmsim/runner.hpp"

namespace gemmsim {

// Machine-readable run reports. nlohmann::json orders keys, so identical
// runs serialize to identical bytes.
nlohmann::json counters_to_json(const CycleCounters& c);
nlohmann::json accel_stats_to_json(const AccelStats& s);
nlohmann::json inference_report_to_json(const InferenceReport& r);

void write_text_file(const std::string& path, const std::string& text);

}  // namespace gemmsim
