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

#include <array>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#ifndef GEMMSIM_BIN
#define GEMMSIM_BIN "gemmsim"
#endif
#ifndef GEMMSIM_ROOT
#define GEMMSIM_ROOT "."
#endif

namespace {

using nlohmann::json;

struct CliResult {
  int exit_code = -1;
  std::string stdout_text;
};

CliResult run_cli(const std::string& args) {
  const std::string out = "/tmp/gemmsim_cli_out.txt";
  const std::string cmd = std::string(GEMMSIM_BIN) + " " + args + " > " + out + " 2>/dev/null";
  const int rc = std::system(cmd.c_str());
  CliResult r;
  r.exit_code = WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
  std::ifstream f(out);
  std::stringstream ss;
  ss << f.rdbuf();
  r.stdout_text = ss.str();
  return r;
}

std::string fixture(const std::string& rel) { return std::string(GEMMSIM_ROOT) + "/" + rel; }

std::string toy_args(const std::string& backend, int seed) {
  return "run --model " + fixture("models/toy_cnn.json") + " --weights " +
         fixture("models/toy_cnn.weights") + " --backend " + backend + " --seed " +
         std::to_string(seed);
}

// Minimal structural validator for the subset of JSON Schema the report
// schema uses: type, required, properties, items, enum, pattern (ignored).
bool validates(const json& value, const json& schema, std::string& why) {
  if (schema.contains("type")) {
    const auto t = schema.at("type").get<std::string>();
    const bool ok = (t == "object" && value.is_object()) ||
                    (t == "array" && value.is_array()) ||
                    (t == "string" && value.is_string()) ||
                    (t == "integer" && value.is_number_integer()) ||
                    (t == "number" && value.is_number()) ||
                    (t == "boolean" && value.is_boolean());
    if (!ok) {
      why = "expected " + t + ", got " + value.dump().substr(0, 40);
      return false;
    }
  }
  if (schema.contains("enum")) {
    bool found = false;
    for (const auto& e : schema.at("enum")) found = found || e == value;
    if (!found) {
      why = "value not in enum: " + value.dump();
      return false;
    }
  }
  if (schema.contains("required"))
    for (const auto& key : schema.at("required")) {
      if (!value.contains(key.get<std::string>())) {
        why = "missing required key " + key.get<std::string>();
        return false;
      }
    }
  if (schema.contains("properties"))
    for (const auto& [key, sub] : schema.at("properties").items()) {
      if (!value.contains(key)) continue;
      if (!validates(value.at(key), sub, why)) {
        why = key + ": " + why;
        return false;
      }
    }
  if (schema.contains("items") && value.is_array())
    for (const auto& item : value) {
      if (!validates(item, schema.at("items"), why)) return false;
    }
  return true;
}

}  // namespace

TEST_CASE("cli run: identical digests on cpu, vm and sa") {
  std::array<std::string, 3> digests;
  int i = 0;
  for (const std::string backend : {"cpu", "vm", "sa"}) {
    auto r = run_cli(toy_args(backend, 42));
    REQUIRE(r.exit_code == 0);
    digests[static_cast<std::size_t>(i++)] =
        json::parse(r.stdout_text).at("output_digest").get<std::string>();
  }
  CHECK(digests[0] == digests[1]);
  CHECK(digests[0] == digests[2]);
}

TEST_CASE("cli run: report validates against the shipped schema") {
  auto r = run_cli(toy_args("vm", 9));
  REQUIRE(r.exit_code == 0);
  std::ifstream sf(fixture("docs/report.schema.json"));
  REQUIRE(sf.good());
  json schema;
  sf >> schema;
  std::string why;
  const bool ok = validates(json::parse(r.stdout_text), schema, why);
  CHECK_MESSAGE(ok, why);
}

TEST_CASE("cli run: cpu backend reports zero accelerator traffic") {
  auto r = run_cli(toy_args("cpu", 1));
  REQUIRE(r.exit_code == 0);
  auto j = json::parse(r.stdout_text);
  CHECK(j.at("counters").at("dma_bytes_in").get<std::uint64_t>() == 0);
  CHECK(j.at("accel").at("tile_passes").get<std::uint64_t>() == 0);
}

TEST_CASE("cli run: bad paths and bad flags map to the documented exit codes") {
  auto bad_config = run_cli(toy_args("vm", 1) + " --config /nonexistent/cfg.json");
  CHECK(bad_config.exit_code == 2);
  auto bad_model = run_cli("run --model /nonexistent/m.json --weights x --backend vm");
  CHECK(bad_model.exit_code == 2);
  auto bad_flag = run_cli("run --frobnicate");
  CHECK(bad_flag.exit_code == 1);
  auto bad_backend = run_cli(toy_args("gpu", 1));
  CHECK(bad_backend.exit_code == 1);
  auto no_sub = run_cli("");
  CHECK(no_sub.exit_code == 1);
}

TEST_CASE("cli run: explicit input file, including a wrong-size one") {
  const std::string path = "/tmp/gemmsim_cli_input.bin";
  {
    std::ofstream f(path, std::ios::binary);
    std::vector<char> bytes(1 * 8 * 8 * 3, 7);
    f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  }
  auto ok = run_cli("run --model " + fixture("models/toy_cnn.json") + " --weights " +
                    fixture("models/toy_cnn.weights") + " --backend sa --input " + path);
  CHECK(ok.exit_code == 0);
  {
    std::ofstream f(path, std::ios::binary);
    f.write("123", 3);
  }
  auto bad = run_cli("run --model " + fixture("models/toy_cnn.json") + " --weights " +
                     fixture("models/toy_cnn.weights") + " --backend sa --input " + path);
  CHECK(bad.exit_code == 2);
}

TEST_CASE("cli sweep: csv rows, shared digest, compute-bound ordering") {
  auto r = run_cli("sweep --model " + fixture("models/conv_stack.json") + " --weights " +
                   fixture("models/conv_stack.weights") + " --seed 7");
  REQUIRE(r.exit_code == 0);
  std::istringstream lines(r.stdout_text);
  std::string header;
  std::getline(lines, header);
  CHECK(header.rfind("size,", 0) == 0);
  struct Row {
    int size;
    std::uint64_t cycles;
    std::string digest;
  };
  std::vector<Row> rows;
  std::string line;
  while (std::getline(lines, line)) {
    if (line.empty()) continue;
    Row row;
    std::istringstream cells(line);
    std::string cell;
    std::getline(cells, cell, ',');
    row.size = std::stoi(cell);
    std::getline(cells, cell, ',');
    row.cycles = std::stoull(cell);
    for (int skip = 0; skip < 6; ++skip) std::getline(cells, cell, ',');
    std::getline(cells, row.digest, ',');
    rows.push_back(row);
  }
  REQUIRE(rows.size() == 3);
  CHECK(rows[0].size == 4);
  CHECK(rows[1].size == 8);
  CHECK(rows[2].size == 16);
  CHECK(rows[0].digest == rows[1].digest);
  CHECK(rows[0].digest == rows[2].digest);
  // compute-bound fixture: bigger arrays finish sooner
  CHECK(rows[2].cycles < rows[1].cycles);
  CHECK(rows[1].cycles < rows[0].cycles);
}

TEST_CASE("cli compare: ppu and broadcast configs agree functionally, counters differ") {
  auto ppu = run_cli("compare --model " + fixture("models/toy_cnn.json") + " --weights " +
                     fixture("models/toy_cnn.weights") + " --seed 3 --config-a " +
                     fixture("configs/vm.json") + " --config-b " +
                     fixture("configs/vm_ppu_off.json"));
  REQUIRE(ppu.exit_code == 0);
  auto j = json::parse(ppu.stdout_text);
  CHECK(j.at("digest_match").get<bool>());
  CHECK(j.at("deltas").at("dma_bytes_out_ratio").get<double>() == 4.0);

  auto bc = run_cli("compare --model " + fixture("models/toy_cnn.json") + " --weights " +
                    fixture("models/toy_cnn.weights") + " --seed 3 --config-a " +
                    fixture("configs/vm.json") + " --config-b " +
                    fixture("configs/vm_no_broadcast.json"));
  REQUIRE(bc.exit_code == 0);
  auto jb = json::parse(bc.stdout_text);
  CHECK(jb.at("deltas").at("global_weight_buffer_reads_ratio").get<double>() == 4.0);

  auto same = run_cli("compare --model " + fixture("models/toy_cnn.json") + " --weights " +
                      fixture("models/toy_cnn.weights") + " --seed 3 --config-a " +
                      fixture("configs/vm.json") + " --config-b " + fixture("configs/vm.json"));
  REQUIRE(same.exit_code == 0);
  auto js = json::parse(same.stdout_text);
  CHECK(js.at("deltas").at("total_cycles").get<std::int64_t>() == 0);
}

TEST_CASE("cli cost: estimates, ratios and rejection of negative inputs") {
  auto r = run_cli("cost --num-sim 10 --num-synth 1 --compile-time 2 --sim-infer-time 1 "
                   "--synth-time 50 --hw-infer-time 1");
  REQUIRE(r.exit_code == 0);
  auto j = json::parse(r.stdout_text);
  CHECK(j.at("et_mixed_loop").get<double>() == 81.0);
  CHECK(j.at("et_synth_only").get<double>() == 561.0);
  CHECK(j.at("et_fullsim_only").get<double>() == 33.0);
  CHECK(j.at("synth_vs_sim_compile_ratio").get<double>() == 25.0);

  auto bad = run_cli("cost --num-sim -1 --num-synth 1 --compile-time 2 --sim-infer-time 1 "
                     "--synth-time 50 --hw-infer-time 1");
  CHECK(bad.exit_code == 2);
}
