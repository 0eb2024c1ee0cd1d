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

// Regenerates the checked-in fixture model and example configs.
// Usage: gen_fixtures <repo-root>

#include <cstdio>
#include <string>

#include "gemmsim/config.hpp"
#include "gemmsim/report.hpp"
#include "helpers.hpp"

int main(int argc, char** argv) {
  using namespace gemmsim;
  const std::string root = argc > 1 ? argv[1] : ".";

  const auto model = testing::toy_cnn();
  save_model(model, root + "/models/toy_cnn.json", root + "/models/toy_cnn.weights");

  const auto stack = testing::conv_stack();
  save_model(stack, root + "/models/conv_stack.json", root + "/models/conv_stack.weights");

  AccelConfig vm;
  vm.kind = DesignKind::Vm;
  save_accel_config(vm, root + "/configs/vm.json");

  AccelConfig vm_ppu_off = vm;
  vm_ppu_off.vm.ppu_enabled = false;
  save_accel_config(vm_ppu_off, root + "/configs/vm_ppu_off.json");

  AccelConfig vm_no_broadcast = vm;
  vm_no_broadcast.vm.broadcast_enabled = false;
  save_accel_config(vm_no_broadcast, root + "/configs/vm_no_broadcast.json");

  AccelConfig sa;
  sa.kind = DesignKind::Sa;
  save_accel_config(sa, root + "/configs/sa16.json");

  AccelConfig sa8 = sa;
  sa8.sa.rows = sa8.sa.cols = 8;
  save_accel_config(sa8, root + "/configs/sa8.json");

  std::printf("fixtures written under %s\n", root.c_str());
  return 0;
}
