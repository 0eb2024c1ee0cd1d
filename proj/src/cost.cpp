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

#include "gemmsim/cost.hpp"

#include <stdexcept>

namespace gemmsim {

void CostModelParams::validate() const {
  if (num_sim < 0 || num_synth < 0 || compile_time < 0 || sim_infer_time < 0 ||
      synth_time < 0 || hw_infer_time < 0)
    throw std::invalid_argument("cost model parameters must be non-negative");
}

double et_mixed_loop(const CostModelParams& p) {
  p.validate();
  return p.num_sim * (p.compile_time + p.sim_infer_time) +
         p.num_synth * (p.synth_time + p.hw_infer_time);
}

double et_synth_only(const CostModelParams& p) {
  p.validate();
  return (p.num_sim + p.num_synth) * (p.synth_time + p.hw_infer_time);
}

double et_fullsim_only(const CostModelParams& p) {
  p.validate();
  return (p.num_sim + p.num_synth) * (p.compile_time + p.sim_infer_time);
}

}  // namespace gemmsim
