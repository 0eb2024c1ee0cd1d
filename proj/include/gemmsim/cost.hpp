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

namespace gemmsim {

// Development-time estimator comparing a simulate-mostly design loop against
// synthesis-only and full-simulation-only loops. Durations are in seconds.
struct CostModelParams {
  double num_sim = 0;         // simulated design iterations
  double num_synth = 0;       // hardware synthesis passes
  double compile_time = 0;    // build the simulation
  double sim_infer_time = 0;  // end-to-end inference in simulation
  double synth_time = 0;      // logic synthesis
  double hw_infer_time = 0;   // end-to-end inference on hardware

  void validate() const;
};

// Mixed loop: simulate most iterations, synthesize the few that need silicon.
double et_mixed_loop(const CostModelParams& p);
// Every iteration pays for synthesis plus hardware inference.
double et_synth_only(const CostModelParams& p);
// Every iteration pays for compilation plus simulated inference.
double et_fullsim_only(const CostModelParams& p);

}  // namespace gemmsim
