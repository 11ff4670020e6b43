// Copyright 2026 The gtic Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef GTIC_GRADCHECK_HPP_
#define GTIC_GRADCHECK_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "gtic/layers.hpp"

namespace gtic {

struct GradCheckEntry {
  std::string name;  // parameter name, or "<input>"
  double max_rel_err = 0.0;
  int checked = 0;
  bool pass = true;
};

struct GradCheckReport {
  std::vector<GradCheckEntry> entries;
  double max_rel_err = 0.0;
  double tol = 0.0;
  bool pass = true;

  std::string summary() const;
};

// Central-difference check of layer_backward against a scalar sum-loss,
// 64-bit mode only. Large tensors are checked on a deterministic component
// sample (max_components per tensor, 0 = all); the report carries the
// per-tensor max relative error.
GradCheckReport finite_diff_check(const LayerSpec& spec, DParamStore& params,
                                  const std::string& prefix,
                                  const DTensor& input, double step,
                                  double tol, int max_components = 0,
                                  std::uint64_t sample_seed = 1);

}  // namespace gtic

#endif  // GTIC_GRADCHECK_HPP_
