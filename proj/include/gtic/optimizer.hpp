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

#ifndef GTIC_OPTIMIZER_HPP_
#define GTIC_OPTIMIZER_HPP_

#include <cstdint>
#include <map>
#include <string>

#include "gtic/param_store.hpp"

namespace gtic {

enum class OptAlgo { kSgd, kAdam };

// Adam is the training default (beta1 0.9, beta2 0.999, eps 1e-8); plain sgd
// stays available for tests. Moment buffers are keyed by parameter name and
// created lazily; iteration over std::map keeps updates order-stable.
struct OptimizerState {
  OptAlgo algo = OptAlgo::kAdam;
  float learning_rate = 1e-3f;
  float beta1 = 0.9f;
  float beta2 = 0.999f;
  float eps = 1e-8f;
  std::int64_t step = 0;
  std::map<std::string, Tensor> m1;
  std::map<std::string, Tensor> m2;
};

// Applies one update for every gradient in `grads`; names missing from
// `grads` (e.g. batchnorm running stats) are untouched. A non-finite
// gradient rejects the whole step and leaves the parameters unchanged.
void optimizer_step(ParamStore& params, const GradStore& grads,
                    OptimizerState& state);

}  // namespace gtic

#endif  // GTIC_OPTIMIZER_HPP_
