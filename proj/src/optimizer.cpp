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

#include "gtic/optimizer.hpp"

#include <cmath>

namespace gtic {

void optimizer_step(ParamStore& params, const GradStore& grads,
                    OptimizerState& state) {
  GTIC_REQUIRE(state.learning_rate > 0.0f, "learning rate must be > 0, got ",
               state.learning_rate);
  // Validate everything before touching any parameter.
  for (const auto& [name, g] : grads.items()) {
    GTIC_REQUIRE(params.has(name), "gradient for unknown parameter '", name,
                 "'");
    const auto& p = params.at(name);
    GTIC_REQUIRE(p.same_dims(g), "gradient shape ", dims_str(g),
                 " mismatches parameter '", name, "' ", dims_str(p));
    GTIC_REQUIRE(g.all_finite(), "non-finite gradient for '", name,
                 "'; step rejected, parameters untouched");
  }

  state.step += 1;
  const float lr = state.learning_rate;
  if (state.algo == OptAlgo::kSgd) {
    for (const auto& [name, g] : grads.items()) {
      auto& p = params.at(name);
      for (std::size_t i = 0; i < p.size(); ++i) p[i] -= lr * g[i];
    }
    return;
  }

  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(static_cast<double>(state.beta1), t);
  const double c2 = 1.0 - std::pow(static_cast<double>(state.beta2), t);
  for (const auto& [name, g] : grads.items()) {
    auto& p = params.at(name);
    auto m1_it = state.m1.find(name);
    if (m1_it == state.m1.end())
      m1_it = state.m1.emplace(name, Tensor(p.dims())).first;
    auto m2_it = state.m2.find(name);
    if (m2_it == state.m2.end())
      m2_it = state.m2.emplace(name, Tensor(p.dims())).first;
    Tensor& m = m1_it->second;
    Tensor& v = m2_it->second;
    GTIC_REQUIRE(m.same_dims(p) && v.same_dims(p),
                 "optimizer moment shape mismatch for '", name, "'");
    for (std::size_t i = 0; i < p.size(); ++i) {
      m[i] = state.beta1 * m[i] + (1.0f - state.beta1) * g[i];
      v[i] = state.beta2 * v[i] + (1.0f - state.beta2) * g[i] * g[i];
      const double mhat = m[i] / c1;
      const double vhat = v[i] / c2;
      p[i] -= static_cast<float>(lr * mhat / (std::sqrt(vhat) + state.eps));
    }
  }
}

}  // namespace gtic
