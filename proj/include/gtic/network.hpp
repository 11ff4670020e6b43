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

#ifndef GTIC_NETWORK_HPP_
#define GTIC_NETWORK_HPP_

#include <string>
#include <vector>

#include "gtic/layers.hpp"

namespace gtic {

// A named stack of layers. Layer parameters are created under
// "<net>.<layer>" so several networks can share one ParamStore.
template <typename T>
struct NetworkT {
  struct Item {
    std::string name;
    LayerSpec spec;
  };
  std::string prefix;
  std::vector<Item> layers;

  void add(const std::string& name, const LayerSpec& spec) {
    layers.push_back({prefix.empty() ? name : prefix + "." + name, spec});
  }

  int init(int in_channels, ParamStoreT<T>& params, Rng& rng) const {
    int c = in_channels;
    for (const auto& item : layers)
      c = init_layer_params(item.spec, c, item.name, params, rng);
    return c;
  }

  TensorT<T> forward(ParamStoreT<T>& params, const TensorT<T>& input,
                     std::vector<LayerCacheT<T>>* tape = nullptr) const {
    if (tape) tape->assign(layers.size(), LayerCacheT<T>{});
    TensorT<T> x = input;
    for (std::size_t i = 0; i < layers.size(); ++i)
      x = layer_forward(layers[i].spec, params, layers[i].name, x,
                        tape ? &(*tape)[i] : nullptr);
    return x;
  }

  TensorT<T> backward(const ParamStoreT<T>& params,
                      const std::vector<LayerCacheT<T>>& tape,
                      const TensorT<T>& grad_output,
                      GradStoreT<T>& grads) const {
    GTIC_REQUIRE(tape.size() == layers.size(),
                 "tape/layer count mismatch in '", prefix, "'");
    TensorT<T> g = grad_output;
    for (std::size_t i = layers.size(); i-- > 0;)
      g = layer_backward(layers[i].spec, params, layers[i].name, tape[i], g,
                         grads);
    return g;
  }
};

using Network = NetworkT<float>;
using DNetwork = NetworkT<double>;

}  // namespace gtic

#endif  // GTIC_NETWORK_HPP_
