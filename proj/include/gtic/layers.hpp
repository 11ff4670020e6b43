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

#ifndef GTIC_LAYERS_HPP_
#define GTIC_LAYERS_HPP_

#include <string>
#include <vector>

#include "gtic/param_store.hpp"
#include "gtic/tensor.hpp"

namespace gtic {

enum class LayerKind {
  kConv,
  kTransposedConv,
  kBatchNorm,
  kRelu,
  kLeakyRelu,
  kSigmoid,
  kAvgPool,
  kResidualBlock,
};

const char* layer_kind_name(LayerKind k);

// One layer description. `padding < 0` selects the same-style default
// floor((kernel-1)/2), which keeps stride-1 spatial dims and halves them
// exactly under stride 2 on even inputs.
struct LayerSpec {
  LayerKind kind = LayerKind::kRelu;
  int kernel = 1;
  int filters = 0;
  int stride = 1;
  int padding = -1;
  float leaky_slope = 0.0f;

  static LayerSpec conv(int filters, int kernel, int stride, int padding = -1);
  static LayerSpec tconv(int filters, int kernel, int stride, int padding = -1);
  static LayerSpec batchnorm();
  static LayerSpec relu();
  static LayerSpec leaky_relu(float slope);
  static LayerSpec sigmoid();
  static LayerSpec avgpool(int kernel);
  // Residual block: conv3x3 -> relu -> conv3x3 -> batchnorm, skip added
  // before the closing relu. A 1x1 projection sits on the skip path when the
  // input channel count differs from `filters`.
  static LayerSpec residual(int filters);
};

void validate_spec(const LayerSpec& spec);
int effective_padding(const LayerSpec& spec);

// Output dims of a layer applied to a [B,H,W,C] input; throws on mismatch.
std::vector<int> layer_output_dims(const LayerSpec& spec,
                                   const std::vector<int>& in);

// Everything backward needs that forward already computed.
template <typename T>
struct LayerCacheT {
  bool valid = false;
  LayerSpec spec;
  TensorT<T> input;
  TensorT<T> output;
  // Batchnorm (train mode): normalized values and the batch inverse stddev.
  TensorT<T> xhat;
  std::vector<T> inv_std;
  bool used_batch_stats = false;
  // Residual block: sub-layer caches in execution order
  // conv1, relu1, conv2, bn, [proj], final relu-on-sum.
  std::vector<LayerCacheT<T>> sub;
};

using LayerCache = LayerCacheT<float>;
using DLayerCache = LayerCacheT<double>;

// Creates this layer's parameters under `prefix` and returns the output
// channel count. Weights are uniform in +-1/sqrt(fan_in) from `rng`.
template <typename T>
int init_layer_params(const LayerSpec& spec, int in_channels,
                      const std::string& prefix, ParamStoreT<T>& params,
                      Rng& rng);

// Forward pass on a [B,H,W,C] input. Train-mode batchnorm uses batch
// statistics and refreshes the running stats in `params`; inference mode
// reads the running stats. Fills `cache` for layer_backward when non-null.
template <typename T>
TensorT<T> layer_forward(const LayerSpec& spec, ParamStoreT<T>& params,
                         const std::string& prefix, const TensorT<T>& input,
                         LayerCacheT<T>* cache = nullptr);

// Exact analytic gradients. Accumulates parameter gradients into `grads`
// under the same names used by init_layer_params, returns grad wrt input.
template <typename T>
TensorT<T> layer_backward(const LayerSpec& spec, const ParamStoreT<T>& params,
                          const std::string& prefix,
                          const LayerCacheT<T>& cache,
                          const TensorT<T>& grad_output, GradStoreT<T>& grads);

// Batch helpers: [H,W,C] <-> [1,H,W,C].
template <typename T>
TensorT<T> to_batch1(const TensorT<T>& img);
template <typename T>
TensorT<T> from_batch1(const TensorT<T>& batched);

}  // namespace gtic

#endif  // GTIC_LAYERS_HPP_
