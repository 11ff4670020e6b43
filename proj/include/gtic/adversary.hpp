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

#ifndef GTIC_ADVERSARY_HPP_
#define GTIC_ADVERSARY_HPP_

#include <array>
#include <utility>
#include <vector>

#include "gtic/network.hpp"

namespace gtic {

struct LossWeights {
  float beta1 = 0.5f, beta2 = 0.25f, beta3 = 0.25f;
  float eta = 1.0f;    // adversarial term
  float kappa = 16.0f; // distortion term
};

void validate_weights(const LossWeights& w);

// Per-scale discriminator outputs, each strictly inside (0,1).
struct ScaleScores {
  std::array<double, 3> d{0.5, 0.5, 0.5};
};

// Three pooled scales, each a downsampling critic:
// conv(64,4,s2) -> lrelu -> conv(128,4,s2)+bn -> lrelu ->
// conv(256,4,s2)+bn -> lrelu -> conv(1,3,s1) -> sigmoid -> spatial mean.
// Double instantiations exist for gradient checking.
template <typename T>
struct DiscNetsT {
  NetworkT<T> s1, s2, s3;
};
using DiscNets = DiscNetsT<float>;

template <typename T>
DiscNetsT<T> build_disc_nets();

template <typename T>
void init_disc_params(const DiscNetsT<T>& nets, ParamStoreT<T>& params,
                      Rng& rng);

template <typename T>
struct DiscForwardT {
  std::vector<ScaleScores> scores;  // one entry per batch image
  TensorT<T> in1, in2, in3;
  TensorT<T> map1, map2, map3;  // post-sigmoid score maps
  std::vector<LayerCacheT<T>> tape1, tape2, tape3;
};
using DiscForward = DiscForwardT<float>;

// Batch of [B,H,W,3] images; dims must be divisible by 4 for the pooling.
template <typename T>
DiscForwardT<T> discriminator_forward_batch(const TensorT<T>& batch,
                                            ParamStoreT<T>& params,
                                            const DiscNetsT<T>& nets);

template <typename T>
ScaleScores discriminator_forward(const TensorT<T>& img,
                                  ParamStoreT<T>& params,
                                  const DiscNetsT<T>& nets);

// dscores[b][i] = dLoss/dD_i(image b). Accumulates discriminator parameter
// gradients and returns dLoss/d(input batch) so generator updates can flow
// through the critic.
template <typename T>
TensorT<T> discriminator_backward(const DiscForwardT<T>& fwd,
                                  const std::vector<ScaleScores>& dscores,
                                  const ParamStoreT<T>& params,
                                  const DiscNetsT<T>& nets,
                                  GradStoreT<T>& grads);

// log with its argument clamped below at 1e-7, and the matching derivative
// (zero inside the clamp).
double clamped_log(double v);
double clamped_log_grad(double v);

// L_A = sum_i beta_i { log D_i(real) + log(1 - D_i(fake)) }.
double adversarial_loss(const ScaleScores& real, const ScaleScores& fake,
                        const LossWeights& w);

// Mean squared error over all elements.
double distortion_loss(const Tensor& x, const Tensor& xhat);

// (1/B) sum_j eta * L_A_j + kappa * L_D_j.
double overall_loss(const std::vector<std::pair<double, double>>& per_image,
                    const LossWeights& w);

}  // namespace gtic

#endif  // GTIC_ADVERSARY_HPP_
