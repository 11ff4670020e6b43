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

#include "gtic/adversary.hpp"

#include <cmath>

namespace gtic {

namespace {

constexpr double kLogFloor = 1e-7;

template <typename T>
NetworkT<T> build_branch(const std::string& prefix) {
  NetworkT<T> net;
  net.prefix = prefix;
  net.add("c0", LayerSpec::conv(64, 4, 2));
  net.add("a0", LayerSpec::leaky_relu(0.2f));
  net.add("c1", LayerSpec::conv(128, 4, 2));
  net.add("bn1", LayerSpec::batchnorm());
  net.add("a1", LayerSpec::leaky_relu(0.2f));
  net.add("c2", LayerSpec::conv(256, 4, 2));
  net.add("bn2", LayerSpec::batchnorm());
  net.add("a2", LayerSpec::leaky_relu(0.2f));
  net.add("c3", LayerSpec::conv(1, 3, 1));
  net.add("out", LayerSpec::sigmoid());
  return net;
}

// score[b] = spatial mean of map[b]; map is [B,h,w,1].
template <typename T>
void spatial_means(const TensorT<T>& map, int scale,
                   std::vector<ScaleScores>* out) {
  const int B = map.dim(0);
  const std::size_t per = map.size() / static_cast<std::size_t>(B);
  for (int b = 0; b < B; ++b) {
    double acc = 0;
    for (std::size_t i = 0; i < per; ++i) acc += map[b * per + i];
    (*out)[b].d[scale] = acc / static_cast<double>(per);
  }
}

template <typename T>
TensorT<T> mean_backward(const TensorT<T>& map, int scale,
                         const std::vector<ScaleScores>& dscores) {
  const int B = map.dim(0);
  const std::size_t per = map.size() / static_cast<std::size_t>(B);
  TensorT<T> g(map.dims());
  for (int b = 0; b < B; ++b) {
    const T v =
        static_cast<T>(dscores[b].d[scale] / static_cast<double>(per));
    for (std::size_t i = 0; i < per; ++i) g[b * per + i] = v;
  }
  return g;
}

}  // namespace

void validate_weights(const LossWeights& w) {
  GTIC_REQUIRE(w.beta1 > 0 && w.beta2 > 0 && w.beta3 > 0,
               "scale weights must be positive");
  const float sum = w.beta1 + w.beta2 + w.beta3;
  GTIC_REQUIRE(std::fabs(sum - 1.0f) < 1e-5f,
               "scale weights must sum to 1, got ", sum);
  GTIC_REQUIRE(w.eta >= 0 && w.kappa >= 0,
               "loss weights must be non-negative");
}

template <typename T>
DiscNetsT<T> build_disc_nets() {
  return {build_branch<T>("disc.s1"), build_branch<T>("disc.s2"),
          build_branch<T>("disc.s3")};
}

template <typename T>
void init_disc_params(const DiscNetsT<T>& nets, ParamStoreT<T>& params,
                      Rng& rng) {
  nets.s1.init(3, params, rng);
  nets.s2.init(3, params, rng);
  nets.s3.init(3, params, rng);
}

template <typename T>
DiscForwardT<T> discriminator_forward_batch(const TensorT<T>& batch,
                                            ParamStoreT<T>& params,
                                            const DiscNetsT<T>& nets) {
  GTIC_REQUIRE(batch.rank() == 4 && batch.dim(3) == 3,
               "discriminator expects [B,H,W,3], got ", dims_str(batch));
  GTIC_REQUIRE(batch.dim(1) % 4 == 0 && batch.dim(2) % 4 == 0,
               "discriminator needs dims divisible by 4, got ", batch.dim(1),
               "x", batch.dim(2));
  ParamStoreT<T> none;
  DiscForwardT<T> fwd;
  fwd.in1 = batch;
  fwd.in2 = layer_forward(LayerSpec::avgpool(2), none, "", fwd.in1);
  fwd.in3 = layer_forward(LayerSpec::avgpool(2), none, "", fwd.in2);
  fwd.map1 = nets.s1.forward(params, fwd.in1, &fwd.tape1);
  fwd.map2 = nets.s2.forward(params, fwd.in2, &fwd.tape2);
  fwd.map3 = nets.s3.forward(params, fwd.in3, &fwd.tape3);
  fwd.scores.assign(batch.dim(0), ScaleScores{});
  spatial_means(fwd.map1, 0, &fwd.scores);
  spatial_means(fwd.map2, 1, &fwd.scores);
  spatial_means(fwd.map3, 2, &fwd.scores);
  return fwd;
}

template <typename T>
ScaleScores discriminator_forward(const TensorT<T>& img,
                                  ParamStoreT<T>& params,
                                  const DiscNetsT<T>& nets) {
  GTIC_REQUIRE(img.rank() == 3, "expected an [H,W,C] image, got ",
               dims_str(img));
  auto fwd = discriminator_forward_batch(to_batch1(img), params, nets);
  return fwd.scores[0];
}

template <typename T>
TensorT<T> discriminator_backward(const DiscForwardT<T>& fwd,
                                  const std::vector<ScaleScores>& dscores,
                                  const ParamStoreT<T>& params,
                                  const DiscNetsT<T>& nets,
                                  GradStoreT<T>& grads) {
  GTIC_REQUIRE(dscores.size() == fwd.scores.size(),
               "score gradient count mismatches batch");
  ParamStoreT<T> none;
  TensorT<T> g1 = nets.s1.backward(params, fwd.tape1,
                                   mean_backward(fwd.map1, 0, dscores), grads);
  TensorT<T> g2 = nets.s2.backward(params, fwd.tape2,
                                   mean_backward(fwd.map2, 1, dscores), grads);
  TensorT<T> g3 = nets.s3.backward(params, fwd.tape3,
                                   mean_backward(fwd.map3, 2, dscores), grads);

  // Pooled branches push their input gradient back up to full resolution.
  LayerCacheT<T> pool_cache2, pool_cache3;
  pool_cache2.valid = pool_cache3.valid = true;
  pool_cache2.spec = pool_cache3.spec = LayerSpec::avgpool(2);
  pool_cache2.input = fwd.in1;
  pool_cache3.input = fwd.in2;
  GradStoreT<T> unused;
  TensorT<T> g3_up = layer_backward(LayerSpec::avgpool(2), none, "",
                                    pool_cache3, g3, unused);
  for (std::size_t i = 0; i < g2.size(); ++i) g2[i] += g3_up[i];
  TensorT<T> g2_up = layer_backward(LayerSpec::avgpool(2), none, "",
                                    pool_cache2, g2, unused);
  for (std::size_t i = 0; i < g1.size(); ++i) g1[i] += g2_up[i];
  return g1;
}

double clamped_log(double v) { return std::log(v < kLogFloor ? kLogFloor : v); }
double clamped_log_grad(double v) { return v < kLogFloor ? 0.0 : 1.0 / v; }

double adversarial_loss(const ScaleScores& real, const ScaleScores& fake,
                        const LossWeights& w) {
  validate_weights(w);
  const double beta[3] = {w.beta1, w.beta2, w.beta3};
  double loss = 0.0;
  for (int i = 0; i < 3; ++i)
    loss += beta[i] * (clamped_log(real.d[i]) + clamped_log(1.0 - fake.d[i]));
  return loss;
}

double distortion_loss(const Tensor& x, const Tensor& xhat) {
  GTIC_REQUIRE(x.dims() == xhat.dims(), "distortion loss needs equal shapes, ",
               dims_str(x), " vs ", dims_str(xhat));
  double acc = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double d = static_cast<double>(x[i]) - static_cast<double>(xhat[i]);
    acc += d * d;
  }
  return acc / static_cast<double>(x.size());
}

double overall_loss(const std::vector<std::pair<double, double>>& per_image,
                    const LossWeights& w) {
  validate_weights(w);
  GTIC_REQUIRE(!per_image.empty(), "overall loss needs a non-empty batch");
  double acc = 0.0;
  for (const auto& [la, ld] : per_image) acc += w.eta * la + w.kappa * ld;
  return acc / static_cast<double>(per_image.size());
}

template DiscNetsT<float> build_disc_nets<float>();
template DiscNetsT<double> build_disc_nets<double>();
template void init_disc_params<float>(const DiscNetsT<float>&,
                                      ParamStoreT<float>&, Rng&);
template void init_disc_params<double>(const DiscNetsT<double>&,
                                       ParamStoreT<double>&, Rng&);
template DiscForwardT<float> discriminator_forward_batch<float>(
    const TensorT<float>&, ParamStoreT<float>&, const DiscNetsT<float>&);
template DiscForwardT<double> discriminator_forward_batch<double>(
    const TensorT<double>&, ParamStoreT<double>&, const DiscNetsT<double>&);
template ScaleScores discriminator_forward<float>(const TensorT<float>&,
                                                  ParamStoreT<float>&,
                                                  const DiscNetsT<float>&);
template ScaleScores discriminator_forward<double>(const TensorT<double>&,
                                                   ParamStoreT<double>&,
                                                   const DiscNetsT<double>&);
template TensorT<float> discriminator_backward<float>(
    const DiscForwardT<float>&, const std::vector<ScaleScores>&,
    const ParamStoreT<float>&, const DiscNetsT<float>&, GradStoreT<float>&);
template TensorT<double> discriminator_backward<double>(
    const DiscForwardT<double>&, const std::vector<ScaleScores>&,
    const ParamStoreT<double>&, const DiscNetsT<double>&,
    GradStoreT<double>&);

}  // namespace gtic
