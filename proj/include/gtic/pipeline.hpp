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

#ifndef GTIC_PIPELINE_HPP_
#define GTIC_PIPELINE_HPP_

#include <vector>

#include "gtic/bitstream.hpp"
#include "gtic/network.hpp"

namespace gtic {

struct PipelineConfig {
  int channels = 16;  // K
  int depth = 2;      // quantization bits L
  float alpha1 = 0.5f, alpha2 = 0.25f, alpha3 = 0.25f;
  float shift_n = 0.0f;  // tunable mean shift, nominal range [-2, 2]
  bool surrogate_gradients = true;  // straight-through training mode
  bool masker_enabled = true;       // off: mhat forced all-ones (ablation)
};

void validate_config(const PipelineConfig& cfg);

// All codec networks share one ParamStore under fixed prefixes:
// enc.s1/s2/s3 (pyramid branches), enc.head, masker, dec.
struct CodecNets {
  Network enc_s1, enc_s2, enc_s3, enc_head;
  Network masker;
  Network decoder;
};

CodecNets build_codec_nets(int K);
void init_codec_params(const CodecNets& nets, ParamStore& params, Rng& rng,
                       int L);

// 2x average pooling applied (scale_index - 1) times; scale 1 is identity.
Tensor pyramid_downsample(const Tensor& img, int scale_index);

// Image [H,W,3] -> code tensor [H/8,W/8,K] via the three-scale pyramid,
// alpha-weighted sum and the two trailing convolutions.
Tensor encode_image(const Tensor& img, ParamStore& params,
                    const CodecNets& nets, const PipelineConfig& cfg);

// Code tensor -> single-channel logits [H/8,W/8,1].
Tensor masker_logits(const Tensor& omega, ParamStore& params,
                     const CodecNets& nets);

// m = sigmoid((y - mean - n) / (stddev + 1e-6)); stats are over the whole
// map, stddev is the population standard deviation. |n| > 2 is accepted but
// flagged on stderr.
Tensor importance_map(const Tensor& y, float n);

// Binary channel-prefix expansion: channel k (1-based) is 1 iff
// m >= (k-1)/K.
ITensor expand_importance(const Tensor& m, int K);

// Nearest-neighbor quantization onto {0..2^L-1}; exact .5 rounds up,
// out-of-range values clamp to the endpoints.
ITensor quantize(const Tensor& omega, int L);

// z = mhat * qhat elementwise.
ITensor apply_mask(const ITensor& qhat, const ITensor& mhat);

// Masked code tensor -> image [H,W,3]; every element lies in [0,1].
Tensor decode_code(const ITensor& z, ParamStore& params,
                   const CodecNets& nets);

// Straight-through surrogates. Hard forward values flow through training;
// gradients follow clamp(omega, 0, 2^L-1) for the quantizer and the ramp
// clamp(m*K - (k-1), 0, 1) for the mask threshold.
template <typename T>
T quantize_surrogate(T omega, int L) {
  const T hi = static_cast<T>((1 << L) - 1);
  return omega < T(0) ? T(0) : (omega > hi ? hi : omega);
}
template <typename T>
T quantize_surrogate_grad(T omega, int L) {
  const T hi = static_cast<T>((1 << L) - 1);
  return (omega >= T(0) && omega <= hi) ? T(1) : T(0);
}
template <typename T>
T mask_surrogate(T m, int channel, int K) {
  const T v = m * static_cast<T>(K) - static_cast<T>(channel);
  return v < T(0) ? T(0) : (v > T(1) ? T(1) : v);
}
template <typename T>
T mask_surrogate_grad(T m, int channel, int K) {
  const T v = m * static_cast<T>(K) - static_cast<T>(channel);
  return (v > T(0) && v < T(1)) ? static_cast<T>(K) : T(0);
}

// One differentiable training pass over a [B,H,W,3] batch. Outputs equal
// the composed non-differentiable chain exactly; the tapes make
// pipeline_backward possible.
struct PipelineForward {
  Tensor xhat;   // [B,H,W,3]
  Tensor omega;  // [B,H/8,W/8,K]
  Tensor y;      // [B,H/8,W/8,1]
  Tensor m;      // [B,H/8,W/8,1]
  Tensor mhat;   // [B,H/8,W/8,K], 0/1 stored as float
  Tensor z;      // [B,H/8,W/8,K], quantized-and-masked symbols as float

  // tapes
  Tensor x2, x3;
  Tensor e1, e2, e3;
  std::vector<float> mu, sigma;  // per image
  std::vector<LayerCache> tape_s1, tape_s2, tape_s3, tape_head, tape_masker,
      tape_dec;
};

PipelineForward pipeline_forward(const Tensor& batch, ParamStore& params,
                                 const CodecNets& nets,
                                 const PipelineConfig& cfg);

// Backpropagates d(loss)/d(xhat) into encoder, masker and decoder
// parameters. Returns nothing for the input image (it is data).
void pipeline_backward(const PipelineForward& fwd, const Tensor& grad_xhat,
                       const ParamStore& params, const CodecNets& nets,
                       const PipelineConfig& cfg, GradStore& grads);

}  // namespace gtic

#endif  // GTIC_PIPELINE_HPP_
