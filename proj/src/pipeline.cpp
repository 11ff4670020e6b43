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

#include "gtic/pipeline.hpp"

#include <cmath>
#include <iostream>

namespace gtic {

namespace {

constexpr float kNormEps = 1e-6f;

void check_image(const Tensor& img) {
  GTIC_REQUIRE(img.rank() == 3, "expected an [H,W,C] image, got ",
               dims_str(img));
}

// Per-image mean and population stddev of the logits y.
void map_stats(const float* y, std::size_t n, float* mu, float* sigma) {
  double sum = 0;
  for (std::size_t i = 0; i < n; ++i) sum += y[i];
  const double mean = sum / static_cast<double>(n);
  double var = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = y[i] - mean;
    var += d * d;
  }
  var /= static_cast<double>(n);
  *mu = static_cast<float>(mean);
  *sigma = static_cast<float>(std::sqrt(var));
}

float logistic(float v) {
  return static_cast<float>(1.0 / (1.0 + std::exp(-static_cast<double>(v))));
}

}  // namespace

void validate_config(const PipelineConfig& cfg) {
  GTIC_REQUIRE(cfg.channels >= 1, "K must be >= 1, got ", cfg.channels);
  GTIC_REQUIRE(cfg.depth >= 1 && cfg.depth <= 8, "L must lie in 1..8, got ",
               cfg.depth);
  GTIC_REQUIRE(cfg.alpha1 > 0 && cfg.alpha2 > 0 && cfg.alpha3 > 0,
               "scale weights must be positive");
  const float sum = cfg.alpha1 + cfg.alpha2 + cfg.alpha3;
  GTIC_REQUIRE(std::fabs(sum - 1.0f) < 1e-5f,
               "scale weights must sum to 1, got ", sum);
}

CodecNets build_codec_nets(int K) {
  CodecNets nets;

  // Scale branches all land on (H/8, W/8, 256).
  nets.enc_s1.prefix = "enc.s1";
  nets.enc_s1.add("c0", LayerSpec::conv(64, 5, 2));
  nets.enc_s1.add("a0", LayerSpec::relu());
  nets.enc_s1.add("r0", LayerSpec::residual(64));
  nets.enc_s1.add("c1", LayerSpec::conv(128, 5, 2));
  nets.enc_s1.add("a1", LayerSpec::relu());
  nets.enc_s1.add("r1", LayerSpec::residual(128));
  nets.enc_s1.add("c2", LayerSpec::conv(256, 5, 2));
  nets.enc_s1.add("a2", LayerSpec::relu());
  nets.enc_s1.add("r2", LayerSpec::residual(256));

  nets.enc_s2.prefix = "enc.s2";
  nets.enc_s2.add("c0", LayerSpec::conv(128, 5, 2));
  nets.enc_s2.add("a0", LayerSpec::relu());
  nets.enc_s2.add("r0", LayerSpec::residual(128));
  nets.enc_s2.add("c1", LayerSpec::conv(256, 5, 2));
  nets.enc_s2.add("a1", LayerSpec::relu());
  nets.enc_s2.add("r1", LayerSpec::residual(256));

  nets.enc_s3.prefix = "enc.s3";
  nets.enc_s3.add("c0", LayerSpec::conv(256, 5, 2));
  nets.enc_s3.add("a0", LayerSpec::relu());
  nets.enc_s3.add("r0", LayerSpec::residual(256));

  nets.enc_head.prefix = "enc.head";
  nets.enc_head.add("c0", LayerSpec::conv(256, 3, 1));
  nets.enc_head.add("a0", LayerSpec::relu());
  nets.enc_head.add("c1", LayerSpec::conv(K, 3, 1));

  nets.masker.prefix = "masker";
  nets.masker.add("r0", LayerSpec::residual(256));
  nets.masker.add("r1", LayerSpec::residual(256));
  nets.masker.add("c0", LayerSpec::conv(1, 3, 1));

  nets.decoder.prefix = "dec";
  nets.decoder.add("c0", LayerSpec::conv(128, 3, 1));
  nets.decoder.add("a0", LayerSpec::relu());
  nets.decoder.add("c1", LayerSpec::conv(256, 3, 1));
  nets.decoder.add("a1", LayerSpec::relu());
  for (int i = 0; i < 15; ++i)
    nets.decoder.add("r" + std::to_string(i), LayerSpec::residual(256));
  nets.decoder.add("t0", LayerSpec::tconv(128, 4, 2));
  nets.decoder.add("a2", LayerSpec::relu());
  nets.decoder.add("t1", LayerSpec::tconv(64, 4, 2));
  nets.decoder.add("a3", LayerSpec::relu());
  nets.decoder.add("t2", LayerSpec::tconv(3, 4, 2));
  nets.decoder.add("out", LayerSpec::sigmoid());
  return nets;
}

void init_codec_params(const CodecNets& nets, ParamStore& params, Rng& rng,
                       int L) {
  nets.enc_s1.init(3, params, rng);
  nets.enc_s2.init(3, params, rng);
  nets.enc_s3.init(3, params, rng);
  const int K = nets.enc_head.layers.back().spec.filters;
  nets.enc_head.init(256, params, rng);
  nets.masker.init(K, params, rng);
  nets.decoder.init(K, params, rng);
  // Start the code tensor mid-range so the clipped straight-through
  // estimator sees in-range values from the first step.
  params.at("enc.head.c1.b").fill(static_cast<float>((1 << L) - 1) / 2.0f);
}

Tensor pyramid_downsample(const Tensor& img, int scale_index) {
  check_image(img);
  GTIC_REQUIRE(scale_index >= 1 && scale_index <= 3,
               "scale index must be 1..3, got ", scale_index);
  const int factor = 1 << (scale_index - 1);
  GTIC_REQUIRE(img.dim(0) % factor == 0 && img.dim(1) % factor == 0,
               "image dims ", img.dim(0), "x", img.dim(1),
               " not divisible by ", factor);
  ParamStore none;
  Tensor x = to_batch1(img);
  for (int i = 1; i < scale_index; ++i)
    x = layer_forward(LayerSpec::avgpool(2), none, "", x);
  return from_batch1(x);
}

namespace {

// Shared by the public single-image op and the batched training pass.
Tensor encode_batch(const Tensor& batch, ParamStore& params,
                    const CodecNets& nets, const PipelineConfig& cfg,
                    PipelineForward* fwd) {
  GTIC_REQUIRE(batch.rank() == 4, "encoder expects [B,H,W,C], got ",
               dims_str(batch));
  GTIC_REQUIRE(batch.dim(3) == 3, "encoder expects 3 input channels, got ",
               batch.dim(3));
  GTIC_REQUIRE(batch.dim(1) % 8 == 0 && batch.dim(2) % 8 == 0,
               "image dims ", batch.dim(1), "x", batch.dim(2),
               " must be multiples of 8 (pad first)");
  ParamStore none;
  Tensor x2 = layer_forward(LayerSpec::avgpool(2), none, "", batch);
  Tensor x3 = layer_forward(LayerSpec::avgpool(2), none, "", x2);
  Tensor e1 = nets.enc_s1.forward(params, batch, fwd ? &fwd->tape_s1 : nullptr);
  Tensor e2 = nets.enc_s2.forward(params, x2, fwd ? &fwd->tape_s2 : nullptr);
  Tensor e3 = nets.enc_s3.forward(params, x3, fwd ? &fwd->tape_s3 : nullptr);
  Tensor esum(e1.dims());
  for (std::size_t i = 0; i < esum.size(); ++i)
    esum[i] = cfg.alpha1 * e1[i] + cfg.alpha2 * e2[i] + cfg.alpha3 * e3[i];
  Tensor omega =
      nets.enc_head.forward(params, esum, fwd ? &fwd->tape_head : nullptr);
  if (fwd) {
    fwd->x2 = std::move(x2);
    fwd->x3 = std::move(x3);
    fwd->e1 = std::move(e1);
    fwd->e2 = std::move(e2);
    fwd->e3 = std::move(e3);
  }
  return omega;
}

// Per-image normalization + sigmoid over a [B,h,w,1] logit tensor.
Tensor importance_from_logits(const Tensor& y, float n, std::vector<float>* mu,
                              std::vector<float>* sigma) {
  const int B = y.dim(0);
  const std::size_t per = y.size() / static_cast<std::size_t>(B);
  Tensor m(y.dims());
  for (int b = 0; b < B; ++b) {
    float mb, sb;
    map_stats(y.data() + b * per, per, &mb, &sb);
    for (std::size_t i = 0; i < per; ++i) {
      const float yhat = (y[b * per + i] - mb - n) / (sb + kNormEps);
      m[b * per + i] = logistic(yhat);
    }
    if (mu) mu->push_back(mb);
    if (sigma) sigma->push_back(sb);
  }
  return m;
}

}  // namespace

Tensor encode_image(const Tensor& img, ParamStore& params,
                    const CodecNets& nets, const PipelineConfig& cfg) {
  check_image(img);
  validate_config(cfg);
  return from_batch1(encode_batch(to_batch1(img), params, nets, cfg, nullptr));
}

Tensor masker_logits(const Tensor& omega, ParamStore& params,
                     const CodecNets& nets) {
  check_image(omega);
  return from_batch1(nets.masker.forward(params, to_batch1(omega)));
}

Tensor importance_map(const Tensor& y, float n) {
  GTIC_REQUIRE(y.rank() == 2 || (y.rank() == 3 && y.dim(2) == 1),
               "importance map expects [h,w] or [h,w,1] logits, got ",
               dims_str(y));
  if (n < -2.0f || n > 2.0f)
    std::cerr << "gtic: note: shift n=" << n
              << " lies outside the nominal [-2,2] range\n";
  const int h = y.dim(0), w = y.dim(1);
  Tensor batched = y.reshaped({1, h, w, 1});
  Tensor m = importance_from_logits(batched, n, nullptr, nullptr);
  return m.reshaped({h, w});
}

ITensor expand_importance(const Tensor& m, int K) {
  GTIC_REQUIRE(m.rank() == 2, "importance map must be [h,w], got ",
               dims_str(m));
  GTIC_REQUIRE(K >= 1, "K must be >= 1, got ", K);
  const int h = m.dim(0), w = m.dim(1);
  ITensor mhat({h, w, K});
  for (int i = 0; i < h; ++i)
    for (int j = 0; j < w; ++j) {
      const double v = m.at2(i, j);
      for (int k = 0; k < K; ++k)
        mhat.at3(i, j, k) =
            v >= static_cast<double>(k) / static_cast<double>(K) ? 1 : 0;
    }
  return mhat;
}

ITensor quantize(const Tensor& omega, int L) {
  GTIC_REQUIRE(L >= 1 && L <= 8, "L must lie in 1..8, got ", L);
  const float hi = static_cast<float>((1 << L) - 1);
  ITensor q(omega.dims());
  for (std::size_t i = 0; i < omega.size(); ++i) {
    float v = omega[i];
    v = v < 0.0f ? 0.0f : (v > hi ? hi : v);
    q[i] = static_cast<std::int32_t>(std::floor(v + 0.5f));  // .5 rounds up
  }
  return q;
}

ITensor apply_mask(const ITensor& qhat, const ITensor& mhat) {
  GTIC_REQUIRE(qhat.dims() == mhat.dims(), "mask shape ", dims_str(mhat),
               " mismatches code shape ", dims_str(qhat));
  ITensor z(qhat.dims());
  for (std::size_t i = 0; i < z.size(); ++i) z[i] = qhat[i] * mhat[i];
  return z;
}

Tensor decode_code(const ITensor& z, ParamStore& params,
                   const CodecNets& nets) {
  GTIC_REQUIRE(z.rank() == 3, "code tensor must be [h,w,K], got ",
               dims_str(z));
  Tensor zf = z.cast<float>();
  return from_batch1(nets.decoder.forward(params, to_batch1(zf)));
}

PipelineForward pipeline_forward(const Tensor& batch, ParamStore& params,
                                 const CodecNets& nets,
                                 const PipelineConfig& cfg) {
  validate_config(cfg);
  PipelineForward fwd;
  fwd.omega = encode_batch(batch, params, nets, cfg, &fwd);
  if (cfg.masker_enabled) {
    fwd.y = nets.masker.forward(params, fwd.omega, &fwd.tape_masker);
    fwd.m = importance_from_logits(fwd.y, cfg.shift_n, &fwd.mu, &fwd.sigma);
  } else {
    fwd.m = Tensor::full({batch.dim(0), fwd.omega.dim(1), fwd.omega.dim(2), 1},
                         1.0f);
  }

  const int K = cfg.channels;
  const int B = fwd.omega.dim(0);
  const int h = fwd.omega.dim(1), w = fwd.omega.dim(2);
  GTIC_REQUIRE(fwd.omega.dim(3) == K, "config K=", K,
               " mismatches encoder output channels ", fwd.omega.dim(3));
  const float hi = static_cast<float>((1 << cfg.depth) - 1);

  fwd.mhat = Tensor({B, h, w, K});
  fwd.z = Tensor({B, h, w, K});
  for (int b = 0; b < B; ++b)
    for (int i = 0; i < h; ++i)
      for (int j = 0; j < w; ++j) {
        const double m = fwd.m.at4(b, i, j, 0);
        for (int k = 0; k < K; ++k) {
          const float mh =
              m >= static_cast<double>(k) / static_cast<double>(K) ? 1.0f
                                                                   : 0.0f;
          float v = fwd.omega.at4(b, i, j, k);
          v = v < 0.0f ? 0.0f : (v > hi ? hi : v);
          const float qh = std::floor(v + 0.5f);
          fwd.mhat.at4(b, i, j, k) = mh;
          fwd.z.at4(b, i, j, k) = mh * qh;
        }
      }
  fwd.xhat = nets.decoder.forward(params, fwd.z, &fwd.tape_dec);
  return fwd;
}

void pipeline_backward(const PipelineForward& fwd, const Tensor& grad_xhat,
                       const ParamStore& params, const CodecNets& nets,
                       const PipelineConfig& cfg, GradStore& grads) {
  GTIC_REQUIRE(!fwd.tape_dec.empty(),
               "pipeline backward requires a training forward pass");
  Tensor dz =
      nets.decoder.backward(params, fwd.tape_dec, grad_xhat, grads);

  const int K = cfg.channels;
  const int B = fwd.omega.dim(0);
  const int h = fwd.omega.dim(1), w = fwd.omega.dim(2);
  Tensor domega(fwd.omega.dims());
  Tensor dm({B, h, w, 1});
  if (cfg.surrogate_gradients) {
    for (int b = 0; b < B; ++b)
      for (int i = 0; i < h; ++i)
        for (int j = 0; j < w; ++j) {
          const float m = fwd.m.at4(b, i, j, 0);
          float dm_acc = 0.0f;
          for (int k = 0; k < K; ++k) {
            const float g = dz.at4(b, i, j, k);
            const float omega = fwd.omega.at4(b, i, j, k);
            // The mask surrogate is only active where mhat is 1, so z
            // equals qhat wherever the ramp derivative is nonzero.
            const float qh = fwd.z.at4(b, i, j, k);
            // z = mhat * qhat: product rule with hard values, surrogate
            // derivatives through the two non-differentiable steps.
            domega.at4(b, i, j, k) = g * fwd.mhat.at4(b, i, j, k) *
                                     quantize_surrogate_grad(omega, cfg.depth);
            dm_acc += g * qh * mask_surrogate_grad(m, k, K);
          }
          dm.at4(b, i, j, 0) = dm_acc;
        }
  }

  if (cfg.masker_enabled && cfg.surrogate_gradients) {
    // Through the sigmoid and the per-image normalization (mean and stddev
    // are functions of y, so they get gradient too).
    Tensor dy(fwd.y.dims());
    const std::size_t per = static_cast<std::size_t>(h) * w;
    for (int b = 0; b < B; ++b) {
      const float mu = fwd.mu[b];
      const float sigma = fwd.sigma[b];
      const float denom = sigma + kNormEps;
      double s1 = 0.0, s2 = 0.0;
      std::vector<double> dyhat(per);
      for (std::size_t i = 0; i < per; ++i) {
        const float m = fwd.m[b * per + i];
        const double d = static_cast<double>(dm[b * per + i]) * m * (1.0f - m);
        dyhat[i] = d;
        s1 += d;
        const double yhat = (fwd.y[b * per + i] - mu - cfg.shift_n) / denom;
        s2 += d * yhat;
      }
      const double n = static_cast<double>(per);
      for (std::size_t i = 0; i < per; ++i) {
        double g = (dyhat[i] - s1 / n) / denom;
        if (sigma > 1e-12f) {
          const double centered = fwd.y[b * per + i] - mu;
          g -= s2 * centered / (n * sigma * denom);
        }
        dy[b * per + i] = static_cast<float>(g);
      }
    }

    Tensor domega_masker =
        nets.masker.backward(params, fwd.tape_masker, dy, grads);
    for (std::size_t i = 0; i < domega.size(); ++i)
      domega[i] += domega_masker[i];
  }

  Tensor desum = nets.enc_head.backward(params, fwd.tape_head, domega, grads);
  Tensor d1(desum.dims()), d2(desum.dims()), d3(desum.dims());
  for (std::size_t i = 0; i < desum.size(); ++i) {
    d1[i] = cfg.alpha1 * desum[i];
    d2[i] = cfg.alpha2 * desum[i];
    d3[i] = cfg.alpha3 * desum[i];
  }
  nets.enc_s1.backward(params, fwd.tape_s1, d1, grads);
  nets.enc_s2.backward(params, fwd.tape_s2, d2, grads);
  nets.enc_s3.backward(params, fwd.tape_s3, d3, grads);
}

}  // namespace gtic
