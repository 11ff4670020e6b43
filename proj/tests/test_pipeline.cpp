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

#include <cmath>
#include <cstring>

#include "doctest.h"
#include "gtic/pipeline.hpp"

using namespace gtic;

namespace {

// Scalar re-evaluation of the normalization + sigmoid, independent of the
// tensor implementation.
double oracle_importance(const std::vector<double>& y, std::size_t i,
                         double n) {
  double mu = 0;
  for (double v : y) mu += v;
  mu /= y.size();
  double var = 0;
  for (double v : y) var += (v - mu) * (v - mu);
  var /= y.size();
  const double sigma = std::sqrt(var);
  const double yhat = (y[i] - mu - n) / (sigma + 1e-6);
  return 1.0 / (1.0 + std::exp(-yhat));
}

Tensor quad_logits() {
  Tensor y({2, 2});
  y.at2(0, 0) = 1.0f;
  y.at2(0, 1) = 2.0f;
  y.at2(1, 0) = 3.0f;
  y.at2(1, 1) = 4.0f;
  return y;
}

Tensor random_image(int h, int w, Rng& rng) {
  Tensor img({h, w, 3});
  for (std::size_t i = 0; i < img.size(); ++i)
    img[i] = static_cast<float>(rng.uniform(0.0, 1.0));
  return img;
}

PipelineConfig toy_config() {
  PipelineConfig cfg;
  cfg.channels = 4;
  cfg.depth = 2;
  return cfg;
}

}  // namespace

TEST_CASE("pyramid downsample") {
  SUBCASE("constant image stays constant at every scale") {
    Tensor img = Tensor::full({8, 8, 3}, 0.37f);
    for (int s : {1, 2, 3}) {
      Tensor out = pyramid_downsample(img, s);
      for (std::size_t i = 0; i < out.size(); ++i)
        CHECK(out[i] == doctest::Approx(0.37f));
    }
  }
  SUBCASE("2x2 checkerboard pools to 0.5") {
    Tensor img({2, 2, 1});
    img.at3(0, 0, 0) = 0.0f;
    img.at3(0, 1, 0) = 1.0f;
    img.at3(1, 0, 0) = 1.0f;
    img.at3(1, 1, 0) = 0.0f;
    Tensor out = pyramid_downsample(img, 2);
    REQUIRE(out.size() == 1);
    CHECK(out[0] == doctest::Approx(0.5f));
  }
  SUBCASE("64x64 at scale 3 gives 16x16") {
    Tensor img({64, 64, 3});
    Tensor out = pyramid_downsample(img, 3);
    CHECK(out.dim(0) == 16);
    CHECK(out.dim(1) == 16);
  }
  SUBCASE("indivisible dims are rejected") {
    Tensor img({6, 6, 3});
    CHECK_THROWS_AS(pyramid_downsample(img, 3), Error);
  }
}

TEST_CASE("importance map values") {
  SUBCASE("constant logits give 0.5 everywhere at n=0") {
    Tensor y = Tensor::full({3, 3}, 1.7f);
    Tensor m = importance_map(y, 0.0f);
    for (std::size_t i = 0; i < m.size(); ++i)
      CHECK(m[i] == doctest::Approx(0.5).epsilon(1e-4));
  }
  SUBCASE("y = 1..4 at n=0") {
    Tensor m = importance_map(quad_logits(), 0.0f);
    const std::vector<double> y = {1, 2, 3, 4};
    const double frozen[4] = {0.207, 0.390, 0.610, 0.793};
    for (int i = 0; i < 4; ++i) {
      CHECK(m[i] == doctest::Approx(oracle_importance(y, i, 0.0)).epsilon(1e-5));
      CHECK(m[i] == doctest::Approx(frozen[i]).epsilon(2e-3));
    }
  }
  SUBCASE("y = 1..4 at n=2 sits elementwise below the n=0 map") {
    Tensor m0 = importance_map(quad_logits(), 0.0f);
    Tensor m2 = importance_map(quad_logits(), 2.0f);
    const std::vector<double> y = {1, 2, 3, 4};
    const double frozen[4] = {0.042, 0.097, 0.207, 0.390};
    for (int i = 0; i < 4; ++i) {
      CHECK(m2[i] == doctest::Approx(oracle_importance(y, i, 2.0)).epsilon(1e-5));
      CHECK(m2[i] == doctest::Approx(frozen[i]).epsilon(3e-2));
      CHECK(m2[i] < m0[i]);
    }
  }
  SUBCASE("every element lies strictly inside (0,1)") {
    Rng rng(3);
    Tensor y({4, 4});
    for (std::size_t i = 0; i < y.size(); ++i)
      y[i] = static_cast<float>(rng.uniform(-50, 50));
    Tensor m = importance_map(y, 0.0f);
    for (std::size_t i = 0; i < m.size(); ++i) {
      CHECK(m[i] > 0.0f);
      CHECK(m[i] < 1.0f);
    }
  }
}

TEST_CASE("importance matrix expansion") {
  SUBCASE("m=0.6, K=4 keeps channels 1..3") {
    Tensor m = Tensor::full({1, 1}, 0.6f);
    ITensor mhat = expand_importance(m, 4);
    CHECK(mhat.at3(0, 0, 0) == 1);
    CHECK(mhat.at3(0, 0, 1) == 1);
    CHECK(mhat.at3(0, 0, 2) == 1);
    CHECK(mhat.at3(0, 0, 3) == 0);
  }
  SUBCASE("boundary maps") {
    Tensor lo = Tensor::full({1, 1}, 1e-6f);
    ITensor mlo = expand_importance(lo, 4);
    CHECK(mlo.at3(0, 0, 0) == 1);
    for (int k = 1; k < 4; ++k) CHECK(mlo.at3(0, 0, k) == 0);
    Tensor hi = Tensor::full({1, 1}, 1.0f - 1e-7f);
    ITensor mhi = expand_importance(hi, 4);
    for (int k = 0; k < 4; ++k) CHECK(mhi.at3(0, 0, k) == 1);
  }
  SUBCASE("m=0.24, K=16 keeps exactly 4 channels") {
    Tensor m = Tensor::full({1, 1}, 0.24f);
    ITensor mhat = expand_importance(m, 16);
    int ones = 0;
    for (int k = 0; k < 16; ++k) ones += mhat.at3(0, 0, k);
    CHECK(ones == 4);
  }
  SUBCASE("ones-count oracle over the percent grid, K in {4,16}") {
    for (int K : {4, 16}) {
      for (int i = 0; i < 100; ++i) {
        const float mv = static_cast<float>(i) / 100.0f;
        Tensor m = Tensor::full({1, 1}, mv);
        ITensor mhat = expand_importance(m, K);
        int ones = 0;
        for (int k = 0; k < K; ++k) ones += mhat.at3(0, 0, k);
        const int want = std::min(
            K, static_cast<int>(std::floor(static_cast<double>(mv) * K)) + 1);
        CAPTURE(K);
        CAPTURE(mv);
        CHECK(ones == want);
      }
    }
  }
  SUBCASE("channel-prefix property on random maps") {
    Rng rng(17);
    for (int trial = 0; trial < 20; ++trial) {
      Tensor m({3, 5});
      for (std::size_t i = 0; i < m.size(); ++i)
        m[i] = static_cast<float>(rng.uniform(1e-6, 1.0 - 1e-6));
      ITensor mhat = expand_importance(m, 8);
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 5; ++j) {
          CHECK(mhat.at3(i, j, 0) == 1);
          for (int k = 0; k + 1 < 8; ++k)
            CHECK(mhat.at3(i, j, k) >= mhat.at3(i, j, k + 1));
        }
    }
  }
}

TEST_CASE("n-monotonicity of the masked channel count") {
  Rng rng(23);
  for (int trial = 0; trial < 20; ++trial) {
    Tensor y({4, 4});
    for (std::size_t i = 0; i < y.size(); ++i)
      y[i] = static_cast<float>(rng.uniform(-3, 3));
    long prev_sum = -1;
    float prev_n = 0;
    bool first = true;
    for (float n = -2.0f; n <= 2.01f; n += 0.5f) {
      Tensor m = importance_map(y, n);
      ITensor mhat = expand_importance(m, 16);
      long sum = 0;
      for (std::size_t i = 0; i < mhat.size(); ++i) sum += mhat[i];
      if (!first) {
        CAPTURE(prev_n);
        CAPTURE(n);
        CHECK(sum <= prev_sum);
      }
      prev_sum = sum;
      prev_n = n;
      first = false;
    }
  }
}

TEST_CASE("quantizer") {
  SUBCASE("nearest neighbor with .5 rounding up") {
    Tensor w({1, 4});
    w[0] = 1.49f;
    w[1] = 2.51f;
    w[2] = 0.5f;
    w[3] = 1.5f;
    ITensor q = quantize(w, 2);
    CHECK(q[0] == 1);
    CHECK(q[1] == 3);
    CHECK(q[2] == 1);
    CHECK(q[3] == 2);
  }
  SUBCASE("clamping at the range ends") {
    Tensor w({1, 2});
    w[0] = -0.7f;
    w[1] = 7.3f;
    ITensor q = quantize(w, 2);
    CHECK(q[0] == 0);
    CHECK(q[1] == 3);
  }
  SUBCASE("idempotent on C_L values") {
    Tensor w({1, 4});
    for (int i = 0; i < 4; ++i) w[i] = static_cast<float>(i);
    ITensor q = quantize(w, 2);
    for (int i = 0; i < 4; ++i) CHECK(q[i] == i);
  }
  SUBCASE("q is within 0.5 of the clamped input") {
    Rng rng(5);
    Tensor w({8, 8});
    for (std::size_t i = 0; i < w.size(); ++i)
      w[i] = static_cast<float>(rng.uniform(-2, 6));
    ITensor q = quantize(w, 2);
    for (std::size_t i = 0; i < w.size(); ++i) {
      const float clamped = std::min(3.0f, std::max(0.0f, w[i]));
      CHECK(std::fabs(q[i] - clamped) <= 0.5f);
    }
  }
}

TEST_CASE("mask application") {
  SUBCASE("all-ones mask is the identity") {
    ITensor q({2, 2, 1});
    q.at3(0, 0, 0) = 3;
    q.at3(1, 1, 0) = 2;
    ITensor ones = ITensor::full({2, 2, 1}, 1);
    ITensor z = apply_mask(q, ones);
    for (std::size_t i = 0; i < z.size(); ++i) CHECK(z[i] == q[i]);
  }
  SUBCASE("hand-checked elementwise product") {
    ITensor q({2, 2, 1});
    q.at3(0, 0, 0) = 1;
    q.at3(0, 1, 0) = 2;
    q.at3(1, 0, 0) = 3;
    q.at3(1, 1, 0) = 0;
    ITensor m({2, 2, 1});
    m.at3(0, 0, 0) = 1;
    m.at3(0, 1, 0) = 0;
    m.at3(1, 0, 0) = 1;
    m.at3(1, 1, 0) = 1;
    ITensor z = apply_mask(q, m);
    CHECK(z.at3(0, 0, 0) == 1);
    CHECK(z.at3(0, 1, 0) == 0);
    CHECK(z.at3(1, 0, 0) == 3);
    CHECK(z.at3(1, 1, 0) == 0);
  }
  SUBCASE("shape mismatch is rejected") {
    ITensor q({2, 2, 1});
    ITensor m({2, 3, 1});
    CHECK_THROWS_AS(apply_mask(q, m), Error);
  }
}

TEST_CASE("straight-through surrogates match finite differences of the surrogate") {
  Rng rng(29);
  const double h = 1e-6;
  for (int trial = 0; trial < 200; ++trial) {
    // Stay away from the clamp corners and ramp breakpoints.
    double w = rng.uniform(-1.5, 4.5);
    if (std::fabs(w - std::round(w)) < 0.01) continue;
    const double fd = (quantize_surrogate(w + h, 2) -
                       quantize_surrogate(w - h, 2)) /
                      (2 * h);
    CHECK(std::fabs(fd - quantize_surrogate_grad(w, 2)) < 1e-3);

    double m = rng.uniform(0.001, 0.999);
    const int K = 4;
    const int k = static_cast<int>(rng.next_below(K));
    if (std::fabs(m * K - std::round(m * K)) < 0.01) continue;
    const double fd2 =
        (mask_surrogate(m + h, k, K) - mask_surrogate(m - h, k, K)) / (2 * h);
    CHECK(std::fabs(fd2 - mask_surrogate_grad(m, k, K)) < 1e-3);
  }
}

TEST_CASE("codec shapes, determinism and finiteness") {
  Rng rng(1);
  PipelineConfig cfg;
  cfg.channels = 16;
  CodecNets nets = build_codec_nets(cfg.channels);
  ParamStore params;
  init_codec_params(nets, params, rng, cfg.depth);
  params.set_mode(Mode::kInference);

  Rng img_rng(2);
  Tensor img = random_image(64, 64, img_rng);

  Tensor omega = encode_image(img, params, nets, cfg);
  CHECK(omega.dims() == std::vector<int>{8, 8, 16});
  CHECK(omega.all_finite());

  Tensor omega2 = encode_image(img, params, nets, cfg);
  CHECK(std::memcmp(omega.data(), omega2.data(),
                    omega.size() * sizeof(float)) == 0);

  Tensor y = masker_logits(omega, params, nets);
  CHECK(y.dims() == std::vector<int>{8, 8, 1});
  CHECK(y.all_finite());

  Tensor m = importance_map(y.reshaped({8, 8}), 0.0f);
  ITensor mhat = expand_importance(m, cfg.channels);
  ITensor z = apply_mask(quantize(omega, cfg.depth), mhat);
  Tensor xhat = decode_code(z, params, nets);
  CHECK(xhat.dims() == std::vector<int>{64, 64, 3});
  for (std::size_t i = 0; i < xhat.size(); ++i) {
    CHECK(xhat[i] >= 0.0f);
    CHECK(xhat[i] <= 1.0f);
  }

  SUBCASE("non-multiple-of-8 dims are rejected") {
    Tensor odd = random_image(60, 64, img_rng);
    CHECK_THROWS_WITH_AS(encode_image(odd, params, nets, cfg),
                         doctest::Contains("multiples of 8"), Error);
  }
}

TEST_CASE("training forward equals the composed chain and feeds gradients") {
  Rng rng(7);
  PipelineConfig cfg = toy_config();
  cfg.shift_n = 0.25f;
  CodecNets nets = build_codec_nets(cfg.channels);
  ParamStore params;
  init_codec_params(nets, params, rng, cfg.depth);
  params.set_mode(Mode::kInference);

  Rng img_rng(11);
  Tensor img = random_image(32, 32, img_rng);
  PipelineForward fwd =
      pipeline_forward(to_batch1(img), params, nets, cfg);

  SUBCASE("outputs equal the non-differentiable chain exactly") {
    Tensor omega = encode_image(img, params, nets, cfg);
    CHECK(std::memcmp(omega.data(), fwd.omega.data(),
                      omega.size() * sizeof(float)) == 0);
    Tensor y = masker_logits(omega, params, nets);
    Tensor m = importance_map(y.reshaped({y.dim(0), y.dim(1)}), cfg.shift_n);
    ITensor mhat = expand_importance(m, cfg.channels);
    ITensor z = apply_mask(quantize(omega, cfg.depth), mhat);
    for (std::size_t i = 0; i < z.size(); ++i)
      CHECK(static_cast<float>(z[i]) == fwd.z[i]);
    Tensor xhat = decode_code(z, params, nets);
    CHECK(std::memcmp(xhat.data(), fwd.xhat.data(),
                      xhat.size() * sizeof(float)) == 0);
  }

  SUBCASE("sum-loss gradient reaches the encoder parameters") {
    GradStore grads;
    Tensor dxhat = Tensor::full(fwd.xhat.dims(), 1.0f);
    pipeline_backward(fwd, dxhat, params, nets, cfg, grads);
    double enc_norm = 0;
    for (const auto& [name, g] : grads.items())
      if (name.rfind("enc.", 0) == 0)
        for (std::size_t i = 0; i < g.size(); ++i)
          enc_norm += static_cast<double>(g[i]) * g[i];
    CHECK(enc_norm > 0.0);
    // Masker parameters receive gradient through the mask surrogate.
    double masker_norm = 0;
    for (const auto& [name, g] : grads.items())
      if (name.rfind("masker.", 0) == 0)
        for (std::size_t i = 0; i < g.size(); ++i)
          masker_norm += static_cast<double>(g[i]) * g[i];
    CHECK(masker_norm > 0.0);
  }
}
