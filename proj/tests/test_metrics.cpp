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
#include <vector>

#include "doctest.h"
#include "gtic/metrics.hpp"

using namespace gtic;

namespace {

Tensor random_image(int h, int w, int c, Rng& rng, double lo = 0.0,
                    double hi = 1.0) {
  Tensor img({h, w, c});
  for (std::size_t i = 0; i < img.size(); ++i)
    img[i] = static_cast<float>(rng.uniform(lo, hi));
  return img;
}

// ---------------------------------------------------------------------------
// Reference multi-scale SSIM, written as plain nested loops with direct 2D
// convolution. Shares no code with the library implementation.
// ---------------------------------------------------------------------------

struct Plane {
  int h = 0, w = 0;
  std::vector<double> v;
  double at(int y, int x) const { return v[y * w + x]; }
};

Plane plane_of(const Tensor& t, int c) {
  Plane p;
  p.h = t.dim(0);
  p.w = t.dim(1);
  p.v.resize(static_cast<std::size_t>(p.h) * p.w);
  for (int y = 0; y < p.h; ++y)
    for (int x = 0; x < p.w; ++x) p.v[y * p.w + x] = t.at3(y, x, c);
  return p;
}

Plane half(const Plane& p) {
  Plane o;
  o.h = p.h / 2;
  o.w = p.w / 2;
  o.v.resize(static_cast<std::size_t>(o.h) * o.w);
  for (int y = 0; y < o.h; ++y)
    for (int x = 0; x < o.w; ++x)
      o.v[y * o.w + x] = (p.at(2 * y, 2 * x) + p.at(2 * y, 2 * x + 1) +
                          p.at(2 * y + 1, 2 * x) + p.at(2 * y + 1, 2 * x + 1)) /
                         4.0;
  return o;
}

void reference_ssim_sums(const Plane& a, const Plane& b, double* ssim_sum,
                         double* cs_sum, std::size_t* count) {
  const int n = 11;
  const double sigma = 1.5;
  double kern[11][11];
  double ksum = 0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const double dy = i - 5, dx = j - 5;
      kern[i][j] = std::exp(-(dy * dy + dx * dx) / (2 * sigma * sigma));
      ksum += kern[i][j];
    }
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) kern[i][j] /= ksum;

  const double c1 = 1e-4, c2 = 9e-4;
  for (int y = 0; y + n <= a.h; ++y)
    for (int x = 0; x + n <= a.w; ++x) {
      double ma = 0, mb = 0, maa = 0, mbb = 0, mab = 0;
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
          const double va = a.at(y + i, x + j), vb = b.at(y + i, x + j);
          ma += kern[i][j] * va;
          mb += kern[i][j] * vb;
          maa += kern[i][j] * va * va;
          mbb += kern[i][j] * vb * vb;
          mab += kern[i][j] * va * vb;
        }
      const double var_a = maa - ma * ma, var_b = mbb - mb * mb;
      const double cov = mab - ma * mb;
      const double l = (2 * ma * mb + c1) / (ma * ma + mb * mb + c1);
      const double cs = (2 * cov + c2) / (var_a + var_b + c2);
      *ssim_sum += l * cs;
      *cs_sum += cs;
      ++*count;
    }
}

double reference_msssim(const Tensor& x, const Tensor& y) {
  const double weights[5] = {0.0448, 0.2856, 0.3001, 0.2363, 0.1333};
  int h = x.dim(0), w = x.dim(1);
  const int C = x.dim(2);
  int levels = 1;
  while (levels < 5 && std::min(h, w) >= 11 * (1 << levels)) ++levels;
  double wsum = 0;
  for (int i = 0; i < levels; ++i) wsum += weights[i];

  std::vector<Plane> pa(C), pb(C);
  for (int c = 0; c < C; ++c) {
    pa[c] = plane_of(x, c);
    pb[c] = plane_of(y, c);
  }
  double result = 1.0;
  for (int level = 0; level < levels; ++level) {
    double ssim_sum = 0, cs_sum = 0;
    std::size_t count = 0;
    for (int c = 0; c < C; ++c)
      reference_ssim_sums(pa[c], pb[c], &ssim_sum, &cs_sum, &count);
    const double term = level == levels - 1 ? ssim_sum / count : cs_sum / count;
    result *= std::pow(std::max(0.0, term), weights[level] / wsum);
    for (int c = 0; c < C; ++c) {
      pa[c] = half(pa[c]);
      pb[c] = half(pb[c]);
    }
  }
  return result;
}

}  // namespace

TEST_CASE("psnr") {
  Rng rng(2);
  SUBCASE("identical images hit the 100 dB cap") {
    Tensor x = random_image(16, 16, 3, rng);
    CHECK(psnr(x, x) == doctest::Approx(100.0));
  }
  SUBCASE("uniform offset 0.1 gives 20 dB") {
    Tensor x({16, 16, 3});
    Tensor y = Tensor::full({16, 16, 3}, 0.1f);
    CHECK(psnr(x, y) == doctest::Approx(20.0).epsilon(1e-7));
  }
  SUBCASE("halving the noise adds about 6.02 dB") {
    Tensor x = random_image(16, 16, 3, rng, 0.3, 0.6);
    Tensor noisy = x, half_noisy = x;
    for (std::size_t i = 0; i < x.size(); ++i) {
      const float e = static_cast<float>(rng.uniform(-0.2, 0.2));
      noisy[i] = x[i] + e;
      half_noisy[i] = x[i] + e / 2.0f;
    }
    const double gain = psnr(x, half_noisy) - psnr(x, noisy);
    CHECK(gain == doctest::Approx(20.0 * std::log10(2.0)).epsilon(1e-3));
  }
  SUBCASE("psnr strictly decreases along a noise-amplitude ladder") {
    Tensor x = random_image(16, 16, 3, rng, 0.4, 0.6);
    Tensor noise({16, 16, 3});
    for (std::size_t i = 0; i < noise.size(); ++i)
      noise[i] = static_cast<float>(rng.uniform(-1.0, 1.0));
    double prev = 1e9;
    for (float amp : {0.01f, 0.02f, 0.05f, 0.1f, 0.2f}) {
      Tensor y = x;
      for (std::size_t i = 0; i < y.size(); ++i) y[i] += amp * noise[i] * 0.5f;
      const double v = psnr(x, y);
      CHECK(v < prev);
      prev = v;
    }
  }
  SUBCASE("shape mismatch rejected") {
    Tensor a({8, 8, 3}), b({8, 9, 3});
    CHECK_THROWS_AS(psnr(a, b), Error);
  }
}

TEST_CASE("ms-ssim") {
  Rng rng(13);
  SUBCASE("self similarity is 1") {
    Tensor x = random_image(32, 32, 3, rng);
    CHECK(ms_ssim(x, x) == doctest::Approx(1.0).epsilon(1e-6));
  }
  SUBCASE("symmetry and range") {
    Tensor x = random_image(24, 40, 3, rng);
    Tensor y = x;
    for (std::size_t i = 0; i < y.size(); ++i)
      y[i] = std::min(
          1.0f, std::max(0.0f,
                         y[i] + static_cast<float>(rng.uniform(-0.1, 0.1))));
    const double ab = ms_ssim(x, y), ba = ms_ssim(y, x);
    CHECK(ab == doctest::Approx(ba).epsilon(1e-12));
    CHECK(ab >= 0.0);
    CHECK(ab <= 1.0 + 1e-9);
  }
  SUBCASE("five perturbed pairs match the independent reference within 1e-3") {
    struct Perturb {
      double amp;
      int h, w;
    };
    const Perturb cases[5] = {
        {0.02, 32, 32}, {0.05, 48, 32}, {0.1, 64, 64}, {0.2, 32, 48},
        {0.4, 44, 44}};
    for (const auto& pc : cases) {
      Tensor x = random_image(pc.h, pc.w, 3, rng, 0.2, 0.8);
      Tensor y = x;
      for (std::size_t i = 0; i < y.size(); ++i)
        y[i] = std::min(
            1.0f,
            std::max(0.0f, y[i] + static_cast<float>(
                                      rng.uniform(-pc.amp, pc.amp))));
      const double got = ms_ssim(x, y);
      const double want = reference_msssim(x, y);
      CAPTURE(pc.amp);
      CHECK(got == doctest::Approx(want).epsilon(1e-3));
      CHECK(std::fabs(got - want) < 1e-3);
    }
  }
  SUBCASE("stronger perturbation scores lower") {
    Tensor x = random_image(48, 48, 3, rng, 0.3, 0.7);
    Tensor mild = x, strong = x;
    for (std::size_t i = 0; i < x.size(); ++i) {
      const float e = static_cast<float>(rng.uniform(-1, 1));
      mild[i] = std::min(1.0f, std::max(0.0f, x[i] + 0.02f * e));
      strong[i] = std::min(1.0f, std::max(0.0f, x[i] + 0.3f * e));
    }
    CHECK(ms_ssim(x, strong) < ms_ssim(x, mild));
  }
  SUBCASE("images smaller than the window are rejected") {
    Tensor a({10, 32, 3}), b({10, 32, 3});
    CHECK_THROWS_AS(ms_ssim(a, b), Error);
  }
}
