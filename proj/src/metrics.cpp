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

#include "gtic/metrics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <vector>

namespace gtic {

namespace {

constexpr int kWindow = 11;
constexpr double kSigma = 1.5;
constexpr double kC1 = 0.01 * 0.01;
constexpr double kC2 = 0.03 * 0.03;
constexpr std::array<double, 5> kWeights = {0.0448, 0.2856, 0.3001, 0.2363,
                                            0.1333};

void check_pair(const Tensor& x, const Tensor& xhat) {
  GTIC_REQUIRE(x.rank() == 3 && xhat.rank() == 3,
               "metrics expect [H,W,C] images");
  GTIC_REQUIRE(x.dims() == xhat.dims(), "image shapes differ: ", dims_str(x),
               " vs ", dims_str(xhat));
  for (std::size_t i = 0; i < x.size(); ++i) {
    GTIC_REQUIRE(x[i] >= -1e-6f && x[i] <= 1.0f + 1e-6f &&
                     xhat[i] >= -1e-6f && xhat[i] <= 1.0f + 1e-6f,
                 "metrics expect unit-range intensities");
  }
}

std::vector<double> gaussian_kernel() {
  std::vector<double> k(kWindow);
  const int half = kWindow / 2;
  double sum = 0;
  for (int i = 0; i < kWindow; ++i) {
    const double d = i - half;
    k[i] = std::exp(-d * d / (2.0 * kSigma * kSigma));
    sum += k[i];
  }
  for (auto& v : k) v /= sum;
  return k;
}

// Separable valid-mode Gaussian filter of one channel plane.
std::vector<double> blur_valid(const std::vector<double>& img, int h, int w,
                               const std::vector<double>& k, int* oh,
                               int* ow) {
  const int n = static_cast<int>(k.size());
  const int hw = w - n + 1;
  std::vector<double> tmp(static_cast<std::size_t>(h) * hw, 0.0);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < hw; ++x) {
      double acc = 0;
      for (int i = 0; i < n; ++i) acc += img[y * w + x + i] * k[i];
      tmp[y * hw + x] = acc;
    }
  const int hh = h - n + 1;
  std::vector<double> out(static_cast<std::size_t>(hh) * hw, 0.0);
  for (int y = 0; y < hh; ++y)
    for (int x = 0; x < hw; ++x) {
      double acc = 0;
      for (int i = 0; i < n; ++i) acc += tmp[(y + i) * hw + x] * k[i];
      out[y * hw + x] = acc;
    }
  *oh = hh;
  *ow = hw;
  return out;
}

// Mean luminance*cs and mean cs of one channel pair at one scale.
void ssim_channel(const std::vector<double>& a, const std::vector<double>& b,
                  int h, int w, const std::vector<double>& kern,
                  double* sum_ssim, double* sum_cs, std::size_t* count) {
  int oh = 0, ow = 0;
  std::vector<double> a2(a.size()), b2(b.size()), ab(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    a2[i] = a[i] * a[i];
    b2[i] = b[i] * b[i];
    ab[i] = a[i] * b[i];
  }
  const auto mu_a = blur_valid(a, h, w, kern, &oh, &ow);
  const auto mu_b = blur_valid(b, h, w, kern, &oh, &ow);
  const auto m_a2 = blur_valid(a2, h, w, kern, &oh, &ow);
  const auto m_b2 = blur_valid(b2, h, w, kern, &oh, &ow);
  const auto m_ab = blur_valid(ab, h, w, kern, &oh, &ow);
  for (std::size_t i = 0; i < mu_a.size(); ++i) {
    const double va = m_a2[i] - mu_a[i] * mu_a[i];
    const double vb = m_b2[i] - mu_b[i] * mu_b[i];
    const double cov = m_ab[i] - mu_a[i] * mu_b[i];
    const double l = (2.0 * mu_a[i] * mu_b[i] + kC1) /
                     (mu_a[i] * mu_a[i] + mu_b[i] * mu_b[i] + kC1);
    const double cs = (2.0 * cov + kC2) / (va + vb + kC2);
    *sum_ssim += l * cs;
    *sum_cs += cs;
    ++*count;
  }
}

std::vector<double> downsample2(const std::vector<double>& img, int h, int w,
                                int* oh, int* ow) {
  *oh = h / 2;
  *ow = w / 2;
  std::vector<double> out(static_cast<std::size_t>(*oh) * *ow);
  for (int y = 0; y < *oh; ++y)
    for (int x = 0; x < *ow; ++x)
      out[y * *ow + x] = 0.25 * (img[(2 * y) * w + 2 * x] +
                                 img[(2 * y) * w + 2 * x + 1] +
                                 img[(2 * y + 1) * w + 2 * x] +
                                 img[(2 * y + 1) * w + 2 * x + 1]);
  return out;
}

}  // namespace

double psnr(const Tensor& x, const Tensor& xhat) {
  check_pair(x, xhat);
  double mse = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double d = static_cast<double>(x[i]) - static_cast<double>(xhat[i]);
    mse += d * d;
  }
  mse /= static_cast<double>(x.size());
  if (mse <= 0.0) return 100.0;
  return std::min(100.0, 10.0 * std::log10(1.0 / mse));
}

double ms_ssim(const Tensor& x, const Tensor& xhat) {
  check_pair(x, xhat);
  const int C = x.dim(2);
  int h = x.dim(0), w = x.dim(1);
  GTIC_REQUIRE(std::min(h, w) >= kWindow, "image ", h, "x", w,
               " smaller than the ", kWindow, "x", kWindow, " window");

  int levels = 1;
  while (levels < 5 && std::min(h, w) >= kWindow * (1 << levels)) ++levels;
  double wsum = 0;
  for (int i = 0; i < levels; ++i) wsum += kWeights[i];

  // Per-channel planes in double.
  std::vector<std::vector<double>> pa(C), pb(C);
  for (int c = 0; c < C; ++c) {
    pa[c].resize(static_cast<std::size_t>(h) * w);
    pb[c].resize(static_cast<std::size_t>(h) * w);
    for (int y = 0; y < h; ++y)
      for (int xx = 0; xx < w; ++xx) {
        pa[c][y * w + xx] = x.at3(y, xx, c);
        pb[c][y * w + xx] = xhat.at3(y, xx, c);
      }
  }

  const auto kern = gaussian_kernel();
  double result = 1.0;
  for (int level = 0; level < levels; ++level) {
    double sum_ssim = 0, sum_cs = 0;
    std::size_t count = 0;
    for (int c = 0; c < C; ++c)
      ssim_channel(pa[c], pb[c], h, w, kern, &sum_ssim, &sum_cs, &count);
    const double mean_ssim = std::max(0.0, sum_ssim / count);
    const double mean_cs = std::max(0.0, sum_cs / count);
    const double weight = kWeights[level] / wsum;
    result *= std::pow(level == levels - 1 ? mean_ssim : mean_cs, weight);
    if (level + 1 < levels) {
      int nh = 0, nw = 0;
      for (int c = 0; c < C; ++c) {
        pa[c] = downsample2(pa[c], h, w, &nh, &nw);
        pb[c] = downsample2(pb[c], h, w, &nh, &nw);
      }
      h = nh;
      w = nw;
    }
  }
  return result;
}

}  // namespace gtic
