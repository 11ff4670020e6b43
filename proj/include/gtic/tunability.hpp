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

#ifndef GTIC_TUNABILITY_HPP_
#define GTIC_TUNABILITY_HPP_

#include <functional>
#include <string>
#include <vector>

#include "gtic/tensor.hpp"

namespace gtic {

struct RatePoint {
  double n = 0.0;
  double bpp = 0.0;
  double psnr_db = 0.0;
  double msssim = 0.0;
};

struct CurveFit {
  int degree = 3;
  std::vector<double> coeffs;  // c0 + c1*n + c2*n^2 + ...
  double rmse = 0.0;
  double r2 = 0.0;
  double n_min = -2.0, n_max = 2.0;

  double eval(double n) const;
};

// One codec evaluation of a single image at shift n.
using RateEvalFn = std::function<RatePoint(double n, std::size_t image_index)>;

// Runs eval for every (n, image) pair in deterministic order and averages
// per n. Rejects empty grids or image sets.
std::vector<RatePoint> sweep_n(std::size_t image_count,
                               const std::vector<double>& n_grid,
                               const RateEvalFn& eval, int threads = 1);

// Least-squares polynomial bpp(n) via the normal equations. Needs at least
// degree+1 distinct n values; a rank-deficient design is rejected.
CurveFit fit_curve(const std::vector<RatePoint>& points, int degree = 3);

// Bisection solve of curve(n) = target_bpp on [n_min, n_max]. The fitted
// curve must be strictly monotone over the range and the target must be
// achievable; violations are rejected with the achievable [min,max].
double invert_curve(const CurveFit& fit, double target_bpp);

void save_fit_json(const CurveFit& fit, const std::string& path);
CurveFit load_fit_json(const std::string& path);

}  // namespace gtic

#endif  // GTIC_TUNABILITY_HPP_
