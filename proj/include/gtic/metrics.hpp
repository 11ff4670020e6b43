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

#ifndef GTIC_METRICS_HPP_
#define GTIC_METRICS_HPP_

#include "gtic/tensor.hpp"

namespace gtic {

// 10*log10(1/MSE) for unit-range images, capped at 100 dB (the MSE = 0
// convention).
double psnr(const Tensor& x, const Tensor& xhat);

// Multi-scale SSIM: 11x11 Gaussian window (sigma 1.5), C1=0.01^2,
// C2=0.03^2, up to 5 levels with the standard exponent weights
// (0.0448, 0.2856, 0.3001, 0.2363, 0.1333). Levels drop adaptively until
// the coarsest scale still fits the window, with weights renormalized.
// Inputs are [H,W,C] with min(H,W) >= 11.
double ms_ssim(const Tensor& x, const Tensor& xhat);

}  // namespace gtic

#endif  // GTIC_METRICS_HPP_
