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

#ifndef GTIC_IMAGE_IO_HPP_
#define GTIC_IMAGE_IO_HPP_

#include <string>

#include "gtic/tensor.hpp"

namespace gtic {

// Binary portable pixmap (P6, maxval 255). Intensities map v/255 into
// [0,1]; save rounds to nearest. ASCII P3 and other maxvals are rejected
// with distinct diagnostics.
Tensor load_ppm(const std::string& path);
void save_ppm(const Tensor& img, const std::string& path);

// Edge-replication padding up to the next multiples of 8.
Tensor pad_to_multiple_of_8(const Tensor& img);
Tensor crop_to(const Tensor& img, int h, int w);

}  // namespace gtic

#endif  // GTIC_IMAGE_IO_HPP_
