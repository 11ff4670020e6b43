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

#include "gtic/image_io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <vector>

namespace gtic {

namespace {

// Skips whitespace and '#' comments between header tokens.
int read_header_int(std::istream& in, const std::string& path,
                    const char* what) {
  for (;;) {
    const int c = in.peek();
    GTIC_REQUIRE(c != EOF, "'", path, "': truncated header before ", what);
    if (c == '#') {
      std::string line;
      std::getline(in, line);
      continue;
    }
    if (std::isspace(c)) {
      in.get();
      continue;
    }
    break;
  }
  int value = 0;
  in >> value;
  GTIC_REQUIRE(in.good() && value > 0, "'", path, "': bad ", what,
               " in header");
  return value;
}

}  // namespace

Tensor load_ppm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  GTIC_REQUIRE(in.good(), "cannot open image '", path, "'");
  char m0 = 0, m1 = 0;
  in.get(m0);
  in.get(m1);
  GTIC_REQUIRE(in.good(), "'", path, "': truncated before magic");
  if (m0 == 'P' && m1 == '3')
    fail("'", path, "': ASCII P3 pixmaps are unsupported, use binary P6");
  GTIC_REQUIRE(m0 == 'P' && m1 == '6', "'", path,
               "': bad magic, expected P6");
  const int w = read_header_int(in, path, "width");
  const int h = read_header_int(in, path, "height");
  const int maxval = read_header_int(in, path, "maxval");
  GTIC_REQUIRE(maxval == 255, "'", path, "': maxval must be 255, got ",
               maxval);
  in.get();  // single whitespace after maxval

  std::vector<unsigned char> raw(static_cast<std::size_t>(w) * h * 3);
  in.read(reinterpret_cast<char*>(raw.data()),
          static_cast<std::streamsize>(raw.size()));
  GTIC_REQUIRE(in.gcount() == static_cast<std::streamsize>(raw.size()), "'",
               path, "': truncated pixel data, expected ", raw.size(),
               " bytes, got ", in.gcount());

  Tensor img({h, w, 3});
  for (std::size_t i = 0; i < raw.size(); ++i)
    img[i] = static_cast<float>(raw[i]) / 255.0f;
  return img;
}

void save_ppm(const Tensor& img, const std::string& path) {
  GTIC_REQUIRE(img.rank() == 3 && img.dim(2) == 3,
               "save expects an [H,W,3] image, got ", dims_str(img));
  std::ofstream out(path, std::ios::binary);
  GTIC_REQUIRE(out.good(), "cannot write image '", path, "'");
  out << "P6\n" << img.dim(1) << " " << img.dim(0) << "\n255\n";
  std::vector<unsigned char> raw(img.size());
  for (std::size_t i = 0; i < img.size(); ++i) {
    const float v = std::min(1.0f, std::max(0.0f, img[i]));
    raw[i] = static_cast<unsigned char>(std::lround(v * 255.0f));
  }
  out.write(reinterpret_cast<const char*>(raw.data()),
            static_cast<std::streamsize>(raw.size()));
  GTIC_REQUIRE(out.good(), "short write to '", path, "'");
}

Tensor pad_to_multiple_of_8(const Tensor& img) {
  GTIC_REQUIRE(img.rank() == 3, "expected [H,W,C], got ", dims_str(img));
  const int h = img.dim(0), w = img.dim(1), c = img.dim(2);
  const int ph = (h + 7) / 8 * 8, pw = (w + 7) / 8 * 8;
  if (ph == h && pw == w) return img;
  Tensor out({ph, pw, c});
  for (int y = 0; y < ph; ++y) {
    const int sy = std::min(y, h - 1);
    for (int x = 0; x < pw; ++x) {
      const int sx = std::min(x, w - 1);
      for (int ch = 0; ch < c; ++ch) out.at3(y, x, ch) = img.at3(sy, sx, ch);
    }
  }
  return out;
}

Tensor crop_to(const Tensor& img, int h, int w) {
  GTIC_REQUIRE(img.rank() == 3, "expected [H,W,C], got ", dims_str(img));
  GTIC_REQUIRE(h >= 1 && w >= 1 && h <= img.dim(0) && w <= img.dim(1),
               "crop ", h, "x", w, " exceeds image ", dims_str(img));
  if (h == img.dim(0) && w == img.dim(1)) return img;
  const int c = img.dim(2);
  Tensor out({h, w, c});
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int ch = 0; ch < c; ++ch) out.at3(y, x, ch) = img.at3(y, x, ch);
  return out;
}

}  // namespace gtic
