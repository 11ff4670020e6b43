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

#ifndef GTIC_TENSOR_HPP_
#define GTIC_TENSOR_HPP_

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "gtic/error.hpp"

namespace gtic {

// Dense row-major tensor, rank 1..4, every dim >= 1. Image-like data is laid
// out NHWC; a rank-3 tensor is a single H x W x C image, rank-2 a map.
// Float is the compute type; double instantiations exist for gradient checks.
template <typename T>
class TensorT {
 public:
  TensorT() = default;
  explicit TensorT(std::vector<int> dims) : dims_(std::move(dims)) {
    GTIC_REQUIRE(!dims_.empty() && dims_.size() <= 4,
                 "tensor rank must be 1..4, got ", dims_.size());
    std::size_t n = 1;
    for (int d : dims_) {
      GTIC_REQUIRE(d >= 1, "tensor dims must be >= 1, got ", d);
      n *= static_cast<std::size_t>(d);
    }
    data_.assign(n, T(0));
  }

  static TensorT full(std::vector<int> dims, T value) {
    TensorT t(std::move(dims));
    for (auto& v : t.data_) v = value;
    return t;
  }

  int rank() const { return static_cast<int>(dims_.size()); }
  const std::vector<int>& dims() const { return dims_; }
  int dim(int i) const { return dims_[static_cast<std::size_t>(i)]; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  T* data() { return data_.data(); }
  const T* data() const { return data_.data(); }

  T& operator[](std::size_t i) { return data_[i]; }
  const T& operator[](std::size_t i) const { return data_[i]; }

  // NHWC addressing for rank-4, HWC for rank-3, HW for rank-2.
  T& at4(int b, int h, int w, int c) {
    return data_[((static_cast<std::size_t>(b) * dims_[1] + h) * dims_[2] + w) *
                     dims_[3] +
                 c];
  }
  const T& at4(int b, int h, int w, int c) const {
    return data_[((static_cast<std::size_t>(b) * dims_[1] + h) * dims_[2] + w) *
                     dims_[3] +
                 c];
  }
  T& at3(int h, int w, int c) {
    return data_[(static_cast<std::size_t>(h) * dims_[1] + w) * dims_[2] + c];
  }
  const T& at3(int h, int w, int c) const {
    return data_[(static_cast<std::size_t>(h) * dims_[1] + w) * dims_[2] + c];
  }
  T& at2(int h, int w) {
    return data_[static_cast<std::size_t>(h) * dims_[1] + w];
  }
  const T& at2(int h, int w) const {
    return data_[static_cast<std::size_t>(h) * dims_[1] + w];
  }

  bool same_dims(const TensorT& o) const { return dims_ == o.dims_; }

  bool all_finite() const {
    for (const T& v : data_)
      if (!std::isfinite(static_cast<double>(v))) return false;
    return true;
  }

  TensorT reshaped(std::vector<int> dims) const {
    TensorT t(std::move(dims));
    GTIC_REQUIRE(t.size() == size(), "reshape ", size(), " -> ", t.size(),
                 " changes element count");
    t.data_ = data_;
    return t;
  }

  void fill(T value) {
    for (auto& v : data_) v = value;
  }

  template <typename U>
  TensorT<U> cast() const {
    TensorT<U> t(dims_);
    for (std::size_t i = 0; i < data_.size(); ++i)
      t[i] = static_cast<U>(data_[i]);
    return t;
  }

 private:
  std::vector<int> dims_;
  std::vector<T> data_;
};

using Tensor = TensorT<float>;
using DTensor = TensorT<double>;

template <typename T>
std::string dims_str(const TensorT<T>& t) {
  std::string s = "[";
  for (int i = 0; i < t.rank(); ++i) {
    if (i) s += "x";
    s += std::to_string(t.dim(i));
  }
  return s + "]";
}

inline std::string dims_str(const std::vector<int>& d) {
  std::string s = "[";
  for (std::size_t i = 0; i < d.size(); ++i) {
    if (i) s += "x";
    s += std::to_string(d[i]);
  }
  return s + "]";
}

// Deterministic uniform in [lo, hi) built directly on mt19937_64 output so
// results do not depend on the standard library's distribution internals.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed ? seed : 0x9e3779b97f4a7c15ULL) {}

  std::uint64_t next_u64() {
    // xorshift64* — tiny, seedable, stable across platforms.
    state_ ^= state_ >> 12;
    state_ ^= state_ << 25;
    state_ ^= state_ >> 27;
    return state_ * 0x2545F4914F6CDD1DULL;
  }

  double uniform(double lo, double hi) {
    const double u = static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    return lo + (hi - lo) * u;
  }

  std::uint64_t next_below(std::uint64_t n) { return next_u64() % n; }

 private:
  std::uint64_t state_;
};

}  // namespace gtic

#endif  // GTIC_TENSOR_HPP_
