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

#ifndef GTIC_PARAM_STORE_HPP_
#define GTIC_PARAM_STORE_HPP_

#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "gtic/error.hpp"
#include "gtic/tensor.hpp"

namespace gtic {

enum class Mode { kTrain, kInference };

// Ordered name -> tensor map. Insertion order is the serialization order and
// never depends on hashing. Batchnorm running stats live here under
// "<layer>.running_mean" / ".running_var"; they are state, not parameters,
// and the optimizer skips them (it only touches names present in the grads).
template <typename T>
class ParamStoreT {
 public:
  TensorT<T>& create(const std::string& name, std::vector<int> dims) {
    GTIC_REQUIRE(!index_.count(name), "duplicate parameter name '", name, "'");
    index_.emplace(name, items_.size());
    items_.emplace_back(name, TensorT<T>(std::move(dims)));
    return items_.back().second;
  }

  bool has(const std::string& name) const { return index_.count(name) != 0; }

  TensorT<T>& at(const std::string& name) {
    auto it = index_.find(name);
    GTIC_REQUIRE(it != index_.end(), "unknown parameter '", name, "'");
    return items_[it->second].second;
  }
  const TensorT<T>& at(const std::string& name) const {
    auto it = index_.find(name);
    GTIC_REQUIRE(it != index_.end(), "unknown parameter '", name, "'");
    return items_[it->second].second;
  }

  std::size_t count() const { return items_.size(); }
  const std::vector<std::pair<std::string, TensorT<T>>>& items() const {
    return items_;
  }
  std::vector<std::pair<std::string, TensorT<T>>>& items() { return items_; }

  Mode mode() const { return mode_; }
  void set_mode(Mode m) { mode_ = m; }

  template <typename U>
  ParamStoreT<U> cast() const {
    ParamStoreT<U> out;
    out.set_mode(mode_);
    for (const auto& [name, t] : items_) out.create(name, t.dims()) = t.template cast<U>();
    return out;
  }

 private:
  std::vector<std::pair<std::string, TensorT<T>>> items_;
  std::unordered_map<std::string, std::size_t> index_;
  Mode mode_ = Mode::kTrain;
};

using ParamStore = ParamStoreT<float>;
using DParamStore = ParamStoreT<double>;

// Gradient accumulator with the same ordering discipline as ParamStoreT.
template <typename T>
class GradStoreT {
 public:
  void add(const std::string& name, const TensorT<T>& g) {
    auto it = index_.find(name);
    if (it == index_.end()) {
      index_.emplace(name, items_.size());
      items_.emplace_back(name, g);
      return;
    }
    TensorT<T>& acc = items_[it->second].second;
    GTIC_REQUIRE(acc.same_dims(g), "gradient shape mismatch for '", name, "': ",
                 dims_str(acc), " vs ", dims_str(g));
    for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += g[i];
  }

  bool has(const std::string& name) const { return index_.count(name) != 0; }
  const TensorT<T>& at(const std::string& name) const {
    auto it = index_.find(name);
    GTIC_REQUIRE(it != index_.end(), "no gradient for '", name, "'");
    return items_[it->second].second;
  }

  void scale(T s) {
    for (auto& [name, g] : items_)
      for (std::size_t i = 0; i < g.size(); ++i) g[i] *= s;
  }

  // Merges `other` into this store (element-wise sum), deterministically.
  void merge(const GradStoreT& other) {
    for (const auto& [name, g] : other.items_) add(name, g);
  }

  std::size_t count() const { return items_.size(); }
  const std::vector<std::pair<std::string, TensorT<T>>>& items() const {
    return items_;
  }
  void clear() {
    items_.clear();
    index_.clear();
  }

 private:
  std::vector<std::pair<std::string, TensorT<T>>> items_;
  std::unordered_map<std::string, std::size_t> index_;
};

using GradStore = GradStoreT<float>;
using DGradStore = GradStoreT<double>;

}  // namespace gtic

#endif  // GTIC_PARAM_STORE_HPP_
