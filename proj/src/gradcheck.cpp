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

#include "gtic/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace gtic {

namespace {

double sum_all(const DTensor& t) {
  double s = 0.0;
  for (std::size_t i = 0; i < t.size(); ++i) s += t[i];
  return s;
}

std::vector<std::size_t> sample_indices(std::size_t count, int max_components,
                                        Rng& rng) {
  std::vector<std::size_t> idx;
  if (max_components <= 0 || count <= static_cast<std::size_t>(max_components)) {
    idx.resize(count);
    for (std::size_t i = 0; i < count; ++i) idx[i] = i;
    return idx;
  }
  for (int i = 0; i < max_components; ++i)
    idx.push_back(rng.next_below(count));
  std::sort(idx.begin(), idx.end());
  idx.erase(std::unique(idx.begin(), idx.end()), idx.end());
  return idx;
}

double rel_err(double fd, double an) {
  const double denom = std::max({std::fabs(fd), std::fabs(an), 1e-4});
  return std::fabs(fd - an) / denom;
}

}  // namespace

std::string GradCheckReport::summary() const {
  std::ostringstream os;
  os << (pass ? "PASS" : "FAIL") << " max_rel_err=" << max_rel_err
     << " tol=" << tol;
  for (const auto& e : entries)
    if (!e.pass) os << " [" << e.name << ": " << e.max_rel_err << "]";
  return os.str();
}

GradCheckReport finite_diff_check(const LayerSpec& spec, DParamStore& params,
                                  const std::string& prefix,
                                  const DTensor& input, double step,
                                  double tol, int max_components,
                                  std::uint64_t sample_seed) {
  GTIC_REQUIRE(step >= 1e-6 && step <= 1e-4,
               "finite-difference step must lie in [1e-6, 1e-4], got ", step);
  GradCheckReport report;
  report.tol = tol;
  Rng rng(sample_seed);

  // Analytic gradients of L = sum(layer(input)).
  DLayerCache cache;
  DTensor out = layer_forward(spec, params, prefix, input, &cache);
  DGradStore grads;
  DTensor ones = DTensor::full(out.dims(), 1.0);
  DTensor gin = layer_backward(spec, params, prefix, cache, ones, grads);

  auto check_tensor = [&](const std::string& name, DTensor& values,
                          const DTensor& analytic) {
    GradCheckEntry entry;
    entry.name = name;
    const auto idx = sample_indices(values.size(), max_components, rng);
    for (std::size_t i : idx) {
      const double saved = values[i];
      values[i] = saved + step;
      const double up = sum_all(layer_forward(spec, params, prefix, input));
      values[i] = saved - step;
      const double dn = sum_all(layer_forward(spec, params, prefix, input));
      values[i] = saved;
      const double fd = (up - dn) / (2.0 * step);
      entry.max_rel_err = std::max(entry.max_rel_err, rel_err(fd, analytic[i]));
      ++entry.checked;
    }
    entry.pass = entry.max_rel_err < tol;
    report.entries.push_back(entry);
  };

  // Parameters first (running stats carry no gradient and are skipped),
  // then the input itself.
  for (auto& [name, tensor] : params.items()) {
    if (!grads.has(name)) continue;
    check_tensor(name, tensor, grads.at(name));
  }
  {
    GradCheckEntry entry;
    entry.name = "<input>";
    DTensor probe = input;
    const auto idx = sample_indices(probe.size(), max_components, rng);
    for (std::size_t i : idx) {
      const double saved = probe[i];
      probe[i] = saved + step;
      const double up = sum_all(layer_forward(spec, params, prefix, probe));
      probe[i] = saved - step;
      const double dn = sum_all(layer_forward(spec, params, prefix, probe));
      probe[i] = saved;
      const double fd = (up - dn) / (2.0 * step);
      entry.max_rel_err = std::max(entry.max_rel_err, rel_err(fd, gin[i]));
      ++entry.checked;
    }
    entry.pass = entry.max_rel_err < tol;
    report.entries.push_back(entry);
  }

  for (const auto& e : report.entries) {
    report.max_rel_err = std::max(report.max_rel_err, e.max_rel_err);
    report.pass = report.pass && e.pass;
  }
  return report;
}

}  // namespace gtic
