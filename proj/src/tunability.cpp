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

#include "gtic/tunability.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <mutex>
#include <set>
#include <thread>

#include "json.hpp"

namespace gtic {

double CurveFit::eval(double n) const {
  double acc = 0.0, pw = 1.0;
  for (double c : coeffs) {
    acc += c * pw;
    pw *= n;
  }
  return acc;
}

std::vector<RatePoint> sweep_n(std::size_t image_count,
                               const std::vector<double>& n_grid,
                               const RateEvalFn& eval, int threads) {
  GTIC_REQUIRE(image_count > 0, "sweep needs a non-empty image set");
  GTIC_REQUIRE(!n_grid.empty(), "sweep needs a non-empty n grid");
  GTIC_REQUIRE(threads >= 1, "thread count must be >= 1");

  std::vector<RatePoint> out;
  out.reserve(n_grid.size());
  for (double n : n_grid) {
    std::vector<RatePoint> per_image(image_count);
    if (threads == 1 || image_count == 1) {
      for (std::size_t i = 0; i < image_count; ++i) per_image[i] = eval(n, i);
    } else {
      // Images fan out across threads; aggregation order stays fixed, so
      // the averages are bit-identical to the sequential run.
      std::vector<std::thread> pool;
      std::atomic<std::size_t> next{0};
      std::exception_ptr first_error;
      std::mutex err_mu;
      const int nthreads =
          static_cast<int>(std::min<std::size_t>(threads, image_count));
      for (int t = 0; t < nthreads; ++t)
        pool.emplace_back([&]() {
          for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= image_count) return;
            try {
              per_image[i] = eval(n, i);
            } catch (...) {
              std::lock_guard<std::mutex> lock(err_mu);
              if (!first_error) first_error = std::current_exception();
              return;
            }
          }
        });
      for (auto& th : pool) th.join();
      if (first_error) std::rethrow_exception(first_error);
    }
    RatePoint avg;
    avg.n = n;
    for (const auto& p : per_image) {
      avg.bpp += p.bpp;
      avg.psnr_db += p.psnr_db;
      avg.msssim += p.msssim;
    }
    avg.bpp /= static_cast<double>(image_count);
    avg.psnr_db /= static_cast<double>(image_count);
    avg.msssim /= static_cast<double>(image_count);
    out.push_back(avg);
  }
  return out;
}

CurveFit fit_curve(const std::vector<RatePoint>& points, int degree) {
  GTIC_REQUIRE(degree >= 0, "degree must be >= 0, got ", degree);
  std::set<double> distinct;
  for (const auto& p : points) distinct.insert(p.n);
  GTIC_REQUIRE(static_cast<int>(distinct.size()) >= degree + 1,
               "degree-", degree, " fit needs at least ", degree + 1,
               " distinct n values, got ", distinct.size());

  const int m = static_cast<int>(points.size());
  Eigen::MatrixXd design(m, degree + 1);
  Eigen::VectorXd y(m);
  for (int i = 0; i < m; ++i) {
    double pw = 1.0;
    for (int j = 0; j <= degree; ++j) {
      design(i, j) = pw;
      pw *= points[i].n;
    }
    y(i) = points[i].bpp;
  }
  const Eigen::MatrixXd normal = design.transpose() * design;
  const Eigen::VectorXd rhs = design.transpose() * y;
  Eigen::FullPivLU<Eigen::MatrixXd> lu(normal);
  GTIC_REQUIRE(lu.isInvertible(),
               "rank-deficient design: degree ", degree, " with ", m,
               " points over ", distinct.size(), " distinct n values");
  const Eigen::VectorXd coeffs = lu.solve(rhs);

  CurveFit fit;
  fit.degree = degree;
  fit.coeffs.assign(coeffs.data(), coeffs.data() + degree + 1);
  fit.n_min = *distinct.begin();
  fit.n_max = *distinct.rbegin();

  double ss_res = 0, ss_tot = 0, mean = y.mean();
  for (int i = 0; i < m; ++i) {
    const double r = y(i) - fit.eval(points[i].n);
    ss_res += r * r;
    ss_tot += (y(i) - mean) * (y(i) - mean);
  }
  fit.rmse = std::sqrt(ss_res / m);
  fit.r2 = ss_tot > 0 ? 1.0 - ss_res / ss_tot : 1.0;
  for (double c : fit.coeffs)
    GTIC_REQUIRE(std::isfinite(c), "non-finite fit coefficient");
  return fit;
}

double invert_curve(const CurveFit& fit, double target_bpp) {
  GTIC_REQUIRE(fit.n_max > fit.n_min, "degenerate n range [", fit.n_min, ", ",
               fit.n_max, "]");
  // Strict monotonicity over the valid range, probed on a dense grid.
  const int kProbes = 4096;
  double prev = fit.eval(fit.n_min);
  int direction = 0;
  for (int i = 1; i <= kProbes; ++i) {
    const double n = fit.n_min + (fit.n_max - fit.n_min) * i / kProbes;
    const double v = fit.eval(n);
    const int step = v > prev ? 1 : (v < prev ? -1 : 0);
    GTIC_REQUIRE(step != 0, "fitted curve is flat near n=", n,
                 "; inversion rejected");
    if (direction == 0) direction = step;
    GTIC_REQUIRE(step == direction, "fitted curve is not monotone near n=", n,
                 "; inversion rejected");
    prev = v;
  }

  const double lo_v = fit.eval(fit.n_min), hi_v = fit.eval(fit.n_max);
  const double vmin = std::min(lo_v, hi_v), vmax = std::max(lo_v, hi_v);
  GTIC_REQUIRE(target_bpp >= vmin && target_bpp <= vmax, "target bpp ",
               target_bpp, " outside the achievable range [", vmin, ", ",
               vmax, "]");

  double lo = fit.n_min, hi = fit.n_max;
  for (int iter = 0; iter < 200 && hi - lo > 1e-13; ++iter) {
    const double mid = 0.5 * (lo + hi);
    const double v = fit.eval(mid);
    if ((v < target_bpp) == (lo_v < hi_v))
      lo = mid;
    else
      hi = mid;
  }
  const double n = 0.5 * (lo + hi);
  GTIC_REQUIRE(std::fabs(fit.eval(n) - target_bpp) < 1e-6,
               "bisection failed to reach the target within 1e-6");
  return n;
}

void save_fit_json(const CurveFit& fit, const std::string& path) {
  nlohmann::json j;
  j["degree"] = fit.degree;
  j["coefficients"] = fit.coeffs;
  j["rmse"] = fit.rmse;
  j["r2"] = fit.r2;
  j["n_min"] = fit.n_min;
  j["n_max"] = fit.n_max;
  std::ofstream out(path);
  GTIC_REQUIRE(out.good(), "cannot write fit file '", path, "'");
  out << j.dump(2) << "\n";
}

CurveFit load_fit_json(const std::string& path) {
  std::ifstream in(path);
  GTIC_REQUIRE(in.good(), "cannot read fit file '", path, "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    fail("malformed fit file '", path, "': ", e.what());
  }
  CurveFit fit;
  try {
    fit.degree = j.at("degree").get<int>();
    fit.coeffs = j.at("coefficients").get<std::vector<double>>();
    fit.rmse = j.at("rmse").get<double>();
    fit.r2 = j.at("r2").get<double>();
    fit.n_min = j.at("n_min").get<double>();
    fit.n_max = j.at("n_max").get<double>();
  } catch (const nlohmann::json::exception& e) {
    fail("fit file '", path, "' missing fields: ", e.what());
  }
  GTIC_REQUIRE(static_cast<int>(fit.coeffs.size()) == fit.degree + 1,
               "fit file coefficient count mismatches degree");
  return fit;
}

}  // namespace gtic
