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
#include <cstring>

#include "doctest.h"
#include "gtic/gradcheck.hpp"
#include "gtic/layers.hpp"
#include "gtic/network.hpp"

using namespace gtic;

namespace {

DTensor random_tensor(std::vector<int> dims, Rng& rng, double lo = -1.0,
                      double hi = 1.0) {
  DTensor t(std::move(dims));
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = rng.uniform(lo, hi);
  return t;
}

// Inputs bounded away from the relu/leaky kink so finite differences of the
// piecewise-linear activations stay meaningful.
DTensor random_tensor_off_kink(std::vector<int> dims, Rng& rng) {
  DTensor t(std::move(dims));
  for (std::size_t i = 0; i < t.size(); ++i) {
    const double mag = rng.uniform(0.2, 1.2);
    t[i] = rng.uniform(0.0, 1.0) < 0.5 ? -mag : mag;
  }
  return t;
}

}  // namespace

TEST_CASE("conv with identity 1x1 kernel reproduces its input") {
  DParamStore params;
  const int C = 3;
  auto spec = LayerSpec::conv(C, 1, 1, 0);
  auto& w = params.create("id.w", {1, 1, C, C});
  for (int i = 0; i < C; ++i) w[i * C + i] = 1.0;
  params.create("id.b", {C});

  Rng rng(7);
  DTensor x = random_tensor({2, 4, 5, C}, rng);
  DLayerCache cache;
  DTensor y = layer_forward(spec, params, "id", x, &cache);
  REQUIRE(y.dims() == x.dims());
  for (std::size_t i = 0; i < x.size(); ++i) CHECK(y[i] == doctest::Approx(x[i]));

  // Identity Jacobian: grad_input == grad_output.
  DGradStore grads;
  DTensor gy = random_tensor(x.dims(), rng);
  DTensor gx = layer_backward(spec, params, "id", cache, gy, grads);
  for (std::size_t i = 0; i < gx.size(); ++i)
    CHECK(gx[i] == doctest::Approx(gy[i]));
}

TEST_CASE("leaky relu 0.2 maps -2 to -0.4 and keeps 3") {
  DParamStore params;
  DTensor x({1, 1, 2, 1});
  x[0] = -2.0;
  x[1] = 3.0;
  DTensor y = layer_forward(LayerSpec::leaky_relu(0.2f), params, "", x);
  CHECK(y[0] == doctest::Approx(-0.4));
  CHECK(y[1] == doctest::Approx(3.0));
}

TEST_CASE("2x2 conv on [[1,2],[3,4]] with diagonal kernel gives 5") {
  DParamStore params;
  auto spec = LayerSpec::conv(1, 2, 1, 0);
  auto& w = params.create("c.w", {2, 2, 1, 1});
  w[0] = 1.0;  // (0,0)
  w[3] = 1.0;  // (1,1)
  params.create("c.b", {1});
  DTensor x({1, 2, 2, 1});
  x[0] = 1;
  x[1] = 2;
  x[2] = 3;
  x[3] = 4;
  DTensor y = layer_forward(spec, params, "c", x);
  REQUIRE(y.size() == 1);
  CHECK(y[0] == doctest::Approx(5.0));  // 1*1 + 4*1
}

TEST_CASE("conv bias gradient sums grad_output over batch and space") {
  Rng rng(11);
  DParamStore params;
  auto spec = LayerSpec::conv(4, 3, 1);
  init_layer_params(spec, 2, "c", params, rng);
  DTensor x = random_tensor({2, 5, 5, 2}, rng);
  DLayerCache cache;
  DTensor y = layer_forward(spec, params, "c", x, &cache);
  DTensor gy = random_tensor(y.dims(), rng);
  DGradStore grads;
  layer_backward(spec, params, "c", cache, gy, grads);
  const auto& gb = grads.at("c.b");
  for (int f = 0; f < 4; ++f) {
    double want = 0;
    for (int b = 0; b < 2; ++b)
      for (int i = 0; i < 5; ++i)
        for (int j = 0; j < 5; ++j) want += gy.at4(b, i, j, f);
    CHECK(gb[f] == doctest::Approx(want).epsilon(1e-9));
  }
}

TEST_CASE("relu kills the gradient in the dead region") {
  DParamStore params;
  DTensor x({1, 1, 1, 1});
  x[0] = -1.0;
  DLayerCache cache;
  layer_forward(LayerSpec::relu(), params, "", x, &cache);
  DTensor gy({1, 1, 1, 1});
  gy[0] = 42.0;
  DGradStore grads;
  DTensor gx = layer_backward(LayerSpec::relu(), params, "", cache, gy, grads);
  CHECK(gx[0] == 0.0);
}

TEST_CASE("finite differences: named spec cases") {
  SUBCASE("identity conv has zero error") {
    DParamStore params;
    auto spec = LayerSpec::conv(2, 1, 1, 0);
    auto& w = params.create("id.w", {1, 1, 2, 2});
    w[0] = w[3] = 1.0;
    params.create("id.b", {2});
    Rng rng(3);
    DTensor x = random_tensor({1, 3, 3, 2}, rng);
    auto report = finite_diff_check(spec, params, "id", x, 1e-5, 1e-3);
    CHECK(report.pass);
    CHECK(report.max_rel_err < 1e-6);
  }
  SUBCASE("random 3x3 conv on 1x6x6x2") {
    Rng rng(5);
    DParamStore params;
    auto spec = LayerSpec::conv(3, 3, 1);
    init_layer_params(spec, 2, "c", params, rng);
    DTensor x = random_tensor({1, 6, 6, 2}, rng);
    auto report = finite_diff_check(spec, params, "c", x, 1e-5, 1e-3);
    INFO(report.summary());
    CHECK(report.pass);
  }
  SUBCASE("batchnorm train mode on 1x4x4x3") {
    Rng rng(9);
    DParamStore params;
    params.set_mode(Mode::kTrain);
    auto spec = LayerSpec::batchnorm();
    init_layer_params(spec, 3, "bn", params, rng);
    DTensor x = random_tensor({1, 4, 4, 3}, rng);
    auto report = finite_diff_check(spec, params, "bn", x, 1e-5, 1e-3);
    INFO(report.summary());
    CHECK(report.pass);
  }
  SUBCASE("step size outside [1e-6,1e-4] is rejected") {
    DParamStore params;
    DTensor x({1, 2, 2, 1});
    CHECK_THROWS_AS(
        finite_diff_check(LayerSpec::relu(), params, "", x, 1e-2, 1e-3),
        Error);
  }
}

TEST_CASE("finite differences: every layer kind, 10 randomized trials") {
  struct Case {
    const char* name;
    LayerSpec spec;
    int in_c;
    bool off_kink;
    Mode mode;
  };
  const Case cases[] = {
      {"conv3s1", LayerSpec::conv(3, 3, 1), 2, false, Mode::kTrain},
      {"conv5s2", LayerSpec::conv(2, 5, 2), 3, false, Mode::kTrain},
      {"tconv4s2", LayerSpec::tconv(2, 4, 2), 3, false, Mode::kTrain},
      {"batchnorm", LayerSpec::batchnorm(), 3, false, Mode::kTrain},
      {"batchnorm_inf", LayerSpec::batchnorm(), 3, false, Mode::kInference},
      {"relu", LayerSpec::relu(), 2, true, Mode::kTrain},
      {"leaky", LayerSpec::leaky_relu(0.2f), 2, true, Mode::kTrain},
      {"sigmoid", LayerSpec::sigmoid(), 2, false, Mode::kTrain},
      {"avgpool2", LayerSpec::avgpool(2), 3, false, Mode::kTrain},
      {"residual", LayerSpec::residual(4), 4, false, Mode::kTrain},
      {"residual_proj", LayerSpec::residual(5), 2, false, Mode::kTrain},
  };
  for (const auto& c : cases) {
    CAPTURE(c.name);
    for (int trial = 0; trial < 10; ++trial) {
      Rng rng(1000 + 17 * trial);
      DParamStore params;
      params.set_mode(c.mode);
      init_layer_params(c.spec, c.in_c, "l", params, rng);
      DTensor x = c.off_kink ? random_tensor_off_kink({1, 4, 4, c.in_c}, rng)
                             : random_tensor({1, 4, 4, c.in_c}, rng);
      auto report =
          finite_diff_check(c.spec, params, "l", x, 1e-5, 1e-3, 0, trial + 1);
      INFO(c.name << " trial " << trial << ": " << report.summary());
      CHECK(report.pass);
    }
  }
}

TEST_CASE("three stride-2 convs map HxW to H/8 x W/8 exactly") {
  Rng rng(21);
  for (int h : {8, 16, 64}) {
    for (int w : {8, 32}) {
      DParamStore params;
      DNetwork net;
      net.prefix = "s";
      net.add("c0", LayerSpec::conv(2, 5, 2));
      net.add("c1", LayerSpec::conv(2, 5, 2));
      net.add("c2", LayerSpec::conv(2, 5, 2));
      net.init(1, params, rng);
      DTensor x = random_tensor({1, h, w, 1}, rng);
      DTensor y = net.forward(params, x);
      CHECK(y.dim(1) == h / 8);
      CHECK(y.dim(2) == w / 8);
    }
  }
}

TEST_CASE("batchnorm train output is normalized per channel") {
  Rng rng(33);
  DParamStore params;
  params.set_mode(Mode::kTrain);
  init_layer_params(LayerSpec::batchnorm(), 3, "bn", params, rng);
  DTensor x = random_tensor({2, 8, 8, 3}, rng, -3.0, 5.0);
  DTensor y = layer_forward(LayerSpec::batchnorm(), params, "bn", x);
  const std::size_t n = y.size() / 3;
  for (int c = 0; c < 3; ++c) {
    double mean = 0, var = 0;
    for (std::size_t i = 0; i < n; ++i) mean += y[i * 3 + c];
    mean /= static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) {
      const double d = y[i * 3 + c] - mean;
      var += d * d;
    }
    var /= static_cast<double>(n);
    CHECK(std::fabs(mean) < 1e-5);
    CHECK(std::fabs(var - 1.0) < 1e-4);
  }
}

TEST_CASE("identical seed and input give bitwise identical outputs") {
  auto run = [&]() {
    Rng rng(77);
    ParamStore params;
    auto spec = LayerSpec::residual(4);
    init_layer_params(spec, 3, "r", params, rng);
    Tensor x({1, 4, 4, 3});
    for (std::size_t i = 0; i < x.size(); ++i)
      x[i] = static_cast<float>(rng.uniform(-1, 1));
    return layer_forward(spec, params, "r", x);
  };
  Tensor a = run(), b = run();
  REQUIRE(a.size() == b.size());
  CHECK(std::memcmp(a.data(), b.data(), a.size() * sizeof(float)) == 0);
}

TEST_CASE("layer error contracts") {
  DParamStore params;
  SUBCASE("non-finite input is rejected") {
    DTensor x({1, 1, 1, 1});
    x[0] = std::nan("");
    CHECK_THROWS_WITH_AS(layer_forward(LayerSpec::relu(), params, "", x),
                         doctest::Contains("non-finite"), Error);
  }
  SUBCASE("channel mismatch names the dimensions") {
    Rng rng(1);
    auto spec = LayerSpec::conv(2, 3, 1);
    init_layer_params(spec, 3, "c", params, rng);
    DTensor x({1, 4, 4, 2});
    CHECK_THROWS_WITH_AS(layer_forward(spec, params, "c", x),
                         doctest::Contains("channels"), Error);
  }
  SUBCASE("backward without cached activations is rejected") {
    DLayerCache cache;  // never filled
    DGradStore grads;
    DTensor g({1, 1, 1, 1});
    CHECK_THROWS_WITH_AS(
        layer_backward(LayerSpec::relu(), params, "", cache, g, grads),
        doctest::Contains("cached"), Error);
  }
  SUBCASE("avgpool rejects indivisible dims") {
    DTensor x({1, 5, 4, 1});
    CHECK_THROWS_AS(layer_forward(LayerSpec::avgpool(2), params, "", x),
                    Error);
  }
  SUBCASE("leaky slope outside (0,1) is rejected") {
    LayerSpec bad = LayerSpec::leaky_relu(1.5f);
    CHECK_THROWS_AS(validate_spec(bad), Error);
  }
}

TEST_CASE("transposed conv inverts the stride-2 shape map") {
  Rng rng(13);
  DParamStore params;
  auto down = LayerSpec::conv(4, 5, 2);
  auto up = LayerSpec::tconv(3, 4, 2);
  init_layer_params(down, 3, "d", params, rng);
  init_layer_params(up, 4, "u", params, rng);
  DTensor x = random_tensor({1, 16, 24, 3}, rng);
  DTensor mid = layer_forward(down, params, "d", x);
  CHECK(mid.dim(1) == 8);
  CHECK(mid.dim(2) == 12);
  DTensor back = layer_forward(up, params, "u", mid);
  CHECK(back.dim(1) == 16);
  CHECK(back.dim(2) == 24);
}
