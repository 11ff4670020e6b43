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

#include "gtic/layers.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <cstring>

namespace gtic {

namespace {

constexpr double kBnEps = 1e-5;
constexpr double kBnMomentum = 0.9;

template <typename T>
using Mat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Conv geometry: maps a [B,H,W,C] tensor to the [B*OH*OW, k*k*C] patch
// matrix. Out-of-bounds taps read as zero. The same geometry serves the
// transposed conv with the input/output roles swapped.
template <typename T>
Mat<T> im2col(const TensorT<T>& in, int k, int s, int p, int oh, int ow) {
  const int B = in.dim(0), H = in.dim(1), W = in.dim(2), C = in.dim(3);
  Mat<T> col = Mat<T>::Zero(static_cast<Eigen::Index>(B) * oh * ow,
                            static_cast<Eigen::Index>(k) * k * C);
  const T* src = in.data();
  for (int b = 0; b < B; ++b) {
    for (int y = 0; y < oh; ++y) {
      for (int x = 0; x < ow; ++x) {
        const Eigen::Index row = (static_cast<Eigen::Index>(b) * oh + y) * ow + x;
        T* dst = col.data() + row * col.cols();
        for (int ky = 0; ky < k; ++ky) {
          const int iy = y * s - p + ky;
          if (iy < 0 || iy >= H) continue;
          for (int kx = 0; kx < k; ++kx) {
            const int ix = x * s - p + kx;
            if (ix < 0 || ix >= W) continue;
            const T* cell = src + ((static_cast<std::size_t>(b) * H + iy) * W + ix) * C;
            std::memcpy(dst + (ky * k + kx) * C, cell, sizeof(T) * C);
          }
        }
      }
    }
  }
  return col;
}

template <typename T>
void col2im_add(const Mat<T>& col, TensorT<T>& out, int k, int s, int p,
                int oh, int ow) {
  const int B = out.dim(0), H = out.dim(1), W = out.dim(2), C = out.dim(3);
  T* dst = out.data();
  for (int b = 0; b < B; ++b) {
    for (int y = 0; y < oh; ++y) {
      for (int x = 0; x < ow; ++x) {
        const Eigen::Index row = (static_cast<Eigen::Index>(b) * oh + y) * ow + x;
        const T* src = col.data() + row * col.cols();
        for (int ky = 0; ky < k; ++ky) {
          const int iy = y * s - p + ky;
          if (iy < 0 || iy >= H) continue;
          for (int kx = 0; kx < k; ++kx) {
            const int ix = x * s - p + kx;
            if (ix < 0 || ix >= W) continue;
            T* cell = dst + ((static_cast<std::size_t>(b) * H + iy) * W + ix) * C;
            const T* patch = src + (ky * k + kx) * C;
            for (int c = 0; c < C; ++c) cell[c] += patch[c];
          }
        }
      }
    }
  }
}

template <typename T>
Eigen::Map<const Mat<T>> as_mat(const TensorT<T>& t, Eigen::Index rows,
                                Eigen::Index cols) {
  return Eigen::Map<const Mat<T>>(t.data(), rows, cols);
}

int conv_out_dim(int in, int k, int s, int p) {
  return (in + 2 * p - k) / s + 1;
}

void require_rank4(const std::vector<int>& in, const LayerSpec& spec) {
  GTIC_REQUIRE(in.size() == 4, layer_kind_name(spec.kind),
               " expects a [B,H,W,C] input, got rank ", in.size());
}

}  // namespace

const char* layer_kind_name(LayerKind k) {
  switch (k) {
    case LayerKind::kConv: return "conv";
    case LayerKind::kTransposedConv: return "transposed-conv";
    case LayerKind::kBatchNorm: return "batchnorm";
    case LayerKind::kRelu: return "relu";
    case LayerKind::kLeakyRelu: return "leaky-relu";
    case LayerKind::kSigmoid: return "sigmoid";
    case LayerKind::kAvgPool: return "avgpool";
    case LayerKind::kResidualBlock: return "residual-block";
  }
  return "?";
}

LayerSpec LayerSpec::conv(int filters, int kernel, int stride, int padding) {
  return {LayerKind::kConv, kernel, filters, stride, padding, 0.0f};
}
LayerSpec LayerSpec::tconv(int filters, int kernel, int stride, int padding) {
  return {LayerKind::kTransposedConv, kernel, filters, stride, padding, 0.0f};
}
LayerSpec LayerSpec::batchnorm() {
  return {LayerKind::kBatchNorm, 1, 0, 1, -1, 0.0f};
}
LayerSpec LayerSpec::relu() { return {LayerKind::kRelu, 1, 0, 1, -1, 0.0f}; }
LayerSpec LayerSpec::leaky_relu(float slope) {
  return {LayerKind::kLeakyRelu, 1, 0, 1, -1, slope};
}
LayerSpec LayerSpec::sigmoid() {
  return {LayerKind::kSigmoid, 1, 0, 1, -1, 0.0f};
}
LayerSpec LayerSpec::avgpool(int kernel) {
  return {LayerKind::kAvgPool, kernel, 0, kernel, -1, 0.0f};
}
LayerSpec LayerSpec::residual(int filters) {
  return {LayerKind::kResidualBlock, 3, filters, 1, -1, 0.0f};
}

void validate_spec(const LayerSpec& spec) {
  GTIC_REQUIRE(spec.kernel >= 1, "kernel size must be >= 1, got ", spec.kernel);
  GTIC_REQUIRE(spec.stride == 1 || spec.stride == 2 ||
                   (spec.kind == LayerKind::kAvgPool && spec.stride >= 1),
               "stride must be 1 or 2, got ", spec.stride);
  if (spec.kind == LayerKind::kLeakyRelu) {
    GTIC_REQUIRE(spec.leaky_slope > 0.0f && spec.leaky_slope < 1.0f,
                 "leaky slope must lie in (0,1), got ", spec.leaky_slope);
  } else {
    GTIC_REQUIRE(spec.leaky_slope == 0.0f,
                 "leaky slope is only valid for leaky-relu");
  }
  if (spec.kind == LayerKind::kConv || spec.kind == LayerKind::kTransposedConv ||
      spec.kind == LayerKind::kResidualBlock) {
    GTIC_REQUIRE(spec.filters >= 1, layer_kind_name(spec.kind),
                 " needs filters >= 1, got ", spec.filters);
  }
  if (spec.kind == LayerKind::kAvgPool) {
    GTIC_REQUIRE(spec.kernel == spec.stride,
                 "avgpool uses non-overlapping windows (kernel == stride)");
  }
}

int effective_padding(const LayerSpec& spec) {
  return spec.padding >= 0 ? spec.padding : (spec.kernel - 1) / 2;
}

std::vector<int> layer_output_dims(const LayerSpec& spec,
                                   const std::vector<int>& in) {
  validate_spec(spec);
  require_rank4(in, spec);
  const int B = in[0], H = in[1], W = in[2], C = in[3];
  const int k = spec.kernel, s = spec.stride, p = effective_padding(spec);
  switch (spec.kind) {
    case LayerKind::kConv: {
      const int oh = conv_out_dim(H, k, s, p), ow = conv_out_dim(W, k, s, p);
      GTIC_REQUIRE(oh >= 1 && ow >= 1, "conv kernel ", k, " stride ", s,
                   " pad ", p, " does not fit input ", H, "x", W);
      return {B, oh, ow, spec.filters};
    }
    case LayerKind::kTransposedConv: {
      const int oh = (H - 1) * s - 2 * p + k, ow = (W - 1) * s - 2 * p + k;
      GTIC_REQUIRE(oh >= 1 && ow >= 1, "transposed conv output ", oh, "x", ow,
                   " invalid for input ", H, "x", W);
      return {B, oh, ow, spec.filters};
    }
    case LayerKind::kAvgPool:
      GTIC_REQUIRE(H % k == 0 && W % k == 0, "avgpool ", k, "x", k,
                   " needs divisible dims, got ", H, "x", W);
      return {B, H / k, W / k, C};
    case LayerKind::kResidualBlock:
      return {B, H, W, spec.filters};
    case LayerKind::kBatchNorm:
    case LayerKind::kRelu:
    case LayerKind::kLeakyRelu:
    case LayerKind::kSigmoid:
      return in;
  }
  fail("unreachable layer kind");
}

template <typename T>
int init_layer_params(const LayerSpec& spec, int in_channels,
                      const std::string& prefix, ParamStoreT<T>& params,
                      Rng& rng) {
  validate_spec(spec);
  auto init_uniform = [&](TensorT<T>& w, int fan_in) {
    const double a = 1.0 / std::sqrt(static_cast<double>(fan_in));
    for (std::size_t i = 0; i < w.size(); ++i)
      w[i] = static_cast<T>(rng.uniform(-a, a));
  };
  switch (spec.kind) {
    case LayerKind::kConv: {
      auto& w = params.create(prefix + ".w",
                              {spec.kernel, spec.kernel, in_channels, spec.filters});
      init_uniform(w, spec.kernel * spec.kernel * in_channels);
      params.create(prefix + ".b", {spec.filters});
      return spec.filters;
    }
    case LayerKind::kTransposedConv: {
      auto& w = params.create(prefix + ".w",
                              {spec.kernel, spec.kernel, spec.filters, in_channels});
      init_uniform(w, spec.kernel * spec.kernel * in_channels);
      params.create(prefix + ".b", {spec.filters});
      return spec.filters;
    }
    case LayerKind::kBatchNorm: {
      params.create(prefix + ".gamma", {in_channels}).fill(T(1));
      params.create(prefix + ".beta", {in_channels});
      params.create(prefix + ".running_mean", {in_channels});
      params.create(prefix + ".running_var", {in_channels}).fill(T(1));
      return in_channels;
    }
    case LayerKind::kResidualBlock: {
      const int f = spec.filters;
      init_layer_params(LayerSpec::conv(f, 3, 1), in_channels,
                        prefix + ".conv1", params, rng);
      init_layer_params(LayerSpec::conv(f, 3, 1), f, prefix + ".conv2", params,
                        rng);
      init_layer_params(LayerSpec::batchnorm(), f, prefix + ".bn", params, rng);
      if (in_channels != f)
        init_layer_params(LayerSpec::conv(f, 1, 1, 0), in_channels,
                          prefix + ".proj", params, rng);
      return f;
    }
    default:
      return in_channels;
  }
}

namespace {

template <typename T>
TensorT<T> conv_forward(const LayerSpec& spec, const ParamStoreT<T>& params,
                        const std::string& prefix, const TensorT<T>& input) {
  const auto out_dims = layer_output_dims(spec, input.dims());
  const int k = spec.kernel, s = spec.stride, p = effective_padding(spec);
  const int oh = out_dims[1], ow = out_dims[2];
  const auto& w = params.at(prefix + ".w");
  const auto& b = params.at(prefix + ".b");
  GTIC_REQUIRE(w.dim(2) == input.dim(3), "conv '", prefix, "' expects ",
               w.dim(2), " input channels, got ", input.dim(3));
  Mat<T> col = im2col(input, k, s, p, oh, ow);
  auto wmat = as_mat(w, col.cols(), spec.filters);
  TensorT<T> out(out_dims);
  Eigen::Map<Mat<T>> omat(out.data(), col.rows(), spec.filters);
  omat.noalias() = col * wmat;
  omat.rowwise() += Eigen::Map<const Eigen::Matrix<T, 1, Eigen::Dynamic>>(
      b.data(), spec.filters);
  return out;
}

template <typename T>
TensorT<T> conv_backward(const LayerSpec& spec, const ParamStoreT<T>& params,
                         const std::string& prefix, const TensorT<T>& input,
                         const TensorT<T>& grad_out, GradStoreT<T>& grads) {
  const auto out_dims = layer_output_dims(spec, input.dims());
  const int k = spec.kernel, s = spec.stride, p = effective_padding(spec);
  const int oh = out_dims[1], ow = out_dims[2];
  const auto& w = params.at(prefix + ".w");
  const Eigen::Index rows =
      static_cast<Eigen::Index>(input.dim(0)) * oh * ow;
  auto gmat = as_mat(grad_out, rows, spec.filters);
  auto wmat = as_mat(w, static_cast<Eigen::Index>(k) * k * input.dim(3),
                     spec.filters);

  // Patch matrix is rebuilt from the cached input rather than stored.
  Mat<T> col = im2col(input, k, s, p, oh, ow);

  TensorT<T> gw(w.dims());
  Eigen::Map<Mat<T>> gwmat(gw.data(), wmat.rows(), wmat.cols());
  gwmat.noalias() = col.transpose() * gmat;
  grads.add(prefix + ".w", gw);

  TensorT<T> gb({spec.filters});
  Eigen::Map<Eigen::Matrix<T, 1, Eigen::Dynamic>>(gb.data(), spec.filters) =
      gmat.colwise().sum();
  grads.add(prefix + ".b", gb);

  Mat<T> gcol = gmat * wmat.transpose();
  TensorT<T> gin(input.dims());
  col2im_add(gcol, gin, k, s, p, oh, ow);
  return gin;
}

template <typename T>
TensorT<T> tconv_forward(const LayerSpec& spec, const ParamStoreT<T>& params,
                         const std::string& prefix, const TensorT<T>& input) {
  const auto out_dims = layer_output_dims(spec, input.dims());
  const int k = spec.kernel, s = spec.stride, p = effective_padding(spec);
  const int ih = input.dim(1), iw = input.dim(2), ic = input.dim(3);
  const auto& w = params.at(prefix + ".w");  // [k,k,outC,inC]
  const auto& b = params.at(prefix + ".b");
  GTIC_REQUIRE(w.dim(3) == ic, "transposed conv '", prefix, "' expects ",
               w.dim(3), " input channels, got ", ic);
  const Eigen::Index rows = static_cast<Eigen::Index>(input.dim(0)) * ih * iw;
  auto xmat = as_mat(input, rows, ic);
  auto wmat = as_mat(w, static_cast<Eigen::Index>(k) * k * spec.filters, ic);
  Mat<T> col = xmat * wmat.transpose();  // [rows, k*k*outC]
  TensorT<T> out(out_dims);
  // Scatter with the adjoint geometry: the forward input grid plays the role
  // of a conv output grid over `out`.
  col2im_add(col, out, k, s, p, ih, iw);
  const int oc = spec.filters;
  T* od = out.data();
  const std::size_t spatial = out.size() / oc;
  for (std::size_t i = 0; i < spatial; ++i)
    for (int c = 0; c < oc; ++c) od[i * oc + c] += b[c];
  return out;
}

template <typename T>
TensorT<T> tconv_backward(const LayerSpec& spec, const ParamStoreT<T>& params,
                          const std::string& prefix, const TensorT<T>& input,
                          const TensorT<T>& grad_out, GradStoreT<T>& grads) {
  const int k = spec.kernel, s = spec.stride, p = effective_padding(spec);
  const int ih = input.dim(1), iw = input.dim(2), ic = input.dim(3);
  const auto& w = params.at(prefix + ".w");
  const Eigen::Index rows = static_cast<Eigen::Index>(input.dim(0)) * ih * iw;
  auto xmat = as_mat(input, rows, ic);
  auto wmat = as_mat(w, static_cast<Eigen::Index>(k) * k * spec.filters, ic);

  Mat<T> gcol = im2col(grad_out, k, s, p, ih, iw);  // [rows, k*k*outC]

  TensorT<T> gw(w.dims());
  Eigen::Map<Mat<T>> gwmat(gw.data(), wmat.rows(), wmat.cols());
  gwmat.noalias() = gcol.transpose() * xmat;
  grads.add(prefix + ".w", gw);

  TensorT<T> gb({spec.filters});
  const T* gd = grad_out.data();
  const std::size_t spatial = grad_out.size() / spec.filters;
  for (std::size_t i = 0; i < spatial; ++i)
    for (int c = 0; c < spec.filters; ++c) gb[c] += gd[i * spec.filters + c];
  grads.add(prefix + ".b", gb);

  TensorT<T> gin(input.dims());
  Eigen::Map<Mat<T>> ginmat(gin.data(), rows, ic);
  ginmat.noalias() = gcol * wmat;
  return gin;
}

template <typename T>
TensorT<T> batchnorm_forward(ParamStoreT<T>& params, const std::string& prefix,
                             const TensorT<T>& input, LayerCacheT<T>* cache) {
  const int C = input.dim(3);
  const std::size_t n = input.size() / C;
  const auto& gamma = params.at(prefix + ".gamma");
  const auto& beta = params.at(prefix + ".beta");
  GTIC_REQUIRE(gamma.dim(0) == C, "batchnorm '", prefix, "' has ",
               gamma.dim(0), " channels, input has ", C);
  TensorT<T> out(input.dims());
  const T* x = input.data();
  T* y = out.data();

  std::vector<T> mean(C, T(0)), var(C, T(0)), inv_std(C, T(0));
  if (params.mode() == Mode::kTrain) {
    for (std::size_t i = 0; i < n; ++i)
      for (int c = 0; c < C; ++c) mean[c] += x[i * C + c];
    for (int c = 0; c < C; ++c) mean[c] /= static_cast<T>(n);
    for (std::size_t i = 0; i < n; ++i)
      for (int c = 0; c < C; ++c) {
        const T d = x[i * C + c] - mean[c];
        var[c] += d * d;
      }
    for (int c = 0; c < C; ++c) var[c] /= static_cast<T>(n);
    auto& rm = params.at(prefix + ".running_mean");
    auto& rv = params.at(prefix + ".running_var");
    for (int c = 0; c < C; ++c) {
      rm[c] = static_cast<T>(kBnMomentum) * rm[c] +
              static_cast<T>(1.0 - kBnMomentum) * mean[c];
      rv[c] = static_cast<T>(kBnMomentum) * rv[c] +
              static_cast<T>(1.0 - kBnMomentum) * var[c];
    }
  } else {
    const auto& rm = params.at(prefix + ".running_mean");
    const auto& rv = params.at(prefix + ".running_var");
    for (int c = 0; c < C; ++c) {
      mean[c] = rm[c];
      var[c] = rv[c];
    }
  }
  for (int c = 0; c < C; ++c)
    inv_std[c] = static_cast<T>(1.0 / std::sqrt(static_cast<double>(var[c]) + kBnEps));

  TensorT<T> xhat(input.dims());
  T* xh = xhat.data();
  for (std::size_t i = 0; i < n; ++i)
    for (int c = 0; c < C; ++c) {
      const T v = (x[i * C + c] - mean[c]) * inv_std[c];
      xh[i * C + c] = v;
      y[i * C + c] = gamma[c] * v + beta[c];
    }
  if (cache) {
    cache->xhat = std::move(xhat);
    cache->inv_std = std::move(inv_std);
    cache->used_batch_stats = params.mode() == Mode::kTrain;
  }
  return out;
}

template <typename T>
TensorT<T> batchnorm_backward(const ParamStoreT<T>& params,
                              const std::string& prefix,
                              const LayerCacheT<T>& cache,
                              const TensorT<T>& grad_out,
                              GradStoreT<T>& grads) {
  const int C = grad_out.dim(3);
  const std::size_t n = grad_out.size() / C;
  const auto& gamma = params.at(prefix + ".gamma");
  const T* gy = grad_out.data();
  const T* xh = cache.xhat.data();

  TensorT<T> ggamma({C}), gbeta({C});
  for (std::size_t i = 0; i < n; ++i)
    for (int c = 0; c < C; ++c) {
      ggamma[c] += gy[i * C + c] * xh[i * C + c];
      gbeta[c] += gy[i * C + c];
    }
  grads.add(prefix + ".gamma", ggamma);
  grads.add(prefix + ".beta", gbeta);

  TensorT<T> gin(grad_out.dims());
  T* gx = gin.data();
  if (cache.used_batch_stats) {
    // d/dx of ((x - mu)/sigma) with mu, sigma functions of the batch.
    for (int c = 0; c < C; ++c) {
      const T sum_gy = gbeta[c];
      const T sum_gy_xh = ggamma[c];
      const T scale = gamma[c] * cache.inv_std[c] / static_cast<T>(n);
      for (std::size_t i = 0; i < n; ++i) {
        gx[i * C + c] = scale * (static_cast<T>(n) * gy[i * C + c] - sum_gy -
                                 xh[i * C + c] * sum_gy_xh);
      }
    }
  } else {
    for (std::size_t i = 0; i < n; ++i)
      for (int c = 0; c < C; ++c)
        gx[i * C + c] = gy[i * C + c] * gamma[c] * cache.inv_std[c];
  }
  return gin;
}

template <typename T>
TensorT<T> avgpool_forward(const LayerSpec& spec, const TensorT<T>& input) {
  const auto out_dims = layer_output_dims(spec, input.dims());
  const int k = spec.kernel;
  const int B = input.dim(0), C = input.dim(3);
  const int oh = out_dims[1], ow = out_dims[2];
  TensorT<T> out(out_dims);
  const T norm = T(1) / static_cast<T>(k * k);
  for (int b = 0; b < B; ++b)
    for (int y = 0; y < oh; ++y)
      for (int x = 0; x < ow; ++x)
        for (int c = 0; c < C; ++c) {
          T acc = 0;
          for (int ky = 0; ky < k; ++ky)
            for (int kx = 0; kx < k; ++kx)
              acc += input.at4(b, y * k + ky, x * k + kx, c);
          out.at4(b, y, x, c) = acc * norm;
        }
  return out;
}

template <typename T>
TensorT<T> avgpool_backward(const LayerSpec& spec, const TensorT<T>& input,
                            const TensorT<T>& grad_out) {
  const int k = spec.kernel;
  const int B = input.dim(0), C = input.dim(3);
  const int oh = grad_out.dim(1), ow = grad_out.dim(2);
  TensorT<T> gin(input.dims());
  const T norm = T(1) / static_cast<T>(k * k);
  for (int b = 0; b < B; ++b)
    for (int y = 0; y < oh; ++y)
      for (int x = 0; x < ow; ++x)
        for (int c = 0; c < C; ++c) {
          const T g = grad_out.at4(b, y, x, c) * norm;
          for (int ky = 0; ky < k; ++ky)
            for (int kx = 0; kx < k; ++kx)
              gin.at4(b, y * k + ky, x * k + kx, c) += g;
        }
  return gin;
}

}  // namespace

template <typename T>
TensorT<T> layer_forward(const LayerSpec& spec, ParamStoreT<T>& params,
                         const std::string& prefix, const TensorT<T>& input,
                         LayerCacheT<T>* cache) {
  validate_spec(spec);
  require_rank4(input.dims(), spec);
  GTIC_REQUIRE(input.all_finite(), layer_kind_name(spec.kind), " '", prefix,
               "': non-finite input rejected");
  TensorT<T> out;
  LayerCacheT<T>* sub = nullptr;
  switch (spec.kind) {
    case LayerKind::kConv:
      out = conv_forward(spec, params, prefix, input);
      break;
    case LayerKind::kTransposedConv:
      out = tconv_forward(spec, params, prefix, input);
      break;
    case LayerKind::kBatchNorm:
      out = batchnorm_forward(params, prefix, input, cache);
      break;
    case LayerKind::kAvgPool:
      out = avgpool_forward(spec, input);
      break;
    case LayerKind::kRelu: {
      out = input;
      for (std::size_t i = 0; i < out.size(); ++i)
        if (out[i] < T(0)) out[i] = T(0);
      break;
    }
    case LayerKind::kLeakyRelu: {
      out = input;
      const T a = static_cast<T>(spec.leaky_slope);
      for (std::size_t i = 0; i < out.size(); ++i)
        if (out[i] < T(0)) out[i] *= a;
      break;
    }
    case LayerKind::kSigmoid: {
      out = TensorT<T>(input.dims());
      for (std::size_t i = 0; i < out.size(); ++i)
        out[i] = static_cast<T>(1.0 / (1.0 + std::exp(-static_cast<double>(input[i]))));
      break;
    }
    case LayerKind::kResidualBlock: {
      const int f = spec.filters;
      const bool projected = input.dim(3) != f;
      if (cache) {
        cache->sub.assign(projected ? 6 : 5, LayerCacheT<T>{});
        sub = cache->sub.data();
      }
      auto h = layer_forward(LayerSpec::conv(f, 3, 1), params,
                             prefix + ".conv1", input, sub ? &sub[0] : nullptr);
      h = layer_forward(LayerSpec::relu(), params, "", h,
                        sub ? &sub[1] : nullptr);
      h = layer_forward(LayerSpec::conv(f, 3, 1), params, prefix + ".conv2", h,
                        sub ? &sub[2] : nullptr);
      h = layer_forward(LayerSpec::batchnorm(), params, prefix + ".bn", h,
                        sub ? &sub[3] : nullptr);
      TensorT<T> skip =
          projected ? layer_forward(LayerSpec::conv(f, 1, 1, 0), params,
                                    prefix + ".proj", input,
                                    sub ? &sub[4] : nullptr)
                    : input;
      for (std::size_t i = 0; i < h.size(); ++i) h[i] += skip[i];
      out = layer_forward(LayerSpec::relu(), params, "", h,
                          sub ? &sub[projected ? 5 : 4] : nullptr);
      break;
    }
  }
  if (cache) {
    cache->valid = true;
    cache->spec = spec;
    cache->input = input;
    if (spec.kind == LayerKind::kSigmoid || spec.kind == LayerKind::kResidualBlock)
      cache->output = out;
  }
  return out;
}

template <typename T>
TensorT<T> layer_backward(const LayerSpec& spec, const ParamStoreT<T>& params,
                          const std::string& prefix,
                          const LayerCacheT<T>& cache,
                          const TensorT<T>& grad_output,
                          GradStoreT<T>& grads) {
  GTIC_REQUIRE(cache.valid, layer_kind_name(spec.kind), " '", prefix,
               "': backward without cached forward activations");
  switch (spec.kind) {
    case LayerKind::kConv:
      return conv_backward(spec, params, prefix, cache.input, grad_output,
                           grads);
    case LayerKind::kTransposedConv:
      return tconv_backward(spec, params, prefix, cache.input, grad_output,
                            grads);
    case LayerKind::kBatchNorm:
      return batchnorm_backward(params, prefix, cache, grad_output, grads);
    case LayerKind::kAvgPool:
      return avgpool_backward(spec, cache.input, grad_output);
    case LayerKind::kRelu: {
      TensorT<T> gin = grad_output;
      for (std::size_t i = 0; i < gin.size(); ++i)
        if (cache.input[i] <= T(0)) gin[i] = T(0);
      return gin;
    }
    case LayerKind::kLeakyRelu: {
      TensorT<T> gin = grad_output;
      const T a = static_cast<T>(spec.leaky_slope);
      for (std::size_t i = 0; i < gin.size(); ++i)
        if (cache.input[i] <= T(0)) gin[i] *= a;
      return gin;
    }
    case LayerKind::kSigmoid: {
      TensorT<T> gin = grad_output;
      for (std::size_t i = 0; i < gin.size(); ++i) {
        const T y = cache.output[i];
        gin[i] *= y * (T(1) - y);
      }
      return gin;
    }
    case LayerKind::kResidualBlock: {
      const int f = spec.filters;
      const bool projected = cache.input.dim(3) != f;
      const auto& sub = cache.sub;
      GTIC_REQUIRE(sub.size() == static_cast<std::size_t>(projected ? 6 : 5),
                   "residual cache incomplete");
      auto gsum = layer_backward(LayerSpec::relu(), params, "",
                                 sub[projected ? 5 : 4], grad_output, grads);
      auto g = layer_backward(LayerSpec::batchnorm(), params, prefix + ".bn",
                              sub[3], gsum, grads);
      g = layer_backward(LayerSpec::conv(f, 3, 1), params, prefix + ".conv2",
                         sub[2], g, grads);
      g = layer_backward(LayerSpec::relu(), params, "", sub[1], g, grads);
      g = layer_backward(LayerSpec::conv(f, 3, 1), params, prefix + ".conv1",
                         sub[0], g, grads);
      TensorT<T> gskip =
          projected ? layer_backward(LayerSpec::conv(f, 1, 1, 0), params,
                                     prefix + ".proj", sub[4], gsum, grads)
                    : gsum;
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += gskip[i];
      return g;
    }
  }
  fail("unreachable layer kind");
}

template <typename T>
TensorT<T> to_batch1(const TensorT<T>& img) {
  GTIC_REQUIRE(img.rank() == 3, "expected [H,W,C] image, got rank ",
               img.rank());
  return img.reshaped({1, img.dim(0), img.dim(1), img.dim(2)});
}

template <typename T>
TensorT<T> from_batch1(const TensorT<T>& batched) {
  GTIC_REQUIRE(batched.rank() == 4 && batched.dim(0) == 1,
               "expected a [1,H,W,C] tensor, got ", dims_str(batched));
  return batched.reshaped({batched.dim(1), batched.dim(2), batched.dim(3)});
}

template int init_layer_params<float>(const LayerSpec&, int,
                                      const std::string&, ParamStoreT<float>&,
                                      Rng&);
template int init_layer_params<double>(const LayerSpec&, int,
                                       const std::string&,
                                       ParamStoreT<double>&, Rng&);
template TensorT<float> layer_forward<float>(const LayerSpec&,
                                             ParamStoreT<float>&,
                                             const std::string&,
                                             const TensorT<float>&,
                                             LayerCacheT<float>*);
template TensorT<double> layer_forward<double>(const LayerSpec&,
                                               ParamStoreT<double>&,
                                               const std::string&,
                                               const TensorT<double>&,
                                               LayerCacheT<double>*);
template TensorT<float> layer_backward<float>(const LayerSpec&,
                                              const ParamStoreT<float>&,
                                              const std::string&,
                                              const LayerCacheT<float>&,
                                              const TensorT<float>&,
                                              GradStoreT<float>&);
template TensorT<double> layer_backward<double>(const LayerSpec&,
                                                const ParamStoreT<double>&,
                                                const std::string&,
                                                const LayerCacheT<double>&,
                                                const TensorT<double>&,
                                                GradStoreT<double>&);
template TensorT<float> to_batch1<float>(const TensorT<float>&);
template TensorT<double> to_batch1<double>(const TensorT<double>&);
template TensorT<float> from_batch1<float>(const TensorT<float>&);
template TensorT<double> from_batch1<double>(const TensorT<double>&);

}  // namespace gtic
