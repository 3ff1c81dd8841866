// Copyright 2026 The LesionSeg Authors
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

#include "lesionseg/nn.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <cstring>
#include <string>

#include "lesionseg/errors.hpp"

namespace lesionseg {

namespace {

using RowMatrix = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatrixMap = Eigen::Map<RowMatrix>;
using ConstMatrixMap = Eigen::Map<const RowMatrix>;

// Index of the source sample for padded coordinate p (p in [0, extent + 2m)).
std::ptrdiff_t reflect(std::ptrdiff_t i, std::ptrdiff_t extent) {
  if (i < 0) return -i;
  if (i >= extent) return 2 * (extent - 1) - i;
  return i;
}

void check_mirror(std::size_t margin, std::size_t extent, const char* axis) {
  if (margin >= extent && margin > 0) {
    throw PaddingError(std::string("mirror margin ") + std::to_string(margin) + " on " + axis +
                       " must be smaller than extent " + std::to_string(extent));
  }
}

struct ConvGeometry {
  std::size_t c_in, c_out, kh, kw, stride, rate;
  std::size_t hp, wp;  // padded input extents
  std::size_t ho, wo;
  std::size_t rows() const { return c_in * kh * kw; }
  std::size_t cols() const { return ho * wo; }
  bool pointwise() const { return kh == 1 && kw == 1 && stride == 1; }
};

ConvGeometry geometry(const Shape& in, const ConvParams& p) {
  const Shape out = conv2d_output_shape(in, p);
  return {p.in_channels(), p.out_channels(), p.kernel_h(), p.kernel_w(), p.stride, p.dilation,
          in.h + 2 * p.margin_h(), in.w + 2 * p.margin_w(), out.h, out.w};
}

// Unfolds one padded image (c_in, hp, wp) into a (c_in*kh*kw, ho*wo) matrix.
void im2col(const float* image, const ConvGeometry& g, float* col) {
  for (std::size_t c = 0; c < g.c_in; ++c) {
    const float* plane = image + c * g.hp * g.wp;
    for (std::size_t u = 0; u < g.kh; ++u) {
      for (std::size_t v = 0; v < g.kw; ++v) {
        float* row = col + ((c * g.kh + u) * g.kw + v) * g.cols();
        for (std::size_t i = 0; i < g.ho; ++i) {
          const float* src = plane + (i * g.stride + u * g.rate) * g.wp + v * g.rate;
          float* dst = row + i * g.wo;
          if (g.stride == 1) {
            std::memcpy(dst, src, g.wo * sizeof(float));
          } else {
            for (std::size_t j = 0; j < g.wo; ++j) dst[j] = src[j * g.stride];
          }
        }
      }
    }
  }
}

// Adjoint of im2col: scatters-and-adds a column matrix into a padded image.
void col2im(const float* col, const ConvGeometry& g, float* image) {
  for (std::size_t c = 0; c < g.c_in; ++c) {
    float* plane = image + c * g.hp * g.wp;
    for (std::size_t u = 0; u < g.kh; ++u) {
      for (std::size_t v = 0; v < g.kw; ++v) {
        const float* row = col + ((c * g.kh + u) * g.kw + v) * g.cols();
        for (std::size_t i = 0; i < g.ho; ++i) {
          float* dst = plane + (i * g.stride + u * g.rate) * g.wp + v * g.rate;
          const float* src = row + i * g.wo;
          for (std::size_t j = 0; j < g.wo; ++j) dst[j * g.stride] += src[j];
        }
      }
    }
  }
}

void check_same_shape(const Tensor4& a, const Tensor4& b, const char* what) {
  if (a.shape() != b.shape()) {
    throw ShapeError(std::string(what) + ": shape " + to_string(b.shape()) + " does not match " +
                     to_string(a.shape()));
  }
}

Tensor4 per_channel(std::size_t channels, float value) {
  return Tensor4::filled({1, channels, 1, 1}, value);
}

}  // namespace

Tensor4 pad(const Tensor4& x, std::size_t margin_h, std::size_t margin_w, Padding mode) {
  const Shape& s = x.shape();
  if (margin_h == 0 && margin_w == 0) return x;
  if (mode == Padding::Mirror) {
    check_mirror(margin_h, s.h, "height");
    check_mirror(margin_w, s.w, "width");
  }
  const Shape ps{s.n, s.c, s.h + 2 * margin_h, s.w + 2 * margin_w};
  Tensor4 out(ps);
  const auto mh = static_cast<std::ptrdiff_t>(margin_h);
  const auto mw = static_cast<std::ptrdiff_t>(margin_w);
  for (std::size_t n = 0; n < s.n; ++n) {
    for (std::size_t c = 0; c < s.c; ++c) {
      const float* src = x.plane(n, c);
      float* dst = out.plane(n, c);
      for (std::size_t y = 0; y < ps.h; ++y) {
        const std::ptrdiff_t sy = static_cast<std::ptrdiff_t>(y) - mh;
        float* drow = dst + y * ps.w;
        if (mode == Padding::Zero) {
          if (sy < 0 || sy >= static_cast<std::ptrdiff_t>(s.h)) continue;
          std::memcpy(drow + margin_w, src + sy * s.w, s.w * sizeof(float));
          continue;
        }
        const float* srow = src + reflect(sy, static_cast<std::ptrdiff_t>(s.h)) * s.w;
        for (std::size_t xx = 0; xx < ps.w; ++xx) {
          const std::ptrdiff_t sx = static_cast<std::ptrdiff_t>(xx) - mw;
          drow[xx] = srow[reflect(sx, static_cast<std::ptrdiff_t>(s.w))];
        }
      }
    }
  }
  return out;
}

Tensor4 pad_backward(const Tensor4& grad_padded, std::size_t margin_h, std::size_t margin_w,
                     Padding mode) {
  if (margin_h == 0 && margin_w == 0) return grad_padded;
  const Shape& ps = grad_padded.shape();
  if (ps.h <= 2 * margin_h || ps.w <= 2 * margin_w) {
    throw ShapeError("padded gradient " + to_string(ps) + " too small for its margins");
  }
  const Shape s{ps.n, ps.c, ps.h - 2 * margin_h, ps.w - 2 * margin_w};
  if (mode == Padding::Mirror) {
    check_mirror(margin_h, s.h, "height");
    check_mirror(margin_w, s.w, "width");
  }
  Tensor4 out(s);
  const auto mh = static_cast<std::ptrdiff_t>(margin_h);
  const auto mw = static_cast<std::ptrdiff_t>(margin_w);
  for (std::size_t n = 0; n < s.n; ++n) {
    for (std::size_t c = 0; c < s.c; ++c) {
      const float* src = grad_padded.plane(n, c);
      float* dst = out.plane(n, c);
      if (mode == Padding::Zero) {
        for (std::size_t y = 0; y < s.h; ++y) {
          std::memcpy(dst + y * s.w, src + (y + margin_h) * ps.w + margin_w, s.w * sizeof(float));
        }
        continue;
      }
      for (std::size_t y = 0; y < ps.h; ++y) {
        const auto sy = reflect(static_cast<std::ptrdiff_t>(y) - mh, static_cast<std::ptrdiff_t>(s.h));
        for (std::size_t xx = 0; xx < ps.w; ++xx) {
          const auto sx =
              reflect(static_cast<std::ptrdiff_t>(xx) - mw, static_cast<std::ptrdiff_t>(s.w));
          dst[sy * s.w + sx] += src[y * ps.w + xx];
        }
      }
    }
  }
  return out;
}

void ConvParams::validate() const {
  const Shape& ws = weight.shape();
  if (weight.empty()) throw ShapeError("convolution has no weights");
  if (ws.h % 2 == 0 || ws.w % 2 == 0) {
    throw ShapeError("kernel extents must be odd, got " + std::to_string(ws.h) + "x" +
                     std::to_string(ws.w));
  }
  if (stride == 0 || dilation == 0) throw ShapeError("stride and dilation must be >= 1");
  if (bias && bias->shape() != Shape{1, ws.n, 1, 1}) {
    throw ShapeError("bias shape " + to_string(bias->shape()) + " does not match " +
                     std::to_string(ws.n) + " output channels");
  }
}

Shape conv2d_output_shape(const Shape& in, const ConvParams& p) {
  p.validate();
  if (in.c != p.in_channels()) {
    throw ShapeError("convolution expects " + std::to_string(p.in_channels()) +
                     " input channels, got " + std::to_string(in.c));
  }
  return {in.n, p.out_channels(), (in.h + p.stride - 1) / p.stride,
          (in.w + p.stride - 1) / p.stride};
}

Tensor4 conv2d_forward(const Tensor4& x, const ConvParams& p) {
  const Shape out_shape = conv2d_output_shape(x.shape(), p);
  const Tensor4 xp = pad(x, p.margin_h(), p.margin_w(), p.padding);
  const ConvGeometry g = geometry(x.shape(), p);
  Tensor4 out(out_shape);

  const ConstMatrixMap weights(p.weight.data().data(), g.c_out, g.rows());
  std::vector<float> col(g.pointwise() ? 0 : g.rows() * g.cols());
  for (std::size_t n = 0; n < out_shape.n; ++n) {
    const float* image = xp.plane(n, 0);
    if (!g.pointwise()) im2col(image, g, col.data());
    const ConstMatrixMap cols(g.pointwise() ? image : col.data(), g.rows(), g.cols());
    MatrixMap result(out.plane(n, 0), g.c_out, g.cols());
    result.noalias() = weights * cols;
    if (p.bias) {
      const auto b = p.bias->data();
      for (std::size_t o = 0; o < g.c_out; ++o) result.row(static_cast<Eigen::Index>(o)).array() += b[o];
    }
  }
  return out;
}

ConvGrads conv2d_backward(const Tensor4& x, const ConvParams& p, const Tensor4& grad_out) {
  const Shape out_shape = conv2d_output_shape(x.shape(), p);
  if (grad_out.shape() != out_shape) {
    throw ShapeError("conv2d_backward: grad_out shape " + to_string(grad_out.shape()) +
                     " does not match output shape " + to_string(out_shape));
  }
  const Tensor4 xp = pad(x, p.margin_h(), p.margin_w(), p.padding);
  const ConvGeometry g = geometry(x.shape(), p);

  ConvGrads grads{Tensor4(xp.shape()), Tensor4(p.weight.shape()), std::nullopt};
  if (p.bias) grads.bias = Tensor4(p.bias->shape());

  const ConstMatrixMap weights(p.weight.data().data(), g.c_out, g.rows());
  MatrixMap grad_w(grads.weight.data().data(), g.c_out, g.rows());
  std::vector<float> col(g.pointwise() ? 0 : g.rows() * g.cols());
  RowMatrix grad_col(g.rows(), g.cols());
  for (std::size_t n = 0; n < out_shape.n; ++n) {
    const float* image = xp.plane(n, 0);
    if (!g.pointwise()) im2col(image, g, col.data());
    const ConstMatrixMap cols(g.pointwise() ? image : col.data(), g.rows(), g.cols());
    const ConstMatrixMap gout(grad_out.plane(n, 0), g.c_out, g.cols());
    grad_w.noalias() += gout * cols.transpose();
    if (g.pointwise()) {
      MatrixMap gx(grads.x.plane(n, 0), g.rows(), g.cols());
      gx.noalias() = weights.transpose() * gout;
    } else {
      grad_col.noalias() = weights.transpose() * gout;
      col2im(grad_col.data(), g, grads.x.plane(n, 0));
    }
    if (grads.bias) {
      auto gb = grads.bias->data();
      for (std::size_t o = 0; o < g.c_out; ++o) {
        double sum = 0.0;
        const float* row = grad_out.plane(n, o);
        for (std::size_t i = 0; i < g.cols(); ++i) sum += row[i];
        gb[o] += static_cast<float>(sum);
      }
    }
  }
  grads.x = pad_backward(grads.x, p.margin_h(), p.margin_w(), p.padding);
  return grads;
}

Tensor4 relu(const Tensor4& x) {
  return x.map([](float v) { return v > 0.0f ? v : 0.0f; });
}

Tensor4 relu_backward(const Tensor4& x, const Tensor4& grad_out) {
  check_same_shape(x, grad_out, "relu_backward");
  Tensor4 out(x.shape());
  auto xs = x.data();
  auto gs = grad_out.data();
  auto os = out.data();
  for (std::size_t i = 0; i < xs.size(); ++i) os[i] = xs[i] > 0.0f ? gs[i] : 0.0f;
  return out;
}

BatchNormParams BatchNormParams::identity(std::size_t channels) {
  BatchNormParams p;
  p.gamma = per_channel(channels, 1.0f);
  p.beta = per_channel(channels, 0.0f);
  p.running_mean = per_channel(channels, 0.0f);
  p.running_var = per_channel(channels, 1.0f);
  return p;
}

namespace {

void check_bn(const Tensor4& x, const BatchNormParams& p) {
  const std::size_t c = x.shape().c;
  for (const Tensor4* t : {&p.gamma, &p.beta, &p.running_mean, &p.running_var}) {
    if (t->shape() != Shape{1, c, 1, 1}) {
      throw ShapeError("batch norm parameters sized for " + std::to_string(t->shape().c) +
                       " channels, input has " + std::to_string(c));
    }
  }
  if (!(p.epsilon > 0.0f)) throw ShapeError("batch norm epsilon must be positive");
}

struct ChannelStats {
  std::vector<double> mean;
  std::vector<double> var;
};

ChannelStats batch_stats(const Tensor4& x) {
  const Shape& s = x.shape();
  const double count = static_cast<double>(s.n * s.plane());
  ChannelStats st{std::vector<double>(s.c, 0.0), std::vector<double>(s.c, 0.0)};
  for (std::size_t c = 0; c < s.c; ++c) {
    double sum = 0.0;
    for (std::size_t n = 0; n < s.n; ++n) {
      const float* p = x.plane(n, c);
      for (std::size_t i = 0; i < s.plane(); ++i) sum += p[i];
    }
    const double mean = sum / count;
    double sq = 0.0;
    for (std::size_t n = 0; n < s.n; ++n) {
      const float* p = x.plane(n, c);
      for (std::size_t i = 0; i < s.plane(); ++i) {
        const double d = p[i] - mean;
        sq += d * d;
      }
    }
    st.mean[c] = mean;
    st.var[c] = sq / count;
  }
  return st;
}

Tensor4 normalize(const Tensor4& x, const BatchNormParams& p, const std::vector<double>& mean,
                  const std::vector<double>& var) {
  const Shape& s = x.shape();
  Tensor4 out(s);
  const auto gamma = p.gamma.data();
  const auto beta = p.beta.data();
  for (std::size_t c = 0; c < s.c; ++c) {
    const double inv_std = 1.0 / std::sqrt(var[c] + static_cast<double>(p.epsilon));
    const auto scale = static_cast<float>(gamma[c] * inv_std);
    const auto shift = static_cast<float>(beta[c] - gamma[c] * mean[c] * inv_std);
    for (std::size_t n = 0; n < s.n; ++n) {
      const float* src = x.plane(n, c);
      float* dst = out.plane(n, c);
      for (std::size_t i = 0; i < s.plane(); ++i) dst[i] = src[i] * scale + shift;
    }
  }
  return out;
}

}  // namespace

Tensor4 batchnorm_infer(const Tensor4& x, const BatchNormParams& p) {
  check_bn(x, p);
  const std::size_t c = x.shape().c;
  std::vector<double> mean(c), var(c);
  for (std::size_t i = 0; i < c; ++i) {
    mean[i] = p.running_mean[i];
    var[i] = p.running_var[i];
  }
  return normalize(x, p, mean, var);
}

Tensor4 batchnorm_forward(const Tensor4& x, BatchNormParams& p) {
  if (p.mode == Mode::Infer) return batchnorm_infer(x, p);
  check_bn(x, p);
  const ChannelStats st = batch_stats(x);
  const double m = p.momentum;
  for (std::size_t c = 0; c < x.shape().c; ++c) {
    p.running_mean[c] = static_cast<float>(m * p.running_mean[c] + (1.0 - m) * st.mean[c]);
    p.running_var[c] = static_cast<float>(m * p.running_var[c] + (1.0 - m) * st.var[c]);
  }
  return normalize(x, p, st.mean, st.var);
}

BatchNormGrads batchnorm_backward(const Tensor4& x, const BatchNormParams& p,
                                  const Tensor4& grad_out) {
  if (p.mode != Mode::Train) throw StateError("batchnorm_backward requires train mode");
  check_bn(x, p);
  check_same_shape(x, grad_out, "batchnorm_backward");
  const Shape& s = x.shape();
  const ChannelStats st = batch_stats(x);
  const double count = static_cast<double>(s.n * s.plane());

  BatchNormGrads g{Tensor4(s), per_channel(s.c, 0.0f), per_channel(s.c, 0.0f)};
  for (std::size_t c = 0; c < s.c; ++c) {
    const double inv_std = 1.0 / std::sqrt(st.var[c] + static_cast<double>(p.epsilon));
    double sum_g = 0.0;
    double sum_gx = 0.0;
    for (std::size_t n = 0; n < s.n; ++n) {
      const float* xs = x.plane(n, c);
      const float* gs = grad_out.plane(n, c);
      for (std::size_t i = 0; i < s.plane(); ++i) {
        sum_g += gs[i];
        sum_gx += gs[i] * ((xs[i] - st.mean[c]) * inv_std);
      }
    }
    g.gamma[c] = static_cast<float>(sum_gx);
    g.beta[c] = static_cast<float>(sum_g);
    // dx = gamma * inv_std / M * (M*g - sum(g) - xhat * sum(g*xhat))
    const double k = p.gamma[c] * inv_std / count;
    for (std::size_t n = 0; n < s.n; ++n) {
      const float* xs = x.plane(n, c);
      const float* gs = grad_out.plane(n, c);
      float* dx = g.x.plane(n, c);
      for (std::size_t i = 0; i < s.plane(); ++i) {
        const double xhat = (xs[i] - st.mean[c]) * inv_std;
        dx[i] = static_cast<float>(k * (count * gs[i] - sum_g - xhat * sum_gx));
      }
    }
  }
  return g;
}

Tensor4 pixel_shuffle(const Tensor4& x, std::size_t r) {
  const Shape& s = x.shape();
  if (r == 0 || s.c % (r * r) != 0) {
    throw ShapeError("pixel_shuffle: " + std::to_string(s.c) + " channels not divisible by r^2 = " +
                     std::to_string(r * r));
  }
  const Shape os{s.n, s.c / (r * r), s.h * r, s.w * r};
  Tensor4 out(os);
  for (std::size_t n = 0; n < s.n; ++n)
    for (std::size_t c = 0; c < os.c; ++c)
      for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < r; ++j) {
          const float* src = x.plane(n, c * r * r + i * r + j);
          float* dst = out.plane(n, c);
          for (std::size_t h = 0; h < s.h; ++h)
            for (std::size_t w = 0; w < s.w; ++w) dst[(h * r + i) * os.w + w * r + j] = src[h * s.w + w];
        }
  return out;
}

Tensor4 pixel_unshuffle(const Tensor4& x, std::size_t r) {
  const Shape& s = x.shape();
  if (r == 0 || s.h % r != 0 || s.w % r != 0) {
    throw ShapeError("pixel_unshuffle: spatial extents " + std::to_string(s.h) + "x" +
                     std::to_string(s.w) + " not divisible by " + std::to_string(r));
  }
  const Shape os{s.n, s.c * r * r, s.h / r, s.w / r};
  Tensor4 out(os);
  for (std::size_t n = 0; n < s.n; ++n)
    for (std::size_t c = 0; c < s.c; ++c)
      for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < r; ++j) {
          const float* src = x.plane(n, c);
          float* dst = out.plane(n, c * r * r + i * r + j);
          for (std::size_t h = 0; h < os.h; ++h)
            for (std::size_t w = 0; w < os.w; ++w) dst[h * os.w + w] = src[(h * r + i) * s.w + w * r + j];
        }
  return out;
}

XentResult softmax_xent(const Tensor4& logits, const Labels& labels) {
  const Shape& s = logits.shape();
  if (labels.n != s.n || labels.h != s.h || labels.w != s.w ||
      labels.values.size() != s.n * s.plane()) {
    throw ShapeError("labels " + std::to_string(labels.n) + "x" + std::to_string(labels.h) + "x" +
                     std::to_string(labels.w) + " do not match logits " + to_string(s));
  }
  const double pixels = static_cast<double>(s.n * s.plane());
  XentResult result{0.0, Tensor4(s)};
  std::vector<double> z(s.c);
  double total = 0.0;
  for (std::size_t n = 0; n < s.n; ++n) {
    for (std::size_t i = 0; i < s.plane(); ++i) {
      const std::uint8_t label = labels.values[n * s.plane() + i];
      if (label >= s.c) {
        throw LabelError("label " + std::to_string(label) + " outside [0, " + std::to_string(s.c) +
                         ")");
      }
      double zmax = -INFINITY;
      for (std::size_t c = 0; c < s.c; ++c) {
        z[c] = logits.plane(n, c)[i];
        zmax = std::max(zmax, z[c]);
      }
      double denom = 0.0;
      for (std::size_t c = 0; c < s.c; ++c) denom += std::exp(z[c] - zmax);
      const double log_denom = std::log(denom);
      total += log_denom - (z[label] - zmax);
      for (std::size_t c = 0; c < s.c; ++c) {
        const double prob = std::exp(z[c] - zmax - log_denom);
        const double g = (prob - (c == label ? 1.0 : 0.0)) / pixels;
        result.grad.plane(n, c)[i] = static_cast<float>(g);
      }
    }
  }
  result.loss = total / pixels;
  return result;
}

}  // namespace lesionseg
