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

#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "lesionseg/tensor.hpp"

namespace lesionseg {

enum class Padding { Mirror, Zero };
enum class Mode { Train, Infer };

/// Border extension. Mirror reflects about the border sample without
/// repeating it (row [1,2,3], margin 1 -> [2,1,2,3,2]); Zero fills 0.
/// Mirror margins must be smaller than the corresponding extent.
Tensor4 pad(const Tensor4& x, std::size_t margin_h, std::size_t margin_w, Padding mode);

/// Adjoint of pad(): folds the gradient of the padded tensor back onto the
/// source pixels each padded sample was copied from.
Tensor4 pad_backward(const Tensor4& grad_padded, std::size_t margin_h, std::size_t margin_w,
                     Padding mode);

/// 2D convolution parameters. weight is (c_out, c_in, kh, kw); bias, when
/// present, is (1, c_out, 1, 1).
struct ConvParams {
  Tensor4 weight;
  std::optional<Tensor4> bias;
  std::size_t stride = 1;
  std::size_t dilation = 1;
  Padding padding = Padding::Zero;

  std::size_t out_channels() const { return weight.shape().n; }
  std::size_t in_channels() const { return weight.shape().c; }
  std::size_t kernel_h() const { return weight.shape().h; }
  std::size_t kernel_w() const { return weight.shape().w; }
  /// Padding margins: dilation * (k - 1) / 2 per axis.
  std::size_t margin_h() const { return dilation * (kernel_h() - 1) / 2; }
  std::size_t margin_w() const { return dilation * (kernel_w() - 1) / 2; }

  /// Throws ShapeError if kernel extents are even or stride/dilation is 0.
  void validate() const;
};

/// Output shape of conv2d_forward: spatial extents ceil(in / stride).
Shape conv2d_output_shape(const Shape& in, const ConvParams& p);

/// Cross-correlation over the padded input:
///   out[n,o,i,j] = bias[o] + sum_{c,u,v} xp[n,c,i*s+u*r,j*s+v*r] * w[o,c,u,v]
Tensor4 conv2d_forward(const Tensor4& x, const ConvParams& p);

struct ConvGrads {
  Tensor4 x;
  Tensor4 weight;
  std::optional<Tensor4> bias;
};

ConvGrads conv2d_backward(const Tensor4& x, const ConvParams& p, const Tensor4& grad_out);

Tensor4 relu(const Tensor4& x);
/// Passes grad_out where x > 0; the subgradient at exactly 0 is 0.
Tensor4 relu_backward(const Tensor4& x, const Tensor4& grad_out);

/// Per-channel batch normalization. Per-channel tensors are (1, C, 1, 1).
struct BatchNormParams {
  Tensor4 gamma;
  Tensor4 beta;
  Tensor4 running_mean;
  Tensor4 running_var;
  float epsilon = 1e-5f;
  float momentum = 0.9f;
  Mode mode = Mode::Train;

  /// gamma = 1, beta = 0, running statistics (0, 1).
  static BatchNormParams identity(std::size_t channels);
  std::size_t channels() const { return gamma.shape().c; }
};

/// Train mode normalizes with batch statistics over (n, h, w) and folds them
/// into the running statistics (running <- momentum*running +
/// (1-momentum)*batch, population variance). Infer mode uses the running
/// statistics and leaves p untouched.
Tensor4 batchnorm_forward(const Tensor4& x, BatchNormParams& p);

/// Inference-mode normalization; never mutates p.
Tensor4 batchnorm_infer(const Tensor4& x, const BatchNormParams& p);

struct BatchNormGrads {
  Tensor4 x;
  Tensor4 gamma;
  Tensor4 beta;
};

/// Exact gradient of train-mode normalization, including the dependence of
/// the batch statistics on x. Throws StateError in Infer mode.
BatchNormGrads batchnorm_backward(const Tensor4& x, const BatchNormParams& p,
                                  const Tensor4& grad_out);

/// out[n, c, h*r+i, w*r+j] = x[n, c*r*r + i*r + j, h, w]
Tensor4 pixel_shuffle(const Tensor4& x, std::size_t r);
Tensor4 pixel_unshuffle(const Tensor4& x, std::size_t r);

/// Per-pixel class ids laid out (n, h, w).
struct Labels {
  std::size_t n = 0;
  std::size_t h = 0;
  std::size_t w = 0;
  std::vector<std::uint8_t> values;

  Labels() = default;
  Labels(std::size_t n_, std::size_t h_, std::size_t w_)
      : n(n_), h(h_), w(w_), values(n_ * h_ * w_, 0) {}

  std::uint8_t& at(std::size_t b, std::size_t y, std::size_t x) { return values[(b * h + y) * w + x]; }
  std::uint8_t at(std::size_t b, std::size_t y, std::size_t x) const {
    return values[(b * h + y) * w + x];
  }
};

struct XentResult {
  double loss = 0.0;
  Tensor4 grad;
};

/// Mean over all n*h*w pixels of -log softmax(logits)[label], with gradient
/// (softmax - onehot) / (n*h*w). Labels must lie in [0, c).
XentResult softmax_xent(const Tensor4& logits, const Labels& labels);

}  // namespace lesionseg
