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
#include <string>
#include <string_view>
#include <vector>

#include "lesionseg/nn.hpp"

namespace lesionseg {

enum class Activation { None, Relu };

/// One convolution row of the layer table: square odd kernel, optional batch
/// normalization after the convolution, then the activation.
struct LayerSpec {
  std::string name;
  std::size_t kernel = 3;
  std::size_t out_channels = 1;
  std::size_t stride = 1;
  std::size_t dilation = 1;
  Padding padding = Padding::Mirror;
  Activation activation = Activation::Relu;
  bool batch_norm = true;

  bool operator==(const LayerSpec&) const = default;
};

/// Declarative description of the whole network. The last layer is the
/// subpixel convolution; its output is pixel-shuffled by `upsample` into
/// `num_classes` logit channels at input resolution.
struct ArchSpec {
  std::size_t input_h = 448;
  std::size_t input_w = 448;
  std::size_t in_channels = 3;
  std::vector<LayerSpec> layers;
  std::size_t upsample = 4;
  std::size_t num_classes = 2;

  /// The ten-layer LesionSeg stack:
  ///
  ///   conv1_1  5x5x64   s2      mirror  relu
  ///   conv1_2  3x3x96   s1      mirror  relu
  ///   conv1_3  1x1x96   s1      zero    relu
  ///   conv2_1  3x3x128  s2      mirror  relu
  ///   conv2_2  3x3x256  s1      mirror  relu
  ///   conv2_3  1x1x256  s1      zero    relu
  ///   conv3_1  3x3x256  rate 2  mirror  relu
  ///   conv3_2  3x3x256  rate 2  mirror  relu
  ///   conv3_3  3x3x128  rate 2  mirror  none
  ///   subpixel 3x3x32   s1      mirror  none, bias, no batch norm
  ///
  /// followed by a x4 pixel shuffle to 2 classes.
  static ArchSpec lesionseg(std::size_t input_h = 448, std::size_t input_w = 448);

  /// The same topology with every hidden width divided by `divisor` (at
  /// least 1 channel). The subpixel width stays upsample^2 * num_classes.
  static ArchSpec lesionseg_narrow(std::size_t input_h, std::size_t input_w, std::size_t divisor);

  /// Throws SpecError when the invariants do not hold: odd kernels, stride
  /// product equal to `upsample`, input extents divisible by `upsample`,
  /// last layer width equal to upsample^2 * num_classes.
  void validate() const;

  std::size_t stride_product() const;

  /// Canonical text form; parse(serialize()) == *this.
  std::string serialize() const;
  static ArchSpec parse(std::string_view text);

  /// FNV-1a 64 over serialize().
  std::uint64_t digest() const;

  bool operator==(const ArchSpec&) const = default;
};

}  // namespace lesionseg
