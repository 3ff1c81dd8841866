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

#include "lesionseg/image.hpp"
#include "lesionseg/tensor.hpp"

namespace lesionseg {

/// How erosion treats pixels outside the frame.
enum class ErosionBorder {
  Background,  // outside counts as 0: masks touching the frame shrink
  Ignore,      // outside pixels are skipped
};

struct PostprocConfig {
  int threshold = 128;
  bool opening_enabled = true;
  ErosionBorder border = ErosionBorder::Background;

  /// Throws ConfigError unless threshold lies in [0, 255].
  void validate() const;
};

/// Index of the lesion channel in the logits.
inline constexpr std::size_t kLesionChannel = 1;

/// round(255 * softmax(logits)[lesion]) per pixel of batch item `index`,
/// rounding halves up. Logits must have two channels.
ByteMap prob_to_bytemap(const Tensor4& logits, std::size_t index = 0);

/// Catmull-Rom (a = -0.5) weight.
double cubic_weight(double t);

/// Separable bicubic resampling with half-pixel centres and clamped edge
/// taps; output clamped to [0, 255] and rounded half up.
ByteMap resize_bicubic(const ByteMap& map, std::size_t height, std::size_t width);

/// pixel >= threshold -> 1, else 0.
Mask binarize(const ByteMap& map, int threshold);

/// Binary erosion / dilation with the 3x3 cross (radius-1 disk). Dilation
/// ignores out-of-frame pixels. Throw ContractError on non-binary input.
Mask erode(const Mask& mask, ErosionBorder border = ErosionBorder::Background);
Mask dilate(const Mask& mask);
Mask morph_open(const Mask& mask, ErosionBorder border = ErosionBorder::Background);

/// Network logits -> final mask at the original resolution: byte map,
/// bicubic upscale, threshold, then opening.
Mask postprocess(const Tensor4& logits, std::size_t index, std::size_t original_h,
                 std::size_t original_w, const PostprocConfig& config = {});

}  // namespace lesionseg
