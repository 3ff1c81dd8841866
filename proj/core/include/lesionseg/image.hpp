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
#include <vector>

namespace lesionseg {

/// Row-major single-channel raster.
template <typename T>
struct Plane {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<T> values;

  Plane() = default;
  Plane(std::size_t h, std::size_t w, T fill = T{}) : height(h), width(w), values(h * w, fill) {}

  T& at(std::size_t y, std::size_t x) { return values[y * width + x]; }
  const T& at(std::size_t y, std::size_t x) const { return values[y * width + x]; }
  std::size_t size() const { return values.size(); }

  bool operator==(const Plane&) const = default;
};

/// Binary {0, 1} segmentation mask.
using Mask = Plane<std::uint8_t>;
/// 0..255 grey-level map (e.g. a lesion probability scaled to bytes).
using ByteMap = Plane<std::uint8_t>;

/// Planar (channel, row, col) float image with values in [0, 255].
struct Image {
  std::size_t channels = 0;
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<float> values;

  Image() = default;
  Image(std::size_t c, std::size_t h, std::size_t w, float fill = 0.0f)
      : channels(c), height(h), width(w), values(c * h * w, fill) {}

  float& at(std::size_t c, std::size_t y, std::size_t x) { return values[(c * height + y) * width + x]; }
  float at(std::size_t c, std::size_t y, std::size_t x) const {
    return values[(c * height + y) * width + x];
  }

  bool operator==(const Image&) const = default;
};

/// Bilinear resampling with half-pixel centres (align_corners = false) and
/// edge clamping. Identity when the size is unchanged.
Image resize_bilinear(const Image& image, std::size_t height, std::size_t width);

/// Nearest-neighbour resampling with half-pixel centres; keeps masks binary.
Mask resize_nearest(const Mask& mask, std::size_t height, std::size_t width);

/// Dihedral transform of a square raster: `quarter_turns` counter-clockwise
/// 90 degree rotations followed by an optional horizontal flip.
Image transform_dihedral(const Image& image, unsigned quarter_turns, bool flip);
Mask transform_dihedral(const Mask& mask, unsigned quarter_turns, bool flip);

}  // namespace lesionseg
