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

#include "lesionseg/image.hpp"

#include <algorithm>
#include <cmath>

#include "lesionseg/errors.hpp"

namespace lesionseg {

namespace {

struct Tap {
  std::size_t lo;
  std::size_t hi;
  float frac;
};

// Half-pixel-centre source coordinates for each output index.
std::vector<Tap> linear_taps(std::size_t src, std::size_t dst) {
  std::vector<Tap> taps(dst);
  const double scale = static_cast<double>(src) / static_cast<double>(dst);
  for (std::size_t i = 0; i < dst; ++i) {
    double s = (static_cast<double>(i) + 0.5) * scale - 0.5;
    s = std::clamp(s, 0.0, static_cast<double>(src - 1));
    const auto lo = static_cast<std::size_t>(std::floor(s));
    const std::size_t hi = std::min(lo + 1, src - 1);
    taps[i] = {lo, hi, static_cast<float>(s - static_cast<double>(lo))};
  }
  return taps;
}

std::vector<std::size_t> nearest_taps(std::size_t src, std::size_t dst) {
  std::vector<std::size_t> idx(dst);
  const double scale = static_cast<double>(src) / static_cast<double>(dst);
  for (std::size_t i = 0; i < dst; ++i) {
    const auto s = static_cast<std::size_t>(std::floor((static_cast<double>(i) + 0.5) * scale));
    idx[i] = std::min(s, src - 1);
  }
  return idx;
}

// Maps output (y, x) to source (sy, sx) for an n x n raster.
template <typename Fn>
void for_each_dihedral(std::size_t n, unsigned quarter_turns, bool flip, Fn&& fn) {
  for (std::size_t y = 0; y < n; ++y) {
    for (std::size_t x = 0; x < n; ++x) {
      // Undo the flip first, then the rotation.
      std::size_t fx = flip ? n - 1 - x : x;
      std::size_t fy = y;
      std::size_t sy = fy;
      std::size_t sx = fx;
      switch (quarter_turns % 4) {
        case 0: break;
        case 1: sy = fx; sx = n - 1 - fy; break;
        case 2: sy = n - 1 - fy; sx = n - 1 - fx; break;
        case 3: sy = n - 1 - fx; sx = fy; break;
      }
      fn(y, x, sy, sx);
    }
  }
}

void require_square(std::size_t h, std::size_t w) {
  if (h != w) throw ShapeError("dihedral transforms need a square raster");
}

}  // namespace

Image resize_bilinear(const Image& image, std::size_t height, std::size_t width) {
  if (height == 0 || width == 0) throw ShapeError("resize target must be at least 1x1");
  if (height == image.height && width == image.width) return image;
  const auto ty = linear_taps(image.height, height);
  const auto tx = linear_taps(image.width, width);
  Image out(image.channels, height, width);
  for (std::size_t c = 0; c < image.channels; ++c) {
    for (std::size_t y = 0; y < height; ++y) {
      const Tap& a = ty[y];
      for (std::size_t x = 0; x < width; ++x) {
        const Tap& b = tx[x];
        const float top = image.at(c, a.lo, b.lo) * (1.0f - b.frac) + image.at(c, a.lo, b.hi) * b.frac;
        const float bottom =
            image.at(c, a.hi, b.lo) * (1.0f - b.frac) + image.at(c, a.hi, b.hi) * b.frac;
        out.at(c, y, x) = top * (1.0f - a.frac) + bottom * a.frac;
      }
    }
  }
  return out;
}

Mask resize_nearest(const Mask& mask, std::size_t height, std::size_t width) {
  if (height == 0 || width == 0) throw ShapeError("resize target must be at least 1x1");
  if (height == mask.height && width == mask.width) return mask;
  const auto iy = nearest_taps(mask.height, height);
  const auto ix = nearest_taps(mask.width, width);
  Mask out(height, width);
  for (std::size_t y = 0; y < height; ++y)
    for (std::size_t x = 0; x < width; ++x) out.at(y, x) = mask.at(iy[y], ix[x]);
  return out;
}

Image transform_dihedral(const Image& image, unsigned quarter_turns, bool flip) {
  require_square(image.height, image.width);
  Image out(image.channels, image.height, image.width);
  for (std::size_t c = 0; c < image.channels; ++c) {
    for_each_dihedral(image.height, quarter_turns, flip,
                      [&](std::size_t y, std::size_t x, std::size_t sy, std::size_t sx) {
                        out.at(c, y, x) = image.at(c, sy, sx);
                      });
  }
  return out;
}

Mask transform_dihedral(const Mask& mask, unsigned quarter_turns, bool flip) {
  require_square(mask.height, mask.width);
  Mask out(mask.height, mask.width);
  for_each_dihedral(mask.height, quarter_turns, flip,
                    [&](std::size_t y, std::size_t x, std::size_t sy, std::size_t sx) {
                      out.at(y, x) = mask.at(sy, sx);
                    });
  return out;
}

}  // namespace lesionseg
