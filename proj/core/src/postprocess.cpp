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

#include "lesionseg/postprocess.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <string>

#include "lesionseg/errors.hpp"

namespace lesionseg {

void PostprocConfig::validate() const {
  if (threshold < 0 || threshold > 255) {
    throw ConfigError("threshold must lie in [0, 255], got " + std::to_string(threshold));
  }
}

ByteMap prob_to_bytemap(const Tensor4& logits, std::size_t index) {
  const Shape& s = logits.shape();
  if (s.c != 2) throw ShapeError("expected 2-channel logits, got " + to_string(s));
  if (index >= s.n) throw ShapeError("batch index out of range");
  ByteMap out(s.h, s.w);
  const float* background = logits.plane(index, 1 - kLesionChannel);
  const float* lesion = logits.plane(index, kLesionChannel);
  for (std::size_t i = 0; i < s.plane(); ++i) {
    // softmax over two classes is the logistic of the difference
    const double p = 1.0 / (1.0 + std::exp(static_cast<double>(background[i]) - lesion[i]));
    out.values[i] = static_cast<std::uint8_t>(std::floor(255.0 * p + 0.5));
  }
  return out;
}

double cubic_weight(double t) {
  constexpr double a = -0.5;
  t = std::abs(t);
  if (t <= 1.0) return ((a + 2.0) * t - (a + 3.0)) * t * t + 1.0;
  if (t < 2.0) return ((a * t - 5.0 * a) * t + 8.0 * a) * t - 4.0 * a;
  return 0.0;
}

namespace {

struct CubicTaps {
  std::array<std::size_t, 4> index;
  std::array<double, 4> weight;
};

std::vector<CubicTaps> cubic_taps(std::size_t src, std::size_t dst) {
  std::vector<CubicTaps> taps(dst);
  const double scale = static_cast<double>(src) / static_cast<double>(dst);
  const auto last = static_cast<std::ptrdiff_t>(src) - 1;
  for (std::size_t i = 0; i < dst; ++i) {
    const double s = (static_cast<double>(i) + 0.5) * scale - 0.5;
    const double base = std::floor(s);
    const double frac = s - base;
    for (int k = 0; k < 4; ++k) {
      const auto j = static_cast<std::ptrdiff_t>(base) - 1 + k;
      taps[i].index[k] = static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(j, 0, last));
      taps[i].weight[k] = cubic_weight(frac - (k - 1));
    }
  }
  return taps;
}

void require_binary(const Mask& mask) {
  for (std::uint8_t v : mask.values) {
    if (v > 1) throw ContractError("morphology expects a binary {0,1} mask");
  }
}

}  // namespace

ByteMap resize_bicubic(const ByteMap& map, std::size_t height, std::size_t width) {
  if (height == 0 || width == 0) throw ShapeError("resize target must be at least 1x1");
  if (height == map.height && width == map.width) return map;
  const auto tx = cubic_taps(map.width, width);
  const auto ty = cubic_taps(map.height, height);

  std::vector<double> rows(map.height * width);
  for (std::size_t y = 0; y < map.height; ++y) {
    const std::uint8_t* src = map.values.data() + y * map.width;
    double* dst = rows.data() + y * width;
    for (std::size_t x = 0; x < width; ++x) {
      const CubicTaps& t = tx[x];
      dst[x] = t.weight[0] * src[t.index[0]] + t.weight[1] * src[t.index[1]] +
               t.weight[2] * src[t.index[2]] + t.weight[3] * src[t.index[3]];
    }
  }
  ByteMap out(height, width);
  for (std::size_t y = 0; y < height; ++y) {
    const CubicTaps& t = ty[y];
    const double* r0 = rows.data() + t.index[0] * width;
    const double* r1 = rows.data() + t.index[1] * width;
    const double* r2 = rows.data() + t.index[2] * width;
    const double* r3 = rows.data() + t.index[3] * width;
    std::uint8_t* dst = out.values.data() + y * width;
    for (std::size_t x = 0; x < width; ++x) {
      const double v =
          t.weight[0] * r0[x] + t.weight[1] * r1[x] + t.weight[2] * r2[x] + t.weight[3] * r3[x];
      dst[x] = static_cast<std::uint8_t>(std::floor(std::clamp(v, 0.0, 255.0) + 0.5));
    }
  }
  return out;
}

Mask binarize(const ByteMap& map, int threshold) {
  Mask out(map.height, map.width);
  std::ranges::transform(map.values, out.values.begin(), [threshold](std::uint8_t v) {
    return static_cast<std::uint8_t>(v >= threshold ? 1 : 0);
  });
  return out;
}

Mask erode(const Mask& mask, ErosionBorder border) {
  require_binary(mask);
  const std::size_t h = mask.height;
  const std::size_t w = mask.width;
  const std::uint8_t outside = border == ErosionBorder::Background ? 0 : 1;
  Mask out(h, w);
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      if (!mask.at(y, x)) continue;
      const std::uint8_t up = y > 0 ? mask.at(y - 1, x) : outside;
      const std::uint8_t down = y + 1 < h ? mask.at(y + 1, x) : outside;
      const std::uint8_t left = x > 0 ? mask.at(y, x - 1) : outside;
      const std::uint8_t right = x + 1 < w ? mask.at(y, x + 1) : outside;
      out.at(y, x) = up & down & left & right;
    }
  }
  return out;
}

Mask dilate(const Mask& mask) {
  require_binary(mask);
  const std::size_t h = mask.height;
  const std::size_t w = mask.width;
  Mask out(h, w);
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      std::uint8_t v = mask.at(y, x);
      if (y > 0) v |= mask.at(y - 1, x);
      if (y + 1 < h) v |= mask.at(y + 1, x);
      if (x > 0) v |= mask.at(y, x - 1);
      if (x + 1 < w) v |= mask.at(y, x + 1);
      out.at(y, x) = v;
    }
  }
  return out;
}

Mask morph_open(const Mask& mask, ErosionBorder border) { return dilate(erode(mask, border)); }

Mask postprocess(const Tensor4& logits, std::size_t index, std::size_t original_h,
                 std::size_t original_w, const PostprocConfig& config) {
  config.validate();
  const ByteMap probs = resize_bicubic(prob_to_bytemap(logits, index), original_h, original_w);
  Mask mask = binarize(probs, config.threshold);
  if (config.opening_enabled) mask = morph_open(mask, config.border);
  return mask;
}

}  // namespace lesionseg
