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
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace lesionseg {

/// Extents of a rank-4 (batch, channel, height, width) array.
struct Shape {
  std::size_t n = 0;
  std::size_t c = 0;
  std::size_t h = 0;
  std::size_t w = 0;

  /// Element count; throws ShapeError on overflow.
  std::size_t numel() const;
  std::size_t plane() const { return h * w; }
  std::size_t image() const { return c * h * w; }

  bool operator==(const Shape&) const = default;
};

std::string to_string(const Shape& s);

/// Dense float32 array in row-major (n, c, h, w) order with an optional,
/// lazily allocated gradient buffer of the same shape.
///
/// A default-constructed tensor is empty (all extents zero) and only serves
/// as a placeholder; every tensor built from a Shape has all extents >= 1.
class Tensor4 {
 public:
  Tensor4() = default;
  explicit Tensor4(const Shape& shape);
  Tensor4(const Shape& shape, std::vector<float> values);

  static Tensor4 zeros(const Shape& shape) { return Tensor4(shape); }
  static Tensor4 filled(const Shape& shape, float value);

  const Shape& shape() const { return shape_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  std::span<float> data() { return data_; }
  std::span<const float> data() const { return data_; }

  std::size_t index(std::size_t n, std::size_t c, std::size_t h, std::size_t w) const {
    return ((n * shape_.c + c) * shape_.h + h) * shape_.w + w;
  }
  float& at(std::size_t n, std::size_t c, std::size_t h, std::size_t w) {
    return data_[index(n, c, h, w)];
  }
  float at(std::size_t n, std::size_t c, std::size_t h, std::size_t w) const {
    return data_[index(n, c, h, w)];
  }
  float& operator[](std::size_t i) { return data_[i]; }
  float operator[](std::size_t i) const { return data_[i]; }

  /// Contiguous h*w plane of image n, channel c.
  float* plane(std::size_t n, std::size_t c) { return data_.data() + index(n, c, 0, 0); }
  const float* plane(std::size_t n, std::size_t c) const { return data_.data() + index(n, c, 0, 0); }

  bool has_grad() const { return grad_.has_value(); }
  /// Gradient buffer; allocated and zeroed on first access.
  std::span<float> grad();
  std::span<const float> grad() const;
  void zero_grad();
  void drop_grad() { grad_.reset(); }

  Tensor4 map(const std::function<float(float)>& f) const;

 private:
  Shape shape_;
  std::vector<float> data_;
  std::optional<std::vector<float>> grad_;
};

inline Tensor4 map_elementwise(const Tensor4& t, const std::function<float(float)>& f) {
  return t.map(f);
}

enum class Reduction { Mean, Variance };

/// Mean or population variance over the c*h*w elements of each batch item,
/// accumulated in double precision.
std::vector<double> reduce_per_image(const Tensor4& t, Reduction kind);

}  // namespace lesionseg
