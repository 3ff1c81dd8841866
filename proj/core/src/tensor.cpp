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

#include "lesionseg/tensor.hpp"

#include <algorithm>
#include <limits>

#include "lesionseg/errors.hpp"

namespace lesionseg {

namespace {

std::size_t checked_mul(std::size_t a, std::size_t b) {
  if (a != 0 && b > std::numeric_limits<std::size_t>::max() / a) {
    throw ShapeError("tensor shape overflows size_t");
  }
  return a * b;
}

}  // namespace

std::size_t Shape::numel() const {
  return checked_mul(checked_mul(checked_mul(n, c), h), w);
}

std::string to_string(const Shape& s) {
  return std::to_string(s.n) + "x" + std::to_string(s.c) + "x" + std::to_string(s.h) + "x" +
         std::to_string(s.w);
}

Tensor4::Tensor4(const Shape& shape) : shape_(shape) {
  if (shape.n == 0 || shape.c == 0 || shape.h == 0 || shape.w == 0) {
    throw ShapeError("tensor dimensions must be >= 1, got " + to_string(shape));
  }
  data_.assign(shape.numel(), 0.0f);
}

Tensor4::Tensor4(const Shape& shape, std::vector<float> values) : Tensor4(shape) {
  if (values.size() != data_.size()) {
    throw ShapeError("value count " + std::to_string(values.size()) + " does not match shape " +
                     to_string(shape));
  }
  data_ = std::move(values);
}

Tensor4 Tensor4::filled(const Shape& shape, float value) {
  Tensor4 t(shape);
  std::fill(t.data_.begin(), t.data_.end(), value);
  return t;
}

std::span<float> Tensor4::grad() {
  if (!grad_) grad_.emplace(data_.size(), 0.0f);
  return *grad_;
}

std::span<const float> Tensor4::grad() const {
  if (!grad_) return {};
  return *grad_;
}

void Tensor4::zero_grad() {
  if (grad_) std::fill(grad_->begin(), grad_->end(), 0.0f);
}

Tensor4 Tensor4::map(const std::function<float(float)>& f) const {
  Tensor4 out;
  out.shape_ = shape_;
  out.data_.resize(data_.size());
  for (std::size_t i = 0; i < data_.size(); ++i) out.data_[i] = f(data_[i]);
  return out;
}

std::vector<double> reduce_per_image(const Tensor4& t, Reduction kind) {
  const auto& s = t.shape();
  const std::size_t count = s.image();
  std::vector<double> out(s.n, 0.0);
  auto values = t.data();
  for (std::size_t n = 0; n < s.n; ++n) {
    const float* p = values.data() + n * count;
    double sum = 0.0;
    for (std::size_t i = 0; i < count; ++i) sum += p[i];
    const double mean = sum / static_cast<double>(count);
    if (kind == Reduction::Mean) {
      out[n] = mean;
      continue;
    }
    double sq = 0.0;
    for (std::size_t i = 0; i < count; ++i) {
      const double d = p[i] - mean;
      sq += d * d;
    }
    out[n] = sq / static_cast<double>(count);
  }
  return out;
}

}  // namespace lesionseg
