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

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "lesionseg/random.hpp"
#include "lesionseg/tensor.hpp"

namespace lesionseg::testing {

inline constexpr double kFdStep = 1e-3;
// Whole-network replays cross ReLU kinks at 1e-3; 1e-5 stays on one linear piece.
inline constexpr double kNetworkFdStep = 1e-5;
inline constexpr double kGradTolerance = 1e-3;
inline constexpr int kGradSeeds = 20;

/// ||a - b|| / max(||a||, ||b||), the relative error of a gradient tensor.
inline double relative_error(std::span<const double> a, std::span<const double> b) {
  double diff = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    diff += (a[i] - b[i]) * (a[i] - b[i]);
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  const double scale = std::max({std::sqrt(na), std::sqrt(nb), 1e-12});
  return std::sqrt(diff) / scale;
}

inline double relative_error(std::span<const float> analytic, std::span<const double> numeric) {
  std::vector<double> a(analytic.begin(), analytic.end());
  return relative_error(std::span<const double>(a), numeric);
}

/// Central differences of f with respect to every entry of `values`.
inline std::vector<double> numeric_gradient(std::vector<double>& values,
                                            const std::function<double()>& f,
                                            double step = kFdStep) {
  std::vector<double> grad(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double saved = values[i];
    values[i] = saved + step;
    const double plus = f();
    values[i] = saved - step;
    const double minus = f();
    values[i] = saved;
    grad[i] = (plus - minus) / (2.0 * step);
  }
  return grad;
}

inline Tensor4 random_tensor(const Shape& s, Rng& rng, double scale = 1.0) {
  Tensor4 t(s);
  for (float& v : t.data()) v = static_cast<float>(scale * rng.normal());
  return t;
}

/// Random values bounded away from zero (|v| >= margin), for kinked ops.
inline Tensor4 random_tensor_away_from_zero(const Shape& s, Rng& rng, double margin) {
  Tensor4 t(s);
  for (float& v : t.data()) {
    double r = rng.normal();
    while (std::abs(r) < margin) r = rng.normal();
    v = static_cast<float>(r);
  }
  return t;
}

}  // namespace lesionseg::testing
