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

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "lesionseg/network.hpp"
#include "lesionseg/tensor.hpp"

namespace lesionseg {

struct AdamConfig {
  float lr = 1e-3f;
  float beta1 = 0.9f;
  float beta2 = 0.999f;
  float epsilon = 1e-8f;
  /// Global gradient-norm clipping threshold; 0 disables clipping.
  float clip_norm = 0.0f;
};

/// Adam moments, keyed by parameter name in the order of the first step.
struct AdamState {
  AdamConfig config;
  std::uint64_t step = 0;
  std::vector<std::string> names;
  std::vector<Tensor4> m;
  std::vector<Tensor4> v;
};

/// One Adam update using the gradients stored in each parameter's grad
/// buffer:
///   m <- b1 m + (1-b1) g,  v <- b2 v + (1-b2) g^2,
///   p <- p - lr * m_hat / (sqrt(v_hat) + eps)
/// with bias-corrected m_hat, v_hat. Moment buffers are created on the
/// first call. Throws NumericalError naming the parameter if any gradient
/// is NaN/Inf (nothing is updated in that case) and ShapeError if the
/// parameter list does not match existing moments.
void adam_step(std::span<const ParamRef> params, AdamState& state);

}  // namespace lesionseg
