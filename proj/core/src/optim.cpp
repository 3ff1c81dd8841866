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

#include "lesionseg/optim.hpp"

#include <cmath>

#include "lesionseg/errors.hpp"

namespace lesionseg {

namespace {

void ensure_moments(std::span<const ParamRef> params, AdamState& state) {
  if (state.names.empty() && state.step == 0) {
    for (const auto& p : params) {
      state.names.push_back(p.name);
      state.m.emplace_back(p.tensor->shape());
      state.v.emplace_back(p.tensor->shape());
    }
    return;
  }
  if (state.names.size() != params.size()) {
    throw ShapeError("optimizer tracks " + std::to_string(state.names.size()) +
                     " parameters, got " + std::to_string(params.size()));
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (state.names[i] != params[i].name || state.m[i].shape() != params[i].tensor->shape() ||
        state.v[i].shape() != params[i].tensor->shape()) {
      throw ShapeError("optimizer state for " + state.names[i] + " does not match parameter " +
                       params[i].name);
    }
  }
}

}  // namespace

void adam_step(std::span<const ParamRef> params, AdamState& state) {
  double sq_norm = 0.0;
  for (const auto& p : params) {
    for (float g : p.tensor->grad()) {
      if (!std::isfinite(g)) {
        throw NumericalError("non-finite gradient in parameter " + p.name);
      }
      sq_norm += static_cast<double>(g) * g;
    }
  }
  ensure_moments(params, state);

  const AdamConfig& cfg = state.config;
  double grad_scale = 1.0;
  if (cfg.clip_norm > 0.0f) {
    const double norm = std::sqrt(sq_norm);
    if (norm > cfg.clip_norm) grad_scale = cfg.clip_norm / norm;
  }

  state.step += 1;
  const double t = static_cast<double>(state.step);
  const double b1 = cfg.beta1;
  const double b2 = cfg.beta2;
  const double correction1 = 1.0 - std::pow(b1, t);
  const double correction2 = 1.0 - std::pow(b2, t);
  const double lr = cfg.lr;
  const double eps = cfg.epsilon;

  for (std::size_t i = 0; i < params.size(); ++i) {
    auto values = params[i].tensor->data();
    auto grads = params[i].tensor->grad();
    auto m = state.m[i].data();
    auto v = state.v[i].data();
    for (std::size_t k = 0; k < values.size(); ++k) {
      const double g = grads[k] * grad_scale;
      const double mk = b1 * m[k] + (1.0 - b1) * g;
      const double vk = b2 * v[k] + (1.0 - b2) * g * g;
      m[k] = static_cast<float>(mk);
      v[k] = static_cast<float>(vk);
      const double m_hat = mk / correction1;
      const double v_hat = vk / correction2;
      values[k] = static_cast<float>(values[k] - lr * m_hat / (std::sqrt(v_hat) + eps));
    }
  }
}

}  // namespace lesionseg
