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
#include <optional>
#include <string>
#include <vector>

#include "lesionseg/arch.hpp"
#include "lesionseg/nn.hpp"
#include "lesionseg/tensor.hpp"

namespace lesionseg {

struct Layer {
  LayerSpec spec;
  ConvParams conv;
  std::optional<BatchNormParams> bn;
};

/// Named handle to a tensor owned by a Network.
struct ParamRef {
  std::string name;
  Tensor4* tensor;
};

struct ConstParamRef {
  std::string name;
  const Tensor4* tensor;
};

/// The assembled layer stack. Parameter tensors carry their gradients in
/// their own grad buffers after backward().
class Network {
 public:
  /// He-initialized network: weights ~ N(0, 2 / (c_in*kh*kw)), biases 0,
  /// gamma 1, beta 0, running statistics (0, 1). Throws SpecError.
  static Network build(const ArchSpec& spec, std::uint64_t seed);

  const ArchSpec& spec() const { return spec_; }
  std::uint64_t seed() const { return seed_; }
  std::vector<Layer>& layers() { return layers_; }
  const std::vector<Layer>& layers() const { return layers_; }

  /// Trainable tensors in layer order: weight, bias, bn.gamma, bn.beta.
  std::vector<ParamRef> parameters();
  std::vector<ConstParamRef> parameters() const;
  /// Every persisted tensor: trainable parameters plus batch-norm running
  /// statistics, in layer order.
  std::vector<ParamRef> state();
  std::vector<ConstParamRef> state() const;

  /// Number of trainable scalars.
  std::size_t parameter_count() const;

  /// Logits (n, num_classes, H, W). Train mode uses batch statistics and
  /// updates the running statistics; Infer mode is const in effect.
  Tensor4 forward(const Tensor4& x, Mode mode);
  Tensor4 infer(const Tensor4& x) const;

  struct StepResult {
    double loss = 0.0;
    Tensor4 logits;
  };

  /// Train-mode forward, per-pixel cross-entropy, and the reverse pass.
  /// Overwrites the grad buffer of every trainable parameter. With
  /// update_running_stats == false the running statistics are left as they
  /// were.
  StepResult backward(const Tensor4& x, const Labels& labels, bool update_running_stats = true);

  void zero_grad();

 private:
  struct Trace {
    Tensor4 input;
    Tensor4 conv_out;
    Tensor4 norm_out;  // empty when the layer has no batch norm
  };

  void check_input(const Tensor4& x) const;
  Tensor4 run(const Tensor4& x, std::vector<Trace>* trace);

  ArchSpec spec_;
  std::uint64_t seed_ = 0;
  std::vector<Layer> layers_;
};

}  // namespace lesionseg
