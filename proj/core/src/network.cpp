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

#include "lesionseg/network.hpp"

#include <algorithm>
#include <cmath>

#include "lesionseg/errors.hpp"
#include "lesionseg/random.hpp"

namespace lesionseg {

Network Network::build(const ArchSpec& spec, std::uint64_t seed) {
  spec.validate();
  Network net;
  net.spec_ = spec;
  net.seed_ = seed;
  Rng rng(seed);
  std::size_t c_in = spec.in_channels;
  for (const auto& ls : spec.layers) {
    Layer layer;
    layer.spec = ls;
    layer.conv.weight = Tensor4({ls.out_channels, c_in, ls.kernel, ls.kernel});
    layer.conv.stride = ls.stride;
    layer.conv.dilation = ls.dilation;
    layer.conv.padding = ls.padding;
    const double stddev = std::sqrt(2.0 / static_cast<double>(c_in * ls.kernel * ls.kernel));
    for (float& w : layer.conv.weight.data()) w = static_cast<float>(stddev * rng.normal());
    if (ls.batch_norm) {
      layer.bn = BatchNormParams::identity(ls.out_channels);
    } else {
      layer.conv.bias = Tensor4({1, ls.out_channels, 1, 1});
    }
    net.layers_.push_back(std::move(layer));
    c_in = ls.out_channels;
  }
  return net;
}

namespace {

template <typename Ref, typename Net>
std::vector<Ref> collect(Net& net, bool with_buffers) {
  std::vector<Ref> out;
  for (auto& l : net.layers()) {
    out.push_back({l.spec.name + ".weight", &l.conv.weight});
    if (l.conv.bias) out.push_back({l.spec.name + ".bias", &*l.conv.bias});
    if (l.bn) {
      out.push_back({l.spec.name + ".bn.gamma", &l.bn->gamma});
      out.push_back({l.spec.name + ".bn.beta", &l.bn->beta});
      if (with_buffers) {
        out.push_back({l.spec.name + ".bn.running_mean", &l.bn->running_mean});
        out.push_back({l.spec.name + ".bn.running_var", &l.bn->running_var});
      }
    }
  }
  return out;
}

}  // namespace

std::vector<ParamRef> Network::parameters() { return collect<ParamRef>(*this, false); }
std::vector<ConstParamRef> Network::parameters() const {
  return collect<ConstParamRef>(*this, false);
}
std::vector<ParamRef> Network::state() { return collect<ParamRef>(*this, true); }
std::vector<ConstParamRef> Network::state() const { return collect<ConstParamRef>(*this, true); }

std::size_t Network::parameter_count() const {
  std::size_t total = 0;
  for (const auto& p : parameters()) total += p.tensor->size();
  return total;
}

void Network::check_input(const Tensor4& x) const {
  const Shape& s = x.shape();
  if (s.c != spec_.in_channels || s.h != spec_.input_h || s.w != spec_.input_w) {
    throw ShapeError("network expects (n, " + std::to_string(spec_.in_channels) + ", " +
                     std::to_string(spec_.input_h) + ", " + std::to_string(spec_.input_w) +
                     ") input, got " + to_string(s));
  }
}

Tensor4 Network::run(const Tensor4& x, std::vector<Trace>* trace) {
  check_input(x);
  Tensor4 current = x;
  for (auto& layer : layers_) {
    Tensor4 z = conv2d_forward(current, layer.conv);
    Tensor4 y;
    if (layer.bn) {
      layer.bn->mode = Mode::Train;
      y = batchnorm_forward(z, *layer.bn);
    }
    const Tensor4& pre_act = layer.bn ? y : z;
    Tensor4 out = layer.spec.activation == Activation::Relu ? relu(pre_act) : pre_act;
    if (trace) {
      trace->push_back({std::move(current), std::move(z), std::move(y)});
    }
    current = std::move(out);
  }
  return pixel_shuffle(current, spec_.upsample);
}

Tensor4 Network::forward(const Tensor4& x, Mode mode) {
  if (mode == Mode::Infer) return infer(x);
  return run(x, nullptr);
}

Tensor4 Network::infer(const Tensor4& x) const {
  check_input(x);
  Tensor4 current = x;
  for (const auto& layer : layers_) {
    Tensor4 z = conv2d_forward(current, layer.conv);
    if (layer.bn) z = batchnorm_infer(z, *layer.bn);
    current = layer.spec.activation == Activation::Relu ? relu(z) : std::move(z);
  }
  return pixel_shuffle(current, spec_.upsample);
}

Network::StepResult Network::backward(const Tensor4& x, const Labels& labels,
                                      bool update_running_stats) {
  std::vector<Tensor4> saved;
  if (!update_running_stats) {
    for (auto& l : layers_) {
      if (!l.bn) continue;
      saved.push_back(l.bn->running_mean);
      saved.push_back(l.bn->running_var);
    }
  }

  std::vector<Trace> trace;
  trace.reserve(layers_.size());
  StepResult result;
  result.logits = run(x, &trace);
  XentResult xent = softmax_xent(result.logits, labels);
  result.loss = xent.loss;

  Tensor4 grad = pixel_unshuffle(xent.grad, spec_.upsample);
  xent.grad = Tensor4();
  for (std::size_t i = layers_.size(); i-- > 0;) {
    Layer& layer = layers_[i];
    Trace& t = trace[i];
    if (layer.spec.activation == Activation::Relu) {
      grad = relu_backward(layer.bn ? t.norm_out : t.conv_out, grad);
    }
    if (layer.bn) {
      BatchNormGrads bg = batchnorm_backward(t.conv_out, *layer.bn, grad);
      std::ranges::copy(bg.gamma.data(), layer.bn->gamma.grad().begin());
      std::ranges::copy(bg.beta.data(), layer.bn->beta.grad().begin());
      grad = std::move(bg.x);
    }
    ConvGrads cg = conv2d_backward(t.input, layer.conv, grad);
    std::ranges::copy(cg.weight.data(), layer.conv.weight.grad().begin());
    if (layer.conv.bias) std::ranges::copy(cg.bias->data(), layer.conv.bias->grad().begin());
    grad = std::move(cg.x);
    t = Trace{};
  }

  if (!update_running_stats) {
    std::size_t k = 0;
    for (auto& l : layers_) {
      if (!l.bn) continue;
      l.bn->running_mean = std::move(saved[k++]);
      l.bn->running_var = std::move(saved[k++]);
    }
  }
  return result;
}

void Network::zero_grad() {
  for (auto& p : parameters()) p.tensor->zero_grad();
}

}  // namespace lesionseg
