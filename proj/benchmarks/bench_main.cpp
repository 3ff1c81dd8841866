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


#include <benchmark/benchmark.h>

#include <cstdint>
#include <vector>

#include "lesionseg/network.hpp"
#include "lesionseg/nn.hpp"
#include "lesionseg/optim.hpp"
#include "lesionseg/postprocess.hpp"
#include "lesionseg/random.hpp"

namespace {

using namespace lesionseg;

Tensor4 random_tensor(const Shape& s, std::uint64_t seed) {
  Rng rng(seed);
  Tensor4 t(s);
  for (float& v : t.data()) v = static_cast<float>(rng.normal());
  return t;
}

ConvParams conv_params(std::size_t cin, std::size_t cout, std::size_t k, std::size_t stride,
                       std::size_t rate, Padding padding) {
  ConvParams p;
  p.weight = random_tensor({cout, cin, k, k}, 1);
  p.stride = stride;
  p.dilation = rate;
  p.padding = padding;
  return p;
}

// Args: spatial size, kernel, rate.
void BM_ConvForward(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto k = static_cast<std::size_t>(state.range(1));
  const auto rate = static_cast<std::size_t>(state.range(2));
  const ConvParams p = conv_params(64, 64, k, 1, rate, k == 1 ? Padding::Zero : Padding::Mirror);
  const Tensor4 x = random_tensor({4, 64, n, n}, 2);
  for (auto _ : state) benchmark::DoNotOptimize(conv2d_forward(x, p));
  state.SetItemsProcessed(state.iterations() * 4 * n * n * 64 * 64 * k * k);
}
BENCHMARK(BM_ConvForward)->Args({32, 1, 1})->Args({32, 3, 1})->Args({32, 3, 2})->Args({64, 3, 1})
    ->Unit(benchmark::kMillisecond);

void BM_ConvBackward(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto k = static_cast<std::size_t>(state.range(1));
  const ConvParams p = conv_params(64, 64, k, 1, 1, k == 1 ? Padding::Zero : Padding::Mirror);
  const Tensor4 x = random_tensor({4, 64, n, n}, 3);
  const Tensor4 g = random_tensor({4, 64, n, n}, 4);
  for (auto _ : state) benchmark::DoNotOptimize(conv2d_backward(x, p, g));
}
BENCHMARK(BM_ConvBackward)->Args({32, 1})->Args({32, 3})->Unit(benchmark::kMillisecond);

void BM_NetworkTrainStep(benchmark::State& state) {
  const auto size = static_cast<std::size_t>(state.range(0));
  const auto batch = static_cast<std::size_t>(state.range(1));
  Network net = Network::build(ArchSpec::lesionseg(size, size), 5);
  const Tensor4 x = random_tensor({batch, 3, size, size}, 6);
  Labels labels(batch, size, size);
  for (std::size_t i = 0; i < labels.values.size(); ++i) labels.values[i] = (i / 7) % 2;
  AdamState adam;
  for (auto _ : state) {
    benchmark::DoNotOptimize(net.backward(x, labels).loss);
    adam_step(net.parameters(), adam);
  }
}
BENCHMARK(BM_NetworkTrainStep)->Args({64, 8})->Args({64, 32})->Unit(benchmark::kMillisecond);

void BM_NetworkInfer(benchmark::State& state) {
  const auto size = static_cast<std::size_t>(state.range(0));
  const Network net = Network::build(ArchSpec::lesionseg(size, size), 7);
  const Tensor4 x = random_tensor({1, 3, size, size}, 8);
  for (auto _ : state) benchmark::DoNotOptimize(net.infer(x));
}
BENCHMARK(BM_NetworkInfer)->Arg(64)->Arg(448)->Unit(benchmark::kMillisecond);

void BM_ResizeBicubic(benchmark::State& state) {
  ByteMap m(448, 448);
  Rng rng(9);
  for (auto& v : m.values) v = static_cast<std::uint8_t>(rng.below(256));
  const auto h = static_cast<std::size_t>(state.range(0));
  const auto w = static_cast<std::size_t>(state.range(1));
  for (auto _ : state) benchmark::DoNotOptimize(resize_bicubic(m, h, w));
  state.SetItemsProcessed(state.iterations() * h * w);
}
BENCHMARK(BM_ResizeBicubic)->Args({767, 1022})->Args({4439, 6688})->Unit(benchmark::kMillisecond);

void BM_MorphOpen(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  Mask m(n, n);
  Rng rng(10);
  for (auto& v : m.values) v = rng.uniform() < 0.7;
  for (auto _ : state) benchmark::DoNotOptimize(morph_open(m));
  state.SetItemsProcessed(state.iterations() * n * n);
}
BENCHMARK(BM_MorphOpen)->Arg(448)->Arg(4096)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
