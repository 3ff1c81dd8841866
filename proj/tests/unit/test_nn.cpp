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


#include <gtest/gtest.h>

#include <cmath>
#include <cstdint>
#include <vector>

#include "gradcheck.hpp"
#include "lesionseg/errors.hpp"
#include "lesionseg/nn.hpp"
#include "lesionseg/random.hpp"
#include "reference.hpp"

namespace lesionseg {
namespace {

using testing::kGradSeeds;
using testing::kGradTolerance;
using testing::numeric_gradient;
using testing::random_tensor;
using testing::relative_error;

double weighted_sum(const ref::DTensor& out, const ref::DTensor& g) {
  double s = 0.0;
  for (std::size_t i = 0; i < out.v.size(); ++i) s += out.v[i] * g.v[i];
  return s;
}

ConvParams make_conv(Rng& rng, std::size_t cin, std::size_t cout, std::size_t k,
                     std::size_t stride, std::size_t rate, Padding padding, bool bias) {
  ConvParams p;
  p.weight = random_tensor({cout, cin, k, k}, rng, 0.5);
  if (bias) p.bias = random_tensor({1, cout, 1, 1}, rng, 0.5);
  p.stride = stride;
  p.dilation = rate;
  p.padding = padding;
  return p;
}

TEST(Pad, MirrorReflectsWithoutEdgeRepeat) {
  Tensor4 x({1, 1, 1, 4}, {1, 2, 3, 4});
  const Tensor4 y = pad(x, 0, 2, Padding::Mirror);
  const std::vector<float> expected{3, 2, 1, 2, 3, 4, 3, 2};
  ASSERT_EQ(y.shape(), (Shape{1, 1, 1, 8}));
  for (std::size_t i = 0; i < expected.size(); ++i) EXPECT_EQ(y[i], expected[i]);
}

TEST(Pad, ZeroFillsBorder) {
  Tensor4 x = Tensor4::filled({1, 1, 2, 2}, 5.0f);
  const Tensor4 y = pad(x, 1, 1, Padding::Zero);
  EXPECT_EQ(y.at(0, 0, 0, 0), 0.0f);
  EXPECT_EQ(y.at(0, 0, 1, 1), 5.0f);
  EXPECT_EQ(y.at(0, 0, 3, 3), 0.0f);
}

TEST(Pad, MirrorMarginAtLeastExtentRejected) {
  Tensor4 x({1, 1, 2, 5});
  EXPECT_THROW(pad(x, 2, 0, Padding::Mirror), PaddingError);
  EXPECT_NO_THROW(pad(x, 1, 4, Padding::Mirror));
  EXPECT_NO_THROW(pad(x, 2, 0, Padding::Zero));
}

TEST(Pad, BackwardMatchesFiniteDifferences) {
  for (int seed = 0; seed < kGradSeeds; ++seed) {
    for (Padding mode : {Padding::Mirror, Padding::Zero}) {
      Rng rng(100 + seed);
      const Tensor4 x = random_tensor({2, 2, 4, 5}, rng);
      const Tensor4 g = random_tensor({2, 2, 8, 7}, rng);
      const Tensor4 analytic = pad_backward(g, 2, 1, mode);
      ref::DTensor dx = ref::from(x);
      const ref::DTensor dg = ref::from(g);
      auto loss = [&] {
        ref::DTensor out({2, 2, 8, 7});
        for (std::size_t n = 0; n < 2; ++n)
          for (std::size_t c = 0; c < 2; ++c)
            for (long y = 0; y < 8; ++y)
              for (long xx = 0; xx < 7; ++xx)
                out.at(n, c, y, xx) =
                    ref::sample_padded(dx, n, c, y - 2, xx - 1, mode == Padding::Mirror);
        return weighted_sum(out, dg);
      };
      const auto numeric = numeric_gradient(dx.v, loss);
      EXPECT_LT(relative_error(analytic.data(), numeric), kGradTolerance) << "seed " << seed;
    }
  }
}

// Every combination of stride, rate, kernel and padding against the naive loop.
TEST(Conv2d, MatchesDirectLoopOracleOverFullGrid) {
  std::uint64_t seed = 0;
  for (std::size_t stride : {1u, 2u})
    for (std::size_t rate : {1u, 2u})
      for (std::size_t k : {1u, 3u, 5u})
        for (Padding padding : {Padding::Mirror, Padding::Zero})
          for (bool bias : {false, true}) {
            Rng rng(++seed);
            const ConvParams p = make_conv(rng, 3, 4, k, stride, rate, padding, bias);
            const Tensor4 x = random_tensor({2, 3, 11, 10}, rng);
            const Tensor4 y = conv2d_forward(x, p);
            std::vector<double> b;
            if (bias) b = ref::to_vector(*p.bias);
            const ref::DTensor expected = ref::conv(ref::from(x), ref::from(p.weight),
                                                    bias ? &b : nullptr, stride, rate,
                                                    padding == Padding::Mirror);
            ASSERT_EQ(y.shape(), expected.s);
            double worst = 0.0;
            for (std::size_t i = 0; i < y.size(); ++i)
              worst = std::max(worst, std::abs(y[i] - expected.v[i]));
            EXPECT_LE(worst, 1e-5) << "stride " << stride << " rate " << rate << " k " << k
                                   << " mirror " << (padding == Padding::Mirror);
          }
}

TEST(Conv2d, OutputShapeIsCeilOfInputOverStride) {
  ConvParams p;
  p.weight = Tensor4({8, 3, 3, 3});
  p.stride = 2;
  EXPECT_EQ(conv2d_output_shape({1, 3, 15, 16}, p), (Shape{1, 8, 8, 8}));
  p.stride = 1;
  EXPECT_EQ(conv2d_output_shape({1, 3, 15, 16}, p), (Shape{1, 8, 15, 16}));
}

TEST(Conv2d, RejectsChannelMismatchAndEvenKernels) {
  ConvParams p;
  p.weight = Tensor4({2, 3, 3, 3});
  EXPECT_THROW(conv2d_forward(Tensor4({1, 4, 5, 5}), p), ShapeError);
  p.weight = Tensor4({2, 3, 2, 2});
  EXPECT_THROW(conv2d_forward(Tensor4({1, 3, 5, 5}), p), ShapeError);
}

TEST(Conv2d, BackwardMatchesFiniteDifferences) {
  struct Case {
    std::size_t k, stride, rate;
    Padding padding;
  };
  const std::vector<Case> cases{{3, 1, 1, Padding::Mirror}, {5, 2, 1, Padding::Mirror},
                                {3, 1, 2, Padding::Mirror}, {1, 1, 1, Padding::Zero},
                                {3, 2, 2, Padding::Zero}};
  for (const Case& cs : cases) {
    for (int seed = 0; seed < kGradSeeds; ++seed) {
      Rng rng(1000 + seed);
      const ConvParams p = make_conv(rng, 2, 3, cs.k, cs.stride, cs.rate, cs.padding, true);
      const Tensor4 x = random_tensor({2, 2, 7, 6}, rng);
      const Shape os = conv2d_output_shape(x.shape(), p);
      const Tensor4 g = random_tensor(os, rng);
      const ConvGrads grads = conv2d_backward(x, p, g);

      ref::DTensor dx = ref::from(x);
      ref::DTensor dw = ref::from(p.weight);
      std::vector<double> db = ref::to_vector(*p.bias);
      const ref::DTensor dg = ref::from(g);
      auto loss = [&] {
        return weighted_sum(ref::conv(dx, dw, &db, cs.stride, cs.rate,
                                      cs.padding == Padding::Mirror),
                            dg);
      };
      const std::string where = "k " + std::to_string(cs.k) + " seed " + std::to_string(seed);
      EXPECT_LT(relative_error(grads.x.data(), numeric_gradient(dx.v, loss)), kGradTolerance)
          << where;
      EXPECT_LT(relative_error(grads.weight.data(), numeric_gradient(dw.v, loss)),
                kGradTolerance)
          << where;
      ASSERT_TRUE(grads.bias.has_value());
      EXPECT_LT(relative_error(grads.bias->data(), numeric_gradient(db, loss)), kGradTolerance)
          << where;
    }
  }
}

TEST(Relu, ForwardAndBackwardMatchDefinition) {
  for (int seed = 0; seed < kGradSeeds; ++seed) {
    Rng rng(2000 + seed);
    const Tensor4 x = testing::random_tensor_away_from_zero({2, 3, 4, 4}, rng, 0.01);
    const Tensor4 g = random_tensor(x.shape(), rng);
    const Tensor4 y = relu(x);
    for (std::size_t i = 0; i < x.size(); ++i) EXPECT_EQ(y[i], x[i] > 0 ? x[i] : 0.0f);
    const Tensor4 analytic = relu_backward(x, g);
    ref::DTensor dx = ref::from(x);
    const ref::DTensor dg = ref::from(g);
    auto loss = [&] { return weighted_sum(ref::relu(dx), dg); };
    EXPECT_LT(relative_error(analytic.data(), numeric_gradient(dx.v, loss)), kGradTolerance);
  }
}

TEST(Relu, GradientAtZeroIsZero) {
  const Tensor4 x({1, 1, 1, 2}, {0.0f, -0.0f});
  const Tensor4 g = Tensor4::filled(x.shape(), 1.0f);
  const Tensor4 dx = relu_backward(x, g);
  EXPECT_EQ(dx[0], 0.0f);
  EXPECT_EQ(dx[1], 0.0f);
}

BatchNormParams random_bn(Rng& rng, std::size_t c) {
  BatchNormParams p = BatchNormParams::identity(c);
  for (float& v : p.gamma.data()) v = static_cast<float>(1.0 + 0.3 * rng.normal());
  for (float& v : p.beta.data()) v = static_cast<float>(0.3 * rng.normal());
  return p;
}

TEST(BatchNorm, TrainForwardMatchesOracleAndUpdatesRunningStats) {
  Rng rng(7);
  BatchNormParams p = random_bn(rng, 3);
  const Tensor4 x = random_tensor({4, 3, 5, 5}, rng, 2.0);
  const Tensor4 y = batchnorm_forward(x, p);
  const ref::DTensor expected =
      ref::batchnorm(ref::from(x), ref::to_vector(p.gamma), ref::to_vector(p.beta), 1e-5);
  for (std::size_t i = 0; i < y.size(); ++i) EXPECT_NEAR(y[i], expected.v[i], 1e-5);

  for (std::size_t c = 0; c < 3; ++c) {
    double mean = 0.0, sq = 0.0;
    for (std::size_t n = 0; n < 4; ++n)
      for (std::size_t i = 0; i < 25; ++i) mean += x.plane(n, c)[i];
    mean /= 100.0;
    for (std::size_t n = 0; n < 4; ++n)
      for (std::size_t i = 0; i < 25; ++i) sq += (x.plane(n, c)[i] - mean) * (x.plane(n, c)[i] - mean);
    const double var = sq / 100.0;
    EXPECT_NEAR(p.running_mean[c], 0.1 * mean, 1e-6);
    EXPECT_NEAR(p.running_var[c], 0.9 + 0.1 * var, 1e-5);
  }
}

TEST(BatchNorm, InferUsesRunningStatsAndLeavesThemUntouched) {
  Rng rng(8);
  BatchNormParams p = random_bn(rng, 2);
  p.running_mean = Tensor4({1, 2, 1, 1}, {0.5f, -1.0f});
  p.running_var = Tensor4({1, 2, 1, 1}, {4.0f, 0.25f});
  p.mode = Mode::Infer;
  const Tensor4 x = random_tensor({2, 2, 3, 3}, rng);
  const Tensor4 y = batchnorm_forward(x, p);
  for (std::size_t n = 0; n < 2; ++n)
    for (std::size_t c = 0; c < 2; ++c)
      for (std::size_t i = 0; i < 9; ++i) {
        const double expected = p.gamma[c] * (x.plane(n, c)[i] - p.running_mean[c]) /
                                    std::sqrt(p.running_var[c] + 1e-5) +
                                p.beta[c];
        EXPECT_NEAR(y.plane(n, c)[i], expected, 1e-5);
      }
  EXPECT_EQ(p.running_mean[0], 0.5f);
  EXPECT_EQ(p.running_var[1], 0.25f);
  EXPECT_THROW(batchnorm_backward(x, p, y), StateError);
}

TEST(BatchNorm, BackwardMatchesFiniteDifferences) {
  for (int seed = 0; seed < kGradSeeds; ++seed) {
    Rng rng(3000 + seed);
    BatchNormParams p = random_bn(rng, 3);
    const Tensor4 x = random_tensor({3, 3, 4, 3}, rng, 1.5);
    const Tensor4 g = random_tensor(x.shape(), rng);
    const BatchNormGrads grads = batchnorm_backward(x, p, g);
    ref::DTensor dx = ref::from(x);
    std::vector<double> gamma = ref::to_vector(p.gamma);
    std::vector<double> beta = ref::to_vector(p.beta);
    const ref::DTensor dg = ref::from(g);
    auto loss = [&] { return weighted_sum(ref::batchnorm(dx, gamma, beta, 1e-5), dg); };
    EXPECT_LT(relative_error(grads.x.data(), numeric_gradient(dx.v, loss)), kGradTolerance)
        << "seed " << seed;
    EXPECT_LT(relative_error(grads.gamma.data(), numeric_gradient(gamma, loss)), kGradTolerance);
    EXPECT_LT(relative_error(grads.beta.data(), numeric_gradient(beta, loss)), kGradTolerance);
  }
}

TEST(BatchNorm, ConstantChannelStaysFinite) {
  BatchNormParams p = BatchNormParams::identity(1);
  const Tensor4 x = Tensor4::filled({2, 1, 3, 3}, 7.0f);
  const Tensor4 y = batchnorm_forward(x, p);
  for (float v : y.data()) EXPECT_EQ(v, 0.0f);
  const BatchNormGrads g = batchnorm_backward(x, p, Tensor4::filled(x.shape(), 1.0f));
  for (float v : g.x.data()) EXPECT_TRUE(std::isfinite(v));
}

TEST(PixelShuffle, MapsFourChannelsToTwoByTwo) {
  const Tensor4 x({1, 4, 1, 1}, {1, 2, 3, 4});
  const Tensor4 y = pixel_shuffle(x, 2);
  ASSERT_EQ(y.shape(), (Shape{1, 1, 2, 2}));
  EXPECT_EQ(y.at(0, 0, 0, 0), 1.0f);
  EXPECT_EQ(y.at(0, 0, 0, 1), 2.0f);
  EXPECT_EQ(y.at(0, 0, 1, 0), 3.0f);
  EXPECT_EQ(y.at(0, 0, 1, 1), 4.0f);
}

TEST(PixelShuffle, RoundTripIsBitExact) {
  for (std::size_t r : {1u, 2u, 4u}) {
    Rng rng(r);
    const Tensor4 x = random_tensor({2, 2 * r * r, 3, 5}, rng);
    const Tensor4 y = pixel_shuffle(x, r);
    EXPECT_EQ(y.shape(), (Shape{2, 2, 3 * r, 5 * r}));
    const Tensor4 back = pixel_unshuffle(y, r);
    ASSERT_EQ(back.shape(), x.shape());
    for (std::size_t i = 0; i < x.size(); ++i) EXPECT_EQ(back[i], x[i]);
    const Tensor4 again = pixel_shuffle(pixel_unshuffle(y, r), r);
    for (std::size_t i = 0; i < y.size(); ++i) EXPECT_EQ(again[i], y[i]);
  }
}

TEST(PixelShuffle, MatchesOracleAndRejectsBadChannels) {
  Rng rng(11);
  const Tensor4 x = random_tensor({1, 32, 3, 2}, rng);
  const Tensor4 y = pixel_shuffle(x, 4);
  const ref::DTensor expected = ref::pixel_shuffle(ref::from(x), 4);
  for (std::size_t i = 0; i < y.size(); ++i) EXPECT_EQ(y[i], expected.v[i]);
  EXPECT_THROW(pixel_shuffle(Tensor4({1, 6, 2, 2}), 2), ShapeError);
  EXPECT_THROW(pixel_unshuffle(Tensor4({1, 1, 3, 4}), 2), ShapeError);
}

TEST(PixelShuffle, UnshuffleIsTheGradientOfShuffle) {
  for (int seed = 0; seed < kGradSeeds; ++seed) {
    Rng rng(4000 + seed);
    const Tensor4 x = random_tensor({1, 8, 2, 3}, rng);
    const Tensor4 g = random_tensor({1, 2, 4, 6}, rng);
    const Tensor4 analytic = pixel_unshuffle(g, 2);
    ref::DTensor dx = ref::from(x);
    const ref::DTensor dg = ref::from(g);
    auto loss = [&] { return weighted_sum(ref::pixel_shuffle(dx, 2), dg); };
    EXPECT_LT(relative_error(analytic.data(), numeric_gradient(dx.v, loss)), kGradTolerance);
  }
}

TEST(SoftmaxXent, LossAndGradientMatchOracle) {
  for (int seed = 0; seed < kGradSeeds; ++seed) {
    Rng rng(5000 + seed);
    const Tensor4 z = random_tensor({2, 3, 3, 4}, rng, 2.0);
    Labels labels(2, 3, 4);
    for (auto& v : labels.values) v = static_cast<std::uint8_t>(rng.below(3));
    const XentResult r = softmax_xent(z, labels);
    ref::DTensor dz = ref::from(z);
    EXPECT_NEAR(r.loss, ref::xent(dz, labels), 1e-6);
    auto loss = [&] { return ref::xent(dz, labels); };
    EXPECT_LT(relative_error(r.grad.data(), numeric_gradient(dz.v, loss)), kGradTolerance);
  }
}

TEST(SoftmaxXent, StableForHugeLogitsAndRejectsBadLabels) {
  const Tensor4 z({1, 2, 1, 1}, {1000.0f, -1000.0f});
  Labels labels(1, 1, 1);
  labels.at(0, 0, 0) = 1;
  const XentResult r = softmax_xent(z, labels);
  EXPECT_NEAR(r.loss, 2000.0, 1e-3);
  EXPECT_TRUE(std::isfinite(r.grad[0]));
  labels.at(0, 0, 0) = 2;
  EXPECT_THROW(softmax_xent(z, labels), LabelError);
}

TEST(SoftmaxXent, UniformLogitsGiveLogC) {
  const Tensor4 z = Tensor4::zeros({2, 2, 4, 4});
  Labels labels(2, 4, 4);
  EXPECT_NEAR(softmax_xent(z, labels).loss, std::log(2.0), 1e-9);
}

TEST(Pad, RowExamples) {
  const Tensor4 x({1, 1, 1, 3}, {1, 2, 3});
  const Tensor4 m = pad(x, 0, 1, Padding::Mirror);
  const Tensor4 z = pad(x, 0, 1, Padding::Zero);
  const std::vector<float> em{2, 1, 2, 3, 2};
  const std::vector<float> ez{0, 1, 2, 3, 0};
  for (std::size_t i = 0; i < 5; ++i) {
    EXPECT_EQ(m[i], em[i]);
    EXPECT_EQ(z[i], ez[i]);
  }
  const Tensor4 same = pad(x, 0, 0, Padding::Mirror);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(same[i], x[i]);
}

TEST(Conv2d, IdentityKernelAndFirstLayerShape) {
  Rng rng(21);
  const Tensor4 x = random_tensor({1, 1, 3, 3}, rng);
  ConvParams p;
  p.weight = Tensor4::filled({1, 1, 1, 1}, 1.0f);
  p.bias = Tensor4::zeros({1, 1, 1, 1});
  const Tensor4 y = conv2d_forward(x, p);
  for (std::size_t i = 0; i < x.size(); ++i) EXPECT_EQ(y[i], x[i]);

  ConvParams first;
  first.weight = Tensor4({64, 3, 5, 5});
  first.stride = 2;
  first.padding = Padding::Mirror;
  EXPECT_EQ(conv2d_output_shape({1, 3, 448, 448}, first), (Shape{1, 64, 224, 224}));
}

TEST(Conv2d, ZeroUpstreamGradientGivesZeroGradients) {
  Rng rng(22);
  const ConvParams p = make_conv(rng, 2, 2, 3, 2, 1, Padding::Mirror, true);
  const Tensor4 x = random_tensor({1, 2, 6, 6}, rng);
  const ConvGrads g = conv2d_backward(x, p, Tensor4::zeros(conv2d_output_shape(x.shape(), p)));
  for (float v : g.x.data()) EXPECT_EQ(v, 0.0f);
  for (float v : g.weight.data()) EXPECT_EQ(v, 0.0f);
  for (float v : g.bias->data()) EXPECT_EQ(v, 0.0f);
}

TEST(Relu, Examples) {
  const Tensor4 y = relu(Tensor4({1, 1, 1, 3}, {-1, 0, 2}));
  EXPECT_EQ(y[0], 0.0f);
  EXPECT_EQ(y[1], 0.0f);
  EXPECT_EQ(y[2], 2.0f);
}

TEST(BatchNorm, TrainOutputHasUnitStatistics) {
  Rng rng(23);
  BatchNormParams p = BatchNormParams::identity(3);
  const Tensor4 x = random_tensor({4, 3, 6, 6}, rng, 3.0);
  const Tensor4 y = batchnorm_forward(x, p);
  for (std::size_t c = 0; c < 3; ++c) {
    double mean = 0.0, sq = 0.0;
    for (std::size_t n = 0; n < 4; ++n)
      for (std::size_t i = 0; i < 36; ++i) mean += y.plane(n, c)[i];
    mean /= 144.0;
    for (std::size_t n = 0; n < 4; ++n)
      for (std::size_t i = 0; i < 36; ++i) sq += (y.plane(n, c)[i] - mean) * (y.plane(n, c)[i] - mean);
    EXPECT_NEAR(mean, 0.0, 1e-5);
    EXPECT_NEAR(sq / 144.0, 1.0, 1e-3);
  }
}

TEST(BatchNorm, IdentityStatisticsInInferMode) {
  Rng rng(24);
  BatchNormParams p = BatchNormParams::identity(2);
  p.mode = Mode::Infer;
  const Tensor4 x = random_tensor({1, 2, 4, 4}, rng);
  const Tensor4 y = batchnorm_forward(x, p);
  for (std::size_t i = 0; i < x.size(); ++i) EXPECT_NEAR(y[i], x[i] / std::sqrt(1.0 + 1e-5), 1e-6);
}

TEST(BatchNorm, BackwardAlgebraicProperties) {
  Rng rng(25);
  BatchNormParams p = BatchNormParams::identity(2);
  const Tensor4 x = random_tensor({2, 2, 3, 3}, rng);
  const Tensor4 g = random_tensor(x.shape(), rng);
  const BatchNormGrads grads = batchnorm_backward(x, p, g);
  for (std::size_t c = 0; c < 2; ++c) {
    double sum = 0.0;
    for (std::size_t n = 0; n < 2; ++n)
      for (std::size_t i = 0; i < 9; ++i) sum += g.plane(n, c)[i];
    EXPECT_NEAR(grads.beta[c], sum, 1e-5);
  }
  const BatchNormGrads flat = batchnorm_backward(x, p, Tensor4::filled(x.shape(), 0.7f));
  for (std::size_t c = 0; c < 2; ++c) {
    double sum = 0.0;
    for (std::size_t n = 0; n < 2; ++n)
      for (std::size_t i = 0; i < 9; ++i) sum += flat.x.plane(n, c)[i];
    EXPECT_NEAR(sum, 0.0, 1e-5);
  }
}

TEST(PixelShuffle, SubpixelLayerShape) {
  EXPECT_EQ(pixel_shuffle(Tensor4({1, 32, 112, 112}), 4).shape(), (Shape{1, 2, 448, 448}));
}

TEST(SoftmaxXent, SaturatedMarginGivesNearZeroLoss) {
  Tensor4 z({1, 2, 2, 2});
  Labels labels(1, 2, 2);
  for (std::size_t i = 0; i < 4; ++i) {
    labels.values[i] = static_cast<std::uint8_t>(i % 2);
    z.at(0, i % 2, i / 2, i % 2) = 20.0f;
  }
  EXPECT_LT(softmax_xent(z, labels).loss, 1e-8);
}

}  // namespace
}  // namespace lesionseg
