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
#include <filesystem>
#include <string>
#include <vector>

#include "lesionseg/image.hpp"
#include "lesionseg/image_io.hpp"
#include "lesionseg/random.hpp"

namespace lesionseg {

/// Filled ellipse in pixel coordinates; pixel (x, y) is sampled at its
/// centre (x + 0.5, y + 0.5).
struct Ellipse {
  double cx = 0;
  double cy = 0;
  double semi_a = 1;
  double semi_b = 1;
  double theta = 0;

  bool contains(double x, double y) const;
};

struct SynthSample {
  std::string id;
  RawImage image;
  Mask mask;
  Ellipse ellipse;
};

inline constexpr double kSynthMinForeground = 0.05;
inline constexpr double kSynthMaxForeground = 0.6;
inline constexpr double kSynthNoiseSigma = 10.0;

/// One size x size sample: a random filled ellipse (foreground fraction in
/// [0.05, 0.6]) on a contrasting background, Gaussian pixel noise with
/// sigma 10, and optionally up to three tiny foreground-coloured distractor
/// dots that are not part of the mask.
SynthSample generate_synth_sample(std::size_t size, Rng& rng, bool distractors = true);

struct SynthOptions {
  std::size_t count = 0;
  std::size_t size = 64;
  std::uint64_t seed = 0;
  bool distractors = true;
};

/// Writes out_dir/images/<id>.png, out_dir/masks/<id>_segmentation.png and
/// out_dir/ellipses.csv (id,cx,cy,semi_a,semi_b,theta). Ids are
/// "synth<seed>_<index>", so datasets from different seeds never share ids.
/// Throws ConfigError unless size is a positive multiple of 4.
std::vector<SynthSample> gen_synth(const SynthOptions& options, const std::filesystem::path& out_dir);

}  // namespace lesionseg
