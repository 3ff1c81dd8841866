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

#include "lesionseg/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>

#include "lesionseg/errors.hpp"

namespace lesionseg {

namespace fs = std::filesystem;

bool Ellipse::contains(double x, double y) const {
  const double dx = x - cx;
  const double dy = y - cy;
  const double c = std::cos(theta);
  const double s = std::sin(theta);
  const double u = (dx * c + dy * s) / semi_a;
  const double v = (-dx * s + dy * c) / semi_b;
  return u * u + v * v <= 1.0;
}

namespace {

struct Rgb {
  double r, g, b;
};

Rgb random_colour(Rng& rng) {
  return {rng.uniform(20, 235), rng.uniform(20, 235), rng.uniform(20, 235)};
}

double distance(const Rgb& a, const Rgb& b) {
  return std::sqrt((a.r - b.r) * (a.r - b.r) + (a.g - b.g) * (a.g - b.g) + (a.b - b.b) * (a.b - b.b));
}

}  // namespace

SynthSample generate_synth_sample(std::size_t size, Rng& rng, bool distractors) {
  const double n = static_cast<double>(size);
  SynthSample out;
  Mask mask(size, size);
  Ellipse e;
  for (;;) {
    e.cx = rng.uniform(0.3, 0.7) * n;
    e.cy = rng.uniform(0.3, 0.7) * n;
    e.semi_a = rng.uniform(0.12, 0.45) * n;
    e.semi_b = rng.uniform(0.12, 0.45) * n;
    e.theta = rng.uniform(0.0, std::numbers::pi);
    std::size_t fg = 0;
    for (std::size_t y = 0; y < size; ++y)
      for (std::size_t x = 0; x < size; ++x) {
        const bool in = e.contains(static_cast<double>(x) + 0.5, static_cast<double>(y) + 0.5);
        mask.at(y, x) = in ? 1 : 0;
        fg += in;
      }
    const double fraction = static_cast<double>(fg) / (n * n);
    if (fraction >= kSynthMinForeground && fraction <= kSynthMaxForeground) break;
  }

  const Rgb background = random_colour(rng);
  Rgb foreground = random_colour(rng);
  while (distance(background, foreground) < 80.0) foreground = random_colour(rng);

  // Distractors: single pixels or 2x2 blocks outside the lesion.
  Mask dots(size, size);
  if (distractors) {
    const auto count = rng.below(4);
    for (std::uint64_t k = 0; k < count; ++k) {
      const std::size_t extent = rng.coin() ? 2 : 1;
      const std::size_t y0 = rng.below(size - 1);
      const std::size_t x0 = rng.below(size - 1);
      for (std::size_t dy = 0; dy < extent; ++dy)
        for (std::size_t dx = 0; dx < extent; ++dx)
          if (!mask.at(y0 + dy, x0 + dx)) dots.at(y0 + dy, x0 + dx) = 1;
    }
  }

  RawImage image{size, size, 3, std::vector<std::uint8_t>(size * size * 3)};
  for (std::size_t y = 0; y < size; ++y) {
    for (std::size_t x = 0; x < size; ++x) {
      const Rgb& base = (mask.at(y, x) || dots.at(y, x)) ? foreground : background;
      const double channel[3] = {base.r, base.g, base.b};
      for (std::size_t c = 0; c < 3; ++c) {
        const double v = channel[c] + kSynthNoiseSigma * rng.normal();
        image.pixels[(y * size + x) * 3 + c] =
            static_cast<std::uint8_t>(std::clamp(std::round(v), 0.0, 255.0));
      }
    }
  }
  out.image = std::move(image);
  out.mask = std::move(mask);
  out.ellipse = e;
  return out;
}

std::vector<SynthSample> gen_synth(const SynthOptions& options, const fs::path& out_dir) {
  if (options.size == 0 || options.size % 4 != 0) {
    throw ConfigError("synthetic image size must be a positive multiple of 4");
  }
  fs::create_directories(out_dir / "images");
  fs::create_directories(out_dir / "masks");
  std::ofstream csv(out_dir / "ellipses.csv", std::ios::trunc);
  if (!csv) throw DataError("cannot write " + (out_dir / "ellipses.csv").string());
  csv << "id,cx,cy,semi_a,semi_b,theta\n";

  Rng rng(options.seed);
  std::vector<SynthSample> samples;
  samples.reserve(options.count);
  for (std::size_t i = 0; i < options.count; ++i) {
    SynthSample s = generate_synth_sample(options.size, rng, options.distractors);
    char id[64];
    std::snprintf(id, sizeof id, "synth%llu_%04zu", static_cast<unsigned long long>(options.seed), i);
    s.id = id;
    write_png(out_dir / "images" / (s.id + ".png"), s.image);
    write_png(out_dir / "masks" / (s.id + "_segmentation.png"), mask_to_raw(s.mask));
    char line[256];
    std::snprintf(line, sizeof line, "%s,%.17g,%.17g,%.17g,%.17g,%.17g\n", s.id.c_str(), s.ellipse.cx,
                  s.ellipse.cy, s.ellipse.semi_a, s.ellipse.semi_b, s.ellipse.theta);
    csv << line;
    samples.push_back(std::move(s));
  }
  return samples;
}

}  // namespace lesionseg
