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
#include <vector>

#include "lesionseg/image.hpp"

namespace lesionseg {

/// Interleaved 8-bit raster (row-major, channels innermost).
struct RawImage {
  std::size_t width = 0;
  std::size_t height = 0;
  std::size_t channels = 0;
  std::vector<std::uint8_t> pixels;
};

/// Decodes a PNG or JPEG file (detected by signature) into `channels`
/// channels (1 = grey, 3 = RGB); libpng/libjpeg perform the colour
/// conversion. Throws DataError naming the file.
RawImage read_image(const std::filesystem::path& path, std::size_t channels);

std::vector<std::uint8_t> encode_png(const RawImage& image);
void write_png(const std::filesystem::path& path, const RawImage& image);
void write_jpeg(const std::filesystem::path& path, const RawImage& image, int quality = 95);

/// Interleaved bytes -> planar float image in [0, 255].
Image to_image(const RawImage& raw);
/// Planar float image -> interleaved bytes, rounded and clamped.
RawImage to_raw(const Image& image);
/// {0,1} mask -> single-channel {0,255} raster.
RawImage mask_to_raw(const Mask& mask);
RawImage bytemap_to_raw(const ByteMap& map);
/// Single-channel raster -> binary mask, value >= threshold is foreground.
Mask raw_to_mask(const RawImage& raw, std::uint8_t threshold = 128);

}  // namespace lesionseg
