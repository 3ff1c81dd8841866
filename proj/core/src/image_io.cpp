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

#include "lesionseg/image_io.hpp"

#include <png.h>
// jpeglib.h needs FILE and size_t declared first.
#include <cstdio>
#include <jpeglib.h>

#include <algorithm>
#include <cmath>
#include <csetjmp>
#include <cstdlib>
#include <fstream>
#include <iterator>
#include <string>

#include "lesionseg/errors.hpp"

namespace lesionseg {

namespace {

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw DataError("failed writing " + path.string());
}

bool is_png(const std::vector<std::uint8_t>& b) {
  return b.size() >= 8 && png_sig_cmp(b.data(), 0, 8) == 0;
}

bool is_jpeg(const std::vector<std::uint8_t>& b) {
  return b.size() >= 3 && b[0] == 0xFF && b[1] == 0xD8 && b[2] == 0xFF;
}

RawImage decode_png(const std::vector<std::uint8_t>& bytes, std::size_t channels,
                    const std::filesystem::path& path) {
  png_image img{};
  img.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&img, bytes.data(), bytes.size())) {
    throw DataError("cannot decode PNG " + path.string() + ": " + img.message);
  }
  img.format = channels == 1 ? PNG_FORMAT_GRAY : PNG_FORMAT_RGB;
  RawImage out{img.width, img.height, channels, {}};
  out.pixels.resize(PNG_IMAGE_SIZE(img));
  if (!png_image_finish_read(&img, nullptr, out.pixels.data(), 0, nullptr)) {
    const std::string message = img.message;
    png_image_free(&img);
    throw DataError("cannot decode PNG " + path.string() + ": " + message);
  }
  return out;
}

struct JpegError {
  jpeg_error_mgr mgr;
  std::jmp_buf jump;
  char message[JMSG_LENGTH_MAX];
};

void jpeg_error_exit(j_common_ptr cinfo) {
  auto* err = reinterpret_cast<JpegError*>(cinfo->err);
  (*cinfo->err->format_message)(cinfo, err->message);
  std::longjmp(err->jump, 1);
}

// Returns false with err->message set on failure. No objects with
// destructors live in this frame, so longjmp is safe here.
bool decode_jpeg_into(const std::vector<std::uint8_t>& bytes, J_COLOR_SPACE space,
                      RawImage* out, JpegError* err) {
  jpeg_decompress_struct cinfo;
  cinfo.err = jpeg_std_error(&err->mgr);
  err->mgr.error_exit = jpeg_error_exit;
  if (setjmp(err->jump)) {
    jpeg_destroy_decompress(&cinfo);
    return false;
  }
  jpeg_create_decompress(&cinfo);
  jpeg_mem_src(&cinfo, bytes.data(), static_cast<unsigned long>(bytes.size()));
  jpeg_read_header(&cinfo, TRUE);
  cinfo.out_color_space = space;
  jpeg_start_decompress(&cinfo);
  out->width = cinfo.output_width;
  out->height = cinfo.output_height;
  out->channels = static_cast<std::size_t>(cinfo.output_components);
  out->pixels.resize(out->width * out->height * out->channels);
  while (cinfo.output_scanline < cinfo.output_height) {
    JSAMPROW row = out->pixels.data() + cinfo.output_scanline * out->width * out->channels;
    jpeg_read_scanlines(&cinfo, &row, 1);
  }
  jpeg_finish_decompress(&cinfo);
  jpeg_destroy_decompress(&cinfo);
  return true;
}

bool encode_jpeg_into(const RawImage& image, int quality, std::vector<std::uint8_t>* out,
                      JpegError* err) {
  jpeg_compress_struct cinfo;
  unsigned char* buffer = nullptr;
  unsigned long size = 0;
  cinfo.err = jpeg_std_error(&err->mgr);
  err->mgr.error_exit = jpeg_error_exit;
  if (setjmp(err->jump)) {
    jpeg_destroy_compress(&cinfo);
    std::free(buffer);
    return false;
  }
  jpeg_create_compress(&cinfo);
  jpeg_mem_dest(&cinfo, &buffer, &size);
  cinfo.image_width = static_cast<JDIMENSION>(image.width);
  cinfo.image_height = static_cast<JDIMENSION>(image.height);
  cinfo.input_components = static_cast<int>(image.channels);
  cinfo.in_color_space = image.channels == 1 ? JCS_GRAYSCALE : JCS_RGB;
  jpeg_set_defaults(&cinfo);
  jpeg_set_quality(&cinfo, quality, TRUE);
  jpeg_start_compress(&cinfo, TRUE);
  while (cinfo.next_scanline < cinfo.image_height) {
    JSAMPROW row = const_cast<JSAMPROW>(image.pixels.data() +
                                        cinfo.next_scanline * image.width * image.channels);
    jpeg_write_scanlines(&cinfo, &row, 1);
  }
  jpeg_finish_compress(&cinfo);
  out->assign(buffer, buffer + size);
  jpeg_destroy_compress(&cinfo);
  std::free(buffer);
  return true;
}

void check_raw(const RawImage& image) {
  if (image.width == 0 || image.height == 0 || (image.channels != 1 && image.channels != 3) ||
      image.pixels.size() != image.width * image.height * image.channels) {
    throw DataError("invalid raster for encoding");
  }
}

}  // namespace

RawImage read_image(const std::filesystem::path& path, std::size_t channels) {
  if (channels != 1 && channels != 3) throw DataError("channels must be 1 or 3");
  const auto bytes = read_file(path);
  if (is_png(bytes)) return decode_png(bytes, channels, path);
  if (is_jpeg(bytes)) {
    RawImage out;
    JpegError err{};
    if (!decode_jpeg_into(bytes, channels == 1 ? JCS_GRAYSCALE : JCS_RGB, &out, &err)) {
      throw DataError("cannot decode JPEG " + path.string() + ": " + err.message);
    }
    return out;
  }
  throw DataError("unsupported or corrupt image file " + path.string());
}

std::vector<std::uint8_t> encode_png(const RawImage& image) {
  check_raw(image);
  png_image img{};
  img.version = PNG_IMAGE_VERSION;
  img.width = static_cast<png_uint_32>(image.width);
  img.height = static_cast<png_uint_32>(image.height);
  img.format = image.channels == 1 ? PNG_FORMAT_GRAY : PNG_FORMAT_RGB;
  png_alloc_size_t size = 0;
  if (!png_image_write_get_memory_size(img, size, 0, image.pixels.data(), 0, nullptr)) {
    throw DataError(std::string("PNG encoding failed: ") + img.message);
  }
  std::vector<std::uint8_t> out(size);
  if (!png_image_write_to_memory(&img, out.data(), &size, 0, image.pixels.data(), 0, nullptr)) {
    throw DataError(std::string("PNG encoding failed: ") + img.message);
  }
  out.resize(size);
  return out;
}

void write_png(const std::filesystem::path& path, const RawImage& image) {
  write_file(path, encode_png(image));
}

void write_jpeg(const std::filesystem::path& path, const RawImage& image, int quality) {
  check_raw(image);
  std::vector<std::uint8_t> bytes;
  JpegError err{};
  if (!encode_jpeg_into(image, quality, &bytes, &err)) {
    throw DataError("JPEG encoding failed for " + path.string() + ": " + err.message);
  }
  write_file(path, bytes);
}

Image to_image(const RawImage& raw) {
  Image out(raw.channels, raw.height, raw.width);
  for (std::size_t y = 0; y < raw.height; ++y)
    for (std::size_t x = 0; x < raw.width; ++x)
      for (std::size_t c = 0; c < raw.channels; ++c)
        out.at(c, y, x) = raw.pixels[(y * raw.width + x) * raw.channels + c];
  return out;
}

RawImage to_raw(const Image& image) {
  RawImage raw{image.width, image.height, image.channels, {}};
  raw.pixels.resize(image.values.size());
  for (std::size_t y = 0; y < image.height; ++y)
    for (std::size_t x = 0; x < image.width; ++x)
      for (std::size_t c = 0; c < image.channels; ++c) {
        const float v = std::clamp(std::round(image.at(c, y, x)), 0.0f, 255.0f);
        raw.pixels[(y * image.width + x) * image.channels + c] = static_cast<std::uint8_t>(v);
      }
  return raw;
}

RawImage mask_to_raw(const Mask& mask) {
  RawImage raw{mask.width, mask.height, 1, std::vector<std::uint8_t>(mask.size())};
  std::ranges::transform(mask.values, raw.pixels.begin(),
                         [](std::uint8_t v) { return static_cast<std::uint8_t>(v ? 255 : 0); });
  return raw;
}

RawImage bytemap_to_raw(const ByteMap& map) {
  return RawImage{map.width, map.height, 1, map.values};
}

Mask raw_to_mask(const RawImage& raw, std::uint8_t threshold) {
  if (raw.channels != 1) throw DataError("mask raster must have a single channel");
  Mask mask(raw.height, raw.width);
  std::ranges::transform(raw.pixels, mask.values.begin(), [threshold](std::uint8_t v) {
    return static_cast<std::uint8_t>(v >= threshold ? 1 : 0);
  });
  return mask;
}

}  // namespace lesionseg
