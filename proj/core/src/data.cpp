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

#include "lesionseg/data.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>

#include "lesionseg/errors.hpp"
#include "lesionseg/image_io.hpp"

namespace lesionseg {

namespace fs = std::filesystem;

bool is_image_file(const fs::path& path) {
  std::string ext = path.extension().string();
  std::ranges::transform(ext, ext.begin(), [](unsigned char c) { return std::tolower(c); });
  return ext == ".png" || ext == ".jpg" || ext == ".jpeg";
}

std::string image_id(const fs::path& path, const std::string& suffix) {
  const std::string name = path.filename().string();
  if (!suffix.empty() && name.size() > suffix.size() &&
      name.compare(name.size() - suffix.size(), suffix.size(), suffix) == 0) {
    return name.substr(0, name.size() - suffix.size());
  }
  return path.stem().string();
}

std::vector<Sample> load_dataset(const fs::path& image_dir, const fs::path& mask_dir,
                                 const DatasetOptions& options) {
  if (!fs::is_directory(image_dir)) throw DataError("image directory not found: " + image_dir.string());
  if (!fs::is_directory(mask_dir)) throw DataError("mask directory not found: " + mask_dir.string());

  std::map<std::string, fs::path> images;
  for (const auto& entry : fs::directory_iterator(image_dir)) {
    if (!entry.is_regular_file() || !is_image_file(entry.path())) continue;
    const std::string name = entry.path().filename().string();
    const std::string& suffix = options.mask_suffix;
    if (name.size() > suffix.size() &&
        name.compare(name.size() - suffix.size(), suffix.size(), suffix) == 0) {
      continue;  // a mask living next to its image
    }
    const std::string id = entry.path().stem().string();
    if (!images.emplace(id, entry.path()).second) {
      throw DataError("duplicate image id " + id + " in " + image_dir.string());
    }
  }

  std::vector<Sample> samples;
  samples.reserve(images.size());
  for (const auto& [id, path] : images) {
    const fs::path mask_path = mask_dir / (id + options.mask_suffix);
    if (!fs::exists(mask_path)) {
      throw DataError("image " + id + " has no mask (expected " + mask_path.string() + ")");
    }
    Sample s;
    s.id = id;
    s.image = to_image(read_image(path, 3));
    s.mask = raw_to_mask(read_image(mask_path, 1));
    if (s.mask.height != s.image.height || s.mask.width != s.image.width) {
      throw DataError("mask " + mask_path.string() + " is " + std::to_string(s.mask.width) + "x" +
                      std::to_string(s.mask.height) + " but image " + path.string() + " is " +
                      std::to_string(s.image.width) + "x" + std::to_string(s.image.height));
    }
    s.original_h = s.image.height;
    s.original_w = s.image.width;
    if (options.resize_h && options.resize_w) {
      s = resize_sample(s, *options.resize_h, *options.resize_w);
    }
    samples.push_back(std::move(s));
  }
  return samples;
}

Sample resize_sample(const Sample& sample, std::size_t h, std::size_t w) {
  Sample out;
  out.id = sample.id;
  out.original_h = sample.original_h;
  out.original_w = sample.original_w;
  out.image = resize_bilinear(sample.image, h, w);
  out.mask = resize_nearest(sample.mask, h, w);
  return out;
}

Sample transform_sample(const Sample& sample, unsigned quarter_turns, bool flip) {
  Sample out;
  out.id = sample.id;
  out.original_h = sample.original_h;
  out.original_w = sample.original_w;
  out.image = transform_dihedral(sample.image, quarter_turns, flip);
  out.mask = transform_dihedral(sample.mask, quarter_turns, flip);
  return out;
}

Sample augment(const Sample& sample, Rng& rng) {
  const auto turns = static_cast<unsigned>(rng.below(4));
  const bool flip = rng.coin();
  return transform_sample(sample, turns, flip);
}

void standardize_into(const Image& image, Tensor4& batch, std::size_t index) {
  const Shape& s = batch.shape();
  if (s.c != image.channels || s.h != image.height || s.w != image.width || index >= s.n) {
    throw ShapeError("image " + std::to_string(image.channels) + "x" + std::to_string(image.height) +
                     "x" + std::to_string(image.width) + " does not fit batch slot of " +
                     to_string(s));
  }
  const std::size_t count = image.values.size();
  double sum = 0.0;
  for (float v : image.values) sum += v;
  const double mean = sum / static_cast<double>(count);
  double sq = 0.0;
  for (float v : image.values) sq += (v - mean) * (v - mean);
  const double stddev = std::sqrt(sq / static_cast<double>(count));
  const double denom = std::max(stddev, 1.0 / std::sqrt(static_cast<double>(count)));
  float* dst = batch.plane(index, 0);
  for (std::size_t i = 0; i < count; ++i) {
    dst[i] = static_cast<float>((image.values[i] - mean) / denom);
  }
}

Tensor4 standardize(const Image& image) {
  Tensor4 out({1, image.channels, image.height, image.width});
  standardize_into(image, out, 0);
  return out;
}

std::vector<std::size_t> epoch_order(std::size_t count, std::uint64_t seed, std::uint64_t epoch) {
  std::vector<std::size_t> order(count);
  for (std::size_t i = 0; i < count; ++i) order[i] = i;
  Rng rng(mix_seed(seed, epoch));
  for (std::size_t i = count; i > 1; --i) {
    const std::size_t j = rng.below(i);
    std::swap(order[i - 1], order[j]);
  }
  return order;
}

Batch make_batch(std::span<const Sample> samples, std::span<const std::size_t> indices,
                 std::optional<std::uint64_t> augment_seed) {
  if (indices.empty()) throw DataError("cannot build an empty batch");
  const Sample& first = samples[indices.front()];
  const std::size_t h = first.image.height;
  const std::size_t w = first.image.width;
  Batch batch{Tensor4({indices.size(), first.image.channels, h, w}), Labels(indices.size(), h, w), {}};
  for (std::size_t k = 0; k < indices.size(); ++k) {
    const Sample* s = &samples[indices[k]];
    Sample augmented;
    if (augment_seed) {
      Rng rng(mix_seed(*augment_seed, k));
      augmented = augment(*s, rng);
      s = &augmented;
    }
    if (s->image.height != h || s->image.width != w || s->mask.height != h || s->mask.width != w) {
      throw DataError("sample " + s->id + " does not match the batch size " + std::to_string(h) +
                      "x" + std::to_string(w));
    }
    standardize_into(s->image, batch.images, k);
    std::ranges::copy(s->mask.values, batch.labels.values.begin() + static_cast<std::ptrdiff_t>(k * h * w));
    batch.ids.push_back(s->id);
  }
  return batch;
}

BatchStream::BatchStream(std::span<const Sample> samples, std::size_t batch_size,
                         std::uint64_t seed, std::uint64_t epoch, bool augment)
    : samples_(samples), batch_size_(batch_size), seed_(seed), epoch_(epoch), augment_(augment) {
  if (samples.empty()) throw DataError("dataset is empty");
  if (batch_size == 0) throw ConfigError("batch size must be >= 1");
  order_ = epoch_order(samples.size(), seed, epoch);
}

std::size_t BatchStream::batch_count() const {
  return (order_.size() + batch_size_ - 1) / batch_size_;
}

std::optional<Batch> BatchStream::next() {
  if (next_ >= batch_count()) return std::nullopt;
  const std::size_t begin = next_ * batch_size_;
  const std::size_t end = std::min(begin + batch_size_, order_.size());
  const std::span<const std::size_t> indices(order_.data() + begin, end - begin);
  std::optional<std::uint64_t> aug;
  if (augment_) aug = mix_seed(mix_seed(seed_ ^ 0xa5a5a5a5a5a5a5a5ULL, epoch_), next_);
  ++next_;
  return make_batch(samples_, indices, aug);
}

}  // namespace lesionseg
