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
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lesionseg/image.hpp"
#include "lesionseg/nn.hpp"
#include "lesionseg/random.hpp"
#include "lesionseg/tensor.hpp"

namespace lesionseg {

/// An RGB image with its binary ground-truth mask.
struct Sample {
  Image image;
  Mask mask;
  std::size_t original_h = 0;
  std::size_t original_w = 0;
  std::string id;
};

struct DatasetOptions {
  /// Mask file name = image stem + suffix.
  std::string mask_suffix = "_segmentation.png";
  /// When set, images are resized bilinearly and masks by nearest
  /// neighbour right after decoding.
  std::optional<std::size_t> resize_h;
  std::optional<std::size_t> resize_w;
};

/// True for .png/.jpg/.jpeg (any case).
bool is_image_file(const std::filesystem::path& path);

/// Image id: file stem with `suffix`'s stem part removed when present
/// ("ISIC_1_segmentation.png" -> "ISIC_1").
std::string image_id(const std::filesystem::path& path, const std::string& suffix);

/// Pairs every image in image_dir with mask_dir/<stem><suffix>, sorted by
/// id. Masks are binarized at >= 128. Throws DataError naming the file on a
/// missing mask, an undecodable file or mismatched image/mask dimensions.
std::vector<Sample> load_dataset(const std::filesystem::path& image_dir,
                                 const std::filesystem::path& mask_dir,
                                 const DatasetOptions& options = {});

/// Resizes image (bilinear) and mask (nearest) to h x w.
Sample resize_sample(const Sample& sample, std::size_t h, std::size_t w);

/// Applies the same dihedral transform to image and mask.
Sample transform_sample(const Sample& sample, unsigned quarter_turns, bool flip);

/// Uniform quarter-turn count in {0,1,2,3}, then a horizontal flip with
/// probability 1/2.
Sample augment(const Sample& sample, Rng& rng);

/// Per-image standardization: (x - mean) / max(stddev, 1/sqrt(N)) over all
/// N = c*h*w values, population statistics.
Tensor4 standardize(const Image& image);
void standardize_into(const Image& image, Tensor4& batch, std::size_t index);

struct Batch {
  Tensor4 images;
  Labels labels;
  std::vector<std::string> ids;
};

/// Sample visiting order for one epoch: a Fisher-Yates shuffle seeded from
/// (seed, epoch).
std::vector<std::size_t> epoch_order(std::size_t count, std::uint64_t seed, std::uint64_t epoch);

/// Standardized (and optionally augmented) batch for the given samples.
/// Augmentation draws come from (seed, epoch, position), so the stream does
/// not depend on how batches are scheduled.
Batch make_batch(std::span<const Sample> samples, std::span<const std::size_t> indices,
                 std::optional<std::uint64_t> augment_seed = std::nullopt);

/// One epoch of batches in shuffled order; the final short batch is kept.
class BatchStream {
 public:
  /// Throws DataError for an empty dataset, ConfigError for batch_size 0.
  BatchStream(std::span<const Sample> samples, std::size_t batch_size, std::uint64_t seed,
              std::uint64_t epoch, bool augment);

  std::size_t batch_count() const;
  std::size_t position() const { return next_; }
  /// Skips to batch index k (used when resuming mid-epoch).
  void seek(std::size_t k) { next_ = k; }
  std::optional<Batch> next();

 private:
  std::span<const Sample> samples_;
  std::size_t batch_size_;
  std::uint64_t seed_;
  std::uint64_t epoch_;
  bool augment_;
  std::vector<std::size_t> order_;
  std::size_t next_ = 0;
};

}  // namespace lesionseg
