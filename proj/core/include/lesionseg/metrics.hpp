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

#include <cstdint>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "lesionseg/image.hpp"

namespace lesionseg {

struct ConfusionCounts {
  std::uint64_t tp = 0;
  std::uint64_t fp = 0;
  std::uint64_t fn = 0;
  std::uint64_t tn = 0;

  std::uint64_t total() const { return tp + fp + fn + tn; }
  ConfusionCounts& operator+=(const ConfusionCounts& o) {
    tp += o.tp;
    fp += o.fp;
    fn += o.fn;
    tn += o.tn;
    return *this;
  }
  bool operator==(const ConfusionCounts&) const = default;
};

/// Pixel counts of (pred, truth) over two binary masks of equal size.
/// Throws ShapeError on a size mismatch.
ConfusionCounts confusion(const Mask& pred, const Mask& truth);

/// tp / (tp + fp + fn); 1.0 when both masks are empty.
double iou(const ConfusionCounts& c);
/// 2tp / (2tp + fp + fn); 1.0 when both masks are empty.
double dice(const ConfusionCounts& c);
/// (tp + tn) / total; 1.0 for an empty pair.
double pixel_accuracy(const ConfusionCounts& c);

/// Unweighted mean of per-image IoU. Throws MetricError on an empty list.
double mean_iou(std::span<const ConfusionCounts> per_image);
/// IoU of the summed counts.
double pooled_iou(std::span<const ConfusionCounts> per_image);

struct ImageScore {
  std::string id;
  ConfusionCounts counts;
};

/// CSV with header "id,iou,dice,pixel_acc", one row per image and a final
/// "mean" row holding the per-image averages.
void write_report_csv(std::ostream& out, std::span<const ImageScore> scores);
/// Human-readable table with the same content plus pooled IoU.
void write_report_table(std::ostream& out, std::span<const ImageScore> scores);

}  // namespace lesionseg
