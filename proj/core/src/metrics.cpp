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

#include "lesionseg/metrics.hpp"

#include <cstdio>
#include <iomanip>

#include "lesionseg/errors.hpp"

namespace lesionseg {

ConfusionCounts confusion(const Mask& pred, const Mask& truth) {
  if (pred.height != truth.height || pred.width != truth.width ||
      pred.values.size() != truth.values.size()) {
    throw ShapeError("mask sizes differ: " + std::to_string(pred.width) + "x" +
                     std::to_string(pred.height) + " vs " + std::to_string(truth.width) + "x" +
                     std::to_string(truth.height));
  }
  ConfusionCounts c;
  for (std::size_t i = 0; i < pred.values.size(); ++i) {
    const bool p = pred.values[i] != 0;
    const bool t = truth.values[i] != 0;
    if (p && t) ++c.tp;
    else if (p) ++c.fp;
    else if (t) ++c.fn;
    else ++c.tn;
  }
  return c;
}

double iou(const ConfusionCounts& c) {
  const std::uint64_t denom = c.tp + c.fp + c.fn;
  if (denom == 0) return 1.0;
  return static_cast<double>(c.tp) / static_cast<double>(denom);
}

double dice(const ConfusionCounts& c) {
  const std::uint64_t denom = 2 * c.tp + c.fp + c.fn;
  if (denom == 0) return 1.0;
  return 2.0 * static_cast<double>(c.tp) / static_cast<double>(denom);
}

double pixel_accuracy(const ConfusionCounts& c) {
  if (c.total() == 0) return 1.0;
  return static_cast<double>(c.tp + c.tn) / static_cast<double>(c.total());
}

double mean_iou(std::span<const ConfusionCounts> per_image) {
  if (per_image.empty()) throw MetricError("mean IoU of an empty list");
  double sum = 0.0;
  for (const auto& c : per_image) sum += iou(c);
  return sum / static_cast<double>(per_image.size());
}

double pooled_iou(std::span<const ConfusionCounts> per_image) {
  if (per_image.empty()) throw MetricError("pooled IoU of an empty list");
  ConfusionCounts total;
  for (const auto& c : per_image) total += c;
  return iou(total);
}

namespace {

struct Means {
  double iou = 0, dice = 0, acc = 0;
};

Means means(std::span<const ImageScore> scores) {
  Means m;
  if (scores.empty()) return m;
  for (const auto& s : scores) {
    m.iou += iou(s.counts);
    m.dice += dice(s.counts);
    m.acc += pixel_accuracy(s.counts);
  }
  const auto n = static_cast<double>(scores.size());
  return {m.iou / n, m.dice / n, m.acc / n};
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

}  // namespace

void write_report_csv(std::ostream& out, std::span<const ImageScore> scores) {
  out << "id,iou,dice,pixel_acc\n";
  for (const auto& s : scores) {
    out << s.id << ',' << fmt(iou(s.counts)) << ',' << fmt(dice(s.counts)) << ','
        << fmt(pixel_accuracy(s.counts)) << '\n';
  }
  const Means m = means(scores);
  out << "mean," << fmt(m.iou) << ',' << fmt(m.dice) << ',' << fmt(m.acc) << '\n';
}

void write_report_table(std::ostream& out, std::span<const ImageScore> scores) {
  std::size_t width = 4;
  for (const auto& s : scores) width = std::max(width, s.id.size());
  out << std::left << std::setw(static_cast<int>(width)) << "id" << "  " << std::setw(9) << "iou"
      << std::setw(9) << "dice" << "pixel_acc\n";
  for (const auto& s : scores) {
    out << std::setw(static_cast<int>(width)) << s.id << "  " << std::setw(9) << fmt(iou(s.counts))
        << std::setw(9) << fmt(dice(s.counts)) << fmt(pixel_accuracy(s.counts)) << '\n';
  }
  const Means m = means(scores);
  out << std::setw(static_cast<int>(width)) << "mean" << "  " << std::setw(9) << fmt(m.iou)
      << std::setw(9) << fmt(m.dice) << fmt(m.acc) << '\n';
  if (!scores.empty()) {
    std::vector<ConfusionCounts> counts;
    for (const auto& s : scores) counts.push_back(s.counts);
    out << "pooled iou: " << fmt(pooled_iou(counts)) << "  (" << scores.size() << " images)\n";
  }
}

}  // namespace lesionseg
