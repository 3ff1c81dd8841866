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

#include "lesionseg/commands.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <ostream>
#include <vector>

#include "lesionseg/checkpoint.hpp"
#include "lesionseg/data.hpp"
#include "lesionseg/errors.hpp"
#include "lesionseg/image_io.hpp"
#include "lesionseg/metrics.hpp"
#include "lesionseg/synth.hpp"
#include "lesionseg/train.hpp"

namespace lesionseg {

namespace fs = std::filesystem;

namespace {

int report(const std::exception& e, std::ostream& err) {
  err << "error: " << e.what() << '\n';
  if (dynamic_cast<const NumericalError*>(&e)) return kExitNumericalFailure;
  if (dynamic_cast<const ConfigError*>(&e)) return kExitUsage;
  return kExitDataError;
}

std::vector<fs::path> sorted_images(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw DataError("directory not found: " + dir.string());
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && is_image_file(entry.path())) files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  return files;
}

// Input on the left; on the right the input with the mask boundary in red.
RawImage make_overlay(const RawImage& input, const Mask& mask) {
  const std::size_t w = input.width;
  const std::size_t h = input.height;
  RawImage out{2 * w, h, 3, std::vector<std::uint8_t>(2 * w * h * 3)};
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      const std::uint8_t* px = &input.pixels[(y * w + x) * 3];
      std::uint8_t* left = &out.pixels[(y * 2 * w + x) * 3];
      std::uint8_t* right = &out.pixels[(y * 2 * w + w + x) * 3];
      std::copy(px, px + 3, left);
      std::copy(px, px + 3, right);
      if (!mask.at(y, x)) continue;
      const bool edge = y == 0 || x == 0 || y + 1 == h || x + 1 == w || !mask.at(y - 1, x) ||
                        !mask.at(y + 1, x) || !mask.at(y, x - 1) || !mask.at(y, x + 1);
      if (edge) {
        right[0] = 255;
        right[1] = 0;
        right[2] = 0;
      }
    }
  }
  return out;
}

}  // namespace

DatasetDirs resolve_dataset_dirs(const fs::path& root) {
  if (fs::is_directory(root / "images") && fs::is_directory(root / "masks")) {
    return {root / "images", root / "masks"};
  }
  return {root, root};
}

int cmd_train(const fs::path& config_file, const fs::path& train_dir, const fs::path& val_dir,
              bool resume, std::ostream& out, std::ostream& err) {
  try {
    const TrainConfig config = TrainConfig::load(config_file);
    DatasetOptions opts;
    opts.resize_h = config.input_h;
    opts.resize_w = config.input_w;
    const DatasetDirs tr = resolve_dataset_dirs(train_dir);
    const DatasetDirs va = resolve_dataset_dirs(val_dir);
    const auto train_set = load_dataset(tr.images, tr.masks, opts);
    const auto val_set = load_dataset(va.images, va.masks, opts);
    out << "loaded " << train_set.size() << " training and " << val_set.size()
        << " validation samples\n";
    TrainOptions topts;
    topts.resume = resume;
    topts.log = &out;
    const TrainResult result = train(config, train_set, val_set, topts);
    out << "best checkpoint: " << (config.checkpoint_dir / kBestCheckpoint).string()
        << " (val mean IoU " << result.best_miou << ")\n";
    return kExitOk;
  } catch (const std::exception& e) {
    return report(e, err);
  }
}

int cmd_predict(const PredictOptions& options, std::ostream& out, std::ostream& err) {
  try {
    options.postproc.validate();
    const Checkpoint ck = load_checkpoint(options.checkpoint);
    const Network& net = ck.network;
    const ArchSpec& spec = net.spec();
    fs::create_directories(options.output_dir);
    std::size_t written = 0;
    for (const fs::path& path : sorted_images(options.input_dir)) {
      const std::string name = path.filename().string();
      if (name.size() > options.mask_suffix.size() &&
          name.compare(name.size() - options.mask_suffix.size(), options.mask_suffix.size(),
                       options.mask_suffix) == 0) {
        continue;
      }
      RawImage raw;
      try {
        raw = read_image(path, 3);
      } catch (const DataError& e) {
        err << "warning: skipping " << path.string() << ": " << e.what() << '\n';
        continue;
      }
      const std::string id = path.stem().string();
      Tensor4 input = standardize(resize_bilinear(to_image(raw), spec.input_h, spec.input_w));
      const Tensor4 logits = net.infer(input);
      const Mask mask = postprocess(logits, 0, raw.height, raw.width, options.postproc);
      write_png(options.output_dir / (id + options.mask_suffix), mask_to_raw(mask));
      if (options.overlay) {
        write_png(options.output_dir / (id + "_overlay.png"), make_overlay(raw, mask));
      }
      ++written;
      out << id << ": " << raw.width << "x" << raw.height << '\n';
    }
    out << "wrote " << written << " masks to " << options.output_dir.string() << '\n';
    return kExitOk;
  } catch (const std::exception& e) {
    return report(e, err);
  }
}

int cmd_eval(const fs::path& pred_dir, const fs::path& truth_dir, const fs::path& report_csv,
             std::ostream& out, std::ostream& err, const std::string& mask_suffix) {
  try {
    std::map<std::string, fs::path> preds;
    std::map<std::string, fs::path> truths;
    for (const auto& p : sorted_images(pred_dir)) {
      if (p.filename().string().ends_with("_overlay.png")) continue;
      preds[image_id(p, mask_suffix)] = p;
    }
    for (const auto& p : sorted_images(truth_dir)) truths[image_id(p, mask_suffix)] = p;

    std::vector<ImageScore> scores;
    std::vector<std::string> unmatched;
    for (const auto& [id, path] : preds) {
      auto it = truths.find(id);
      if (it == truths.end()) {
        unmatched.push_back(id + " (no ground truth)");
        continue;
      }
      const Mask pred = raw_to_mask(read_image(path, 1));
      const Mask truth = raw_to_mask(read_image(it->second, 1));
      if (pred.height != truth.height || pred.width != truth.width) {
        throw DataError("prediction " + path.string() + " and ground truth " + it->second.string() +
                        " differ in size");
      }
      scores.push_back({id, confusion(pred, truth)});
    }
    for (const auto& [id, path] : truths) {
      if (!preds.count(id)) unmatched.push_back(id + " (no prediction)");
    }

    for (const auto& u : unmatched) err << "unmatched: " << u << '\n';
    if (scores.empty()) {
      err << "error: no matching prediction/ground-truth pairs\n";
      return kExitDataError;
    }
    if (!report_csv.empty()) {
      std::ofstream csv(report_csv, std::ios::trunc);
      if (!csv) throw DataError("cannot write report " + report_csv.string());
      write_report_csv(csv, scores);
    }
    write_report_table(out, scores);
    return unmatched.empty() ? kExitOk : kExitDataError;
  } catch (const std::exception& e) {
    return report(e, err);
  }
}

int cmd_synth(std::size_t count, std::size_t size, std::uint64_t seed, const fs::path& out_dir,
              std::ostream& out, std::ostream& err) {
  try {
    SynthOptions opts;
    opts.count = count;
    opts.size = size;
    opts.seed = seed;
    gen_synth(opts, out_dir);
    out << "wrote " << count << " synthetic samples to " << out_dir.string() << '\n';
    return kExitOk;
  } catch (const std::exception& e) {
    return report(e, err);
  }
}

}  // namespace lesionseg
