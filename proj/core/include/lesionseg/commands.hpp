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
#include <iosfwd>
#include <string>

#include "lesionseg/postprocess.hpp"

namespace lesionseg {

/// Process exit statuses of the command-line tool.
enum ExitStatus : int {
  kExitOk = 0,
  kExitUsage = 1,
  kExitDataError = 2,
  kExitNumericalFailure = 3,
};

/// A dataset directory either holds images/ and masks/ subdirectories or
/// keeps images and masks side by side.
struct DatasetDirs {
  std::filesystem::path images;
  std::filesystem::path masks;
};
DatasetDirs resolve_dataset_dirs(const std::filesystem::path& root);

int cmd_train(const std::filesystem::path& config_file, const std::filesystem::path& train_dir,
              const std::filesystem::path& val_dir, bool resume, std::ostream& out,
              std::ostream& err);

struct PredictOptions {
  std::filesystem::path checkpoint;
  std::filesystem::path input_dir;
  std::filesystem::path output_dir;
  PostprocConfig postproc;
  /// Also write <id>_overlay.png: the input next to the input with the
  /// predicted lesion boundary drawn in.
  bool overlay = false;
  std::string mask_suffix = "_segmentation.png";
};

/// Writes output_dir/<id><mask_suffix> with values {0, 255} at each input
/// image's original resolution. Unreadable images are skipped with a
/// warning; an unloadable checkpoint aborts.
int cmd_predict(const PredictOptions& options, std::ostream& out, std::ostream& err);

/// Scores every mask in pred_dir against the mask with the same id in
/// truth_dir. Writes a per-image CSV to report_csv (if non-empty) and a
/// table to `out`. Unmatched ids are listed on `err`, excluded, and make the
/// exit status non-zero.
int cmd_eval(const std::filesystem::path& pred_dir, const std::filesystem::path& truth_dir,
             const std::filesystem::path& report_csv, std::ostream& out, std::ostream& err,
             const std::string& mask_suffix = "_segmentation.png");

int cmd_synth(std::size_t count, std::size_t size, std::uint64_t seed,
              const std::filesystem::path& out_dir, std::ostream& out, std::ostream& err);

}  // namespace lesionseg
