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
#include <functional>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "lesionseg/data.hpp"
#include "lesionseg/network.hpp"
#include "lesionseg/postprocess.hpp"

namespace lesionseg {

/// Training hyperparameters. The config file is flat `key=value` text whose
/// keys are exactly the field names below; `#` starts a comment.
struct TrainConfig {
  std::size_t input_h = 448;  // key input_size, "448x448" or "448"
  std::size_t input_w = 448;
  std::size_t batch_size = 32;
  double lr = 1e-3;
  std::size_t max_epochs = 100;
  /// Evaluations without a mean-IoU gain of at least kMinImprovement before
  /// training stops.
  std::size_t patience = 10;
  /// Evaluate every this many steps; 0 evaluates at the end of each epoch.
  std::size_t eval_every = 0;
  std::uint64_t seed = 0;
  std::filesystem::path checkpoint_dir = "checkpoints";
  bool determinism = true;

  /// Throws ConfigError.
  void validate() const;
  std::string to_text() const;
  static TrainConfig parse(std::string_view text);
  static TrainConfig load(const std::filesystem::path& path);

  bool operator==(const TrainConfig&) const = default;
};

inline constexpr double kMinImprovement = 1e-4;
inline constexpr const char* kBestCheckpoint = "best.lsg1";
inline constexpr const char* kLastCheckpoint = "last.lsg1";
inline constexpr const char* kConfigSnapshot = "config.txt";
inline constexpr const char* kTrainLog = "train.log";

struct EvalRecord {
  std::uint64_t step = 0;
  std::uint64_t epoch = 0;
  /// Mean training loss over the steps since the previous evaluation.
  double train_loss = 0.0;
  double val_miou = 0.0;
  bool improved = false;
  double elapsed_seconds = 0.0;
};

enum class StopReason { Patience, MaxEpochs };

struct TrainResult {
  std::uint64_t steps = 0;
  std::size_t evaluations = 0;
  double best_miou = 0.0;
  double last_loss = 0.0;
  StopReason reason = StopReason::MaxEpochs;
  std::vector<EvalRecord> history;  // evaluations of this invocation only
};

struct TrainOptions {
  /// Continue from checkpoint_dir/last.lsg1 instead of a fresh network.
  bool resume = false;
  /// Progress lines; also appended to checkpoint_dir/train.log.
  std::ostream* log = nullptr;
  std::function<void(const EvalRecord&)> on_eval;
};

/// Mean IoU of the post-processed (threshold + opening) predictions against
/// the sample masks, evaluated at the network's input size.
double evaluate(const Network& net, const std::vector<Sample>& samples, std::size_t batch_size,
                const PostprocConfig& postproc = {});

/// Adam training with per-pixel cross-entropy, augmented shuffled batches
/// and early stopping on validation mean IoU. Keeps the best checkpoint and
/// the latest one in checkpoint_dir, plus a config snapshot and a log.
///
/// lr == 0 is a frozen run: parameters and batch-norm running statistics
/// stay fixed. Throws NumericalError on a non-finite loss or gradient.
TrainResult train(const TrainConfig& config, const std::vector<Sample>& train_set,
                  const std::vector<Sample>& val_set, const TrainOptions& options = {});

}  // namespace lesionseg
