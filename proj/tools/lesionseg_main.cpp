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

#include <CLI11.hpp>

#include <iostream>

#include "lesionseg/commands.hpp"

int main(int argc, char** argv) {
  using namespace lesionseg;

  CLI::App app{"lesionseg: fully convolutional lesion segmentation"};
  app.require_subcommand(1);

  std::string config, train_dir, val_dir;
  bool resume = false;
  auto* train = app.add_subcommand("train", "train a network with early stopping on val mean IoU");
  train->add_option("--config", config, "key=value training config file")->required();
  train->add_option("--train-dir", train_dir, "training dataset directory")->required();
  train->add_option("--val-dir", val_dir, "validation dataset directory")->required();
  train->add_flag("--resume", resume, "continue from <checkpoint_dir>/last.lsg1");

  PredictOptions predict_opts;
  std::string checkpoint, in_dir, out_dir;
  bool no_open = false;
  auto* predict = app.add_subcommand("predict", "segment every image in a directory");
  predict->add_option("--checkpoint", checkpoint, "checkpoint file")->required();
  predict->add_option("--in", in_dir, "input image directory")->required();
  predict->add_option("--out", out_dir, "output mask directory")->required();
  predict->add_option("--threshold", predict_opts.postproc.threshold, "binarization threshold")
      ->check(CLI::Range(0, 255))
      ->capture_default_str();
  predict->add_flag("--no-open", no_open, "skip the morphological opening");
  predict->add_flag("--overlay", predict_opts.overlay, "also write side-by-side overlay PNGs");

  std::string pred_dir, truth_dir, report;
  auto* eval = app.add_subcommand("eval", "score predicted masks against ground truth");
  eval->add_option("--pred", pred_dir, "predicted mask directory")->required();
  eval->add_option("--truth", truth_dir, "ground-truth mask directory")->required();
  eval->add_option("--report", report, "per-image CSV report path");

  std::size_t synth_n = 0, synth_size = 64;
  std::uint64_t synth_seed = 0;
  std::string synth_out;
  auto* synth = app.add_subcommand("synth", "generate a synthetic ellipse dataset");
  synth->add_option("--n", synth_n, "number of samples")->required();
  synth->add_option("--size", synth_size, "image side in pixels (multiple of 4)")->capture_default_str();
  synth->add_option("--seed", synth_seed, "generator seed")->capture_default_str();
  synth->add_option("--out", synth_out, "output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitUsage;
  }

  if (*train) return cmd_train(config, train_dir, val_dir, resume, std::cout, std::cerr);
  if (*predict) {
    predict_opts.checkpoint = checkpoint;
    predict_opts.input_dir = in_dir;
    predict_opts.output_dir = out_dir;
    predict_opts.postproc.opening_enabled = !no_open;
    return cmd_predict(predict_opts, std::cout, std::cerr);
  }
  if (*eval) return cmd_eval(pred_dir, truth_dir, report, std::cout, std::cerr);
  if (*synth) return cmd_synth(synth_n, synth_size, synth_seed, synth_out, std::cout, std::cerr);
  return kExitUsage;
}
