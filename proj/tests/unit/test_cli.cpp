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


#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>
#include <sys/wait.h>
#include <string>
#include <vector>

#include "lesionseg/checkpoint.hpp"
#include "lesionseg/commands.hpp"
#include "lesionseg/data.hpp"
#include "lesionseg/image_io.hpp"
#include "lesionseg/metrics.hpp"
#include "lesionseg/postprocess.hpp"
#include "lesionseg/synth.hpp"

namespace lesionseg {
namespace {

namespace fs = std::filesystem;

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("lesionseg_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::vector<std::uint8_t> read_bytes(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, sep)) out.push_back(field);
  return out;
}

// Membership from the expanded quadratic form of a rotated ellipse.
double quadratic_form(double px, double py, double cx, double cy, double a, double b, double t) {
  const double c = std::cos(t), s = std::sin(t);
  const double A = c * c / (a * a) + s * s / (b * b);
  const double B = 2.0 * c * s * (1.0 / (a * a) - 1.0 / (b * b));
  const double C = s * s / (a * a) + c * c / (b * b);
  const double dx = px - cx, dy = py - cy;
  return A * dx * dx + B * dx * dy + C * dy * dy;
}

fs::path checkpoint_for(std::size_t size, const fs::path& dir) {
  const Network net = Network::build(ArchSpec::lesionseg(size, size), 17);
  const fs::path path = dir / "model.lsg1";
  save_checkpoint(path, net, AdamState{});
  return path;
}

TEST(Synth, SeedDeterministicBytes) {
  const fs::path a = fresh_dir("synth_a");
  const fs::path b = fresh_dir("synth_b");
  const fs::path c = fresh_dir("synth_c");
  std::ostringstream out, err;
  ASSERT_EQ(cmd_synth(5, 32, 3, a, out, err), kExitOk);
  ASSERT_EQ(cmd_synth(5, 32, 3, b, out, err), kExitOk);
  ASSERT_EQ(cmd_synth(5, 32, 4, c, out, err), kExitOk);
  for (const auto& entry : fs::recursive_directory_iterator(a)) {
    if (!entry.is_regular_file()) continue;
    const fs::path rel = fs::relative(entry.path(), a);
    EXPECT_EQ(read_bytes(entry.path()), read_bytes(b / rel)) << rel;
  }
  EXPECT_NE(read_bytes(a / "ellipses.csv"), read_bytes(c / "ellipses.csv"));
  EXPECT_EQ(cmd_synth(2, 30, 3, a, out, err), kExitUsage);
}

TEST(Synth, MasksMatchEllipseInequality) {
  const fs::path dir = fresh_dir("synth_oracle");
  std::ostringstream out, err;
  ASSERT_EQ(cmd_synth(30, 48, 8, dir, out, err), kExitOk);
  std::ifstream csv(dir / "ellipses.csv");
  std::string line;
  std::getline(csv, line);
  EXPECT_EQ(line, "id,cx,cy,semi_a,semi_b,theta");
  std::size_t rows = 0;
  while (std::getline(csv, line)) {
    const auto f = split(line, ',');
    ASSERT_EQ(f.size(), 6u);
    const double cx = std::stod(f[1]), cy = std::stod(f[2]), a = std::stod(f[3]),
                 b = std::stod(f[4]), t = std::stod(f[5]);
    const Mask mask = raw_to_mask(read_image(dir / "masks" / (f[0] + "_segmentation.png"), 1));
    ASSERT_EQ(mask.height, 48u);
    std::size_t fg = 0;
    for (std::size_t y = 0; y < 48; ++y)
      for (std::size_t x = 0; x < 48; ++x) {
        const double q = quadratic_form(x + 0.5, y + 0.5, cx, cy, a, b, t);
        fg += mask.at(y, x);
        if (std::abs(q - 1.0) < 1e-9) continue;
        ASSERT_EQ(mask.at(y, x), q <= 1.0 ? 1 : 0) << f[0] << " at " << y << "," << x;
      }
    const double frac = static_cast<double>(fg) / (48.0 * 48.0);
    EXPECT_GE(frac, kSynthMinForeground);
    EXPECT_LE(frac, kSynthMaxForeground);
    ++rows;
  }
  EXPECT_EQ(rows, 30u);
}

TEST(Synth, ImageIsSeparableByColour) {
  Rng rng(2);
  for (int i = 0; i < 20; ++i) {
    const SynthSample s = generate_synth_sample(32, rng, false);
    double fg[3] = {0, 0, 0}, bg[3] = {0, 0, 0};
    std::size_t nf = 0, nb = 0;
    for (std::size_t p = 0; p < 32 * 32; ++p) {
      double* acc = s.mask.values[p] ? fg : bg;
      (s.mask.values[p] ? nf : nb) += 1;
      for (int c = 0; c < 3; ++c) acc[c] += s.image.pixels[p * 3 + c];
    }
    double d = 0.0;
    for (int c = 0; c < 3; ++c) d += std::pow(fg[c] / nf - bg[c] / nb, 2);
    EXPECT_GE(std::sqrt(d), 70.0);
  }
}

TEST(Predict, LargeImageKeepsOriginalSize) {
  const fs::path dir = fresh_dir("predict_large");
  const fs::path ckpt = checkpoint_for(16, dir);
  fs::create_directories(dir / "in");
  RawImage big{6688, 4439, 3, std::vector<std::uint8_t>(6688 * 4439 * 3)};
  for (std::size_t y = 0; y < big.height; ++y)
    for (std::size_t x = 0; x < big.width; ++x) {
      const bool inside = std::pow((x - 3344.0) / 2000.0, 2) + std::pow((y - 2200.0) / 1500.0, 2) < 1.0;
      std::uint8_t* px = &big.pixels[(y * big.width + x) * 3];
      px[0] = inside ? 90 : 200;
      px[1] = inside ? 60 : 170;
      px[2] = inside ? 40 : 150;
    }
  write_jpeg(dir / "in" / "ISIC_big.jpg", big);

  PredictOptions opts;
  opts.checkpoint = ckpt;
  opts.input_dir = dir / "in";
  opts.output_dir = dir / "out";
  std::ostringstream out, err;
  ASSERT_EQ(cmd_predict(opts, out, err), kExitOk) << err.str();
  const RawImage mask = read_image(dir / "out" / "ISIC_big_segmentation.png", 1);
  EXPECT_EQ(mask.width, 6688u);
  EXPECT_EQ(mask.height, 4439u);
  for (auto v : mask.pixels) ASSERT_TRUE(v == 0 || v == 255);
}

TEST(Predict, DeterministicAndEqualToInProcessPipeline) {
  const fs::path dir = fresh_dir("predict_small");
  const fs::path ckpt = checkpoint_for(32, dir);
  std::ostringstream out, err;
  ASSERT_EQ(cmd_synth(3, 48, 5, dir / "data", out, err), kExitOk);
  // A stray non-image file and a mask living next to its image are skipped.
  std::ofstream(dir / "data" / "images" / "notes.txt") << "x";
  fs::copy_file(dir / "data" / "masks" / "synth5_0000_segmentation.png",
                dir / "data" / "images" / "synth5_0000_segmentation.png");

  PredictOptions opts;
  opts.checkpoint = ckpt;
  opts.input_dir = dir / "data" / "images";
  opts.output_dir = dir / "out1";
  opts.overlay = true;
  ASSERT_EQ(cmd_predict(opts, out, err), kExitOk);
  opts.output_dir = dir / "out2";
  ASSERT_EQ(cmd_predict(opts, out, err), kExitOk);

  const Checkpoint ck = load_checkpoint(ckpt);
  std::size_t count = 0;
  for (const auto& entry : fs::directory_iterator(dir / "out1")) {
    const std::string name = entry.path().filename().string();
    EXPECT_EQ(read_bytes(entry.path()), read_bytes(dir / "out2" / name)) << name;
    if (!name.ends_with("_segmentation.png")) continue;
    ++count;
    const std::string id = name.substr(0, name.size() - std::string("_segmentation.png").size());
    const RawImage raw = read_image(dir / "data" / "images" / (id + ".png"), 3);
    const Tensor4 logits = ck.network.infer(standardize(resize_bilinear(to_image(raw), 32, 32)));
    const Mask expected = postprocess(logits, 0, raw.height, raw.width);
    EXPECT_EQ(raw_to_mask(read_image(entry.path(), 1)), expected);
    const RawImage overlay = read_image(dir / "out1" / (id + "_overlay.png"), 3);
    EXPECT_EQ(overlay.width, 2 * raw.width);
  }
  EXPECT_EQ(count, 3u);
}

TEST(Predict, ThresholdAndOpeningOptions) {
  const fs::path dir = fresh_dir("predict_opts");
  const fs::path ckpt = checkpoint_for(16, dir);
  std::ostringstream out, err;
  ASSERT_EQ(cmd_synth(1, 16, 6, dir / "data", out, err), kExitOk);
  PredictOptions opts;
  opts.checkpoint = ckpt;
  opts.input_dir = dir / "data" / "images";
  opts.output_dir = dir / "all";
  opts.postproc.threshold = 0;
  opts.postproc.opening_enabled = false;
  ASSERT_EQ(cmd_predict(opts, out, err), kExitOk);
  for (auto v : read_image(dir / "all" / "synth6_0000_segmentation.png", 1).pixels) EXPECT_EQ(v, 255);
  opts.postproc.threshold = 256;
  EXPECT_EQ(cmd_predict(opts, out, err), kExitUsage);
  opts.postproc.threshold = 128;
  opts.checkpoint = dir / "missing.lsg1";
  EXPECT_EQ(cmd_predict(opts, out, err), kExitDataError);
}

TEST(Eval, IdenticalMasksScorePerfect) {
  const fs::path dir = fresh_dir("eval_same");
  std::ostringstream out, err;
  ASSERT_EQ(cmd_synth(4, 16, 9, dir, out, err), kExitOk);
  std::ostringstream table;
  ASSERT_EQ(cmd_eval(dir / "masks", dir / "masks", dir / "report.csv", table, err), kExitOk);
  std::ifstream csv(dir / "report.csv");
  std::string line, last;
  std::size_t rows = 0;
  while (std::getline(csv, line)) {
    last = line;
    ++rows;
  }
  EXPECT_EQ(rows, 6u);
  EXPECT_EQ(last, "mean,1.000000,1.000000,1.000000");
}

TEST(Eval, MissingPairIsReportedAndFlagged) {
  const fs::path dir = fresh_dir("eval_missing");
  std::ostringstream out, err;
  ASSERT_EQ(cmd_synth(2, 16, 10, dir, out, err), kExitOk);
  fs::create_directories(dir / "pred");
  fs::copy_file(dir / "masks" / "synth10_0000_segmentation.png",
                dir / "pred" / "synth10_0000_segmentation.png");
  std::ostringstream table, warn;
  EXPECT_EQ(cmd_eval(dir / "pred", dir / "masks", dir / "r.csv", table, warn), kExitDataError);
  EXPECT_NE(warn.str().find("synth10_0001"), std::string::npos);
  std::ifstream csv(dir / "r.csv");
  const std::string text((std::istreambuf_iterator<char>(csv)), {});
  EXPECT_NE(text.find("synth10_0000,1.000000"), std::string::npos);
  EXPECT_EQ(text.find("synth10_0001"), std::string::npos);

  fs::create_directories(dir / "empty");
  EXPECT_EQ(cmd_eval(dir / "empty", dir / "masks", "", table, warn), kExitDataError);
  EXPECT_EQ(cmd_eval(dir / "nowhere", dir / "masks", "", table, warn), kExitDataError);
}

TEST(Eval, MatchesMetricsOnPredictions) {
  const fs::path dir = fresh_dir("eval_cross");
  const fs::path ckpt = checkpoint_for(16, dir);
  std::ostringstream out, err;
  ASSERT_EQ(cmd_synth(3, 16, 11, dir / "data", out, err), kExitOk);
  PredictOptions opts;
  opts.checkpoint = ckpt;
  opts.input_dir = dir / "data" / "images";
  opts.output_dir = dir / "pred";
  opts.overlay = true;
  ASSERT_EQ(cmd_predict(opts, out, err), kExitOk);
  ASSERT_EQ(cmd_eval(dir / "pred", dir / "data" / "masks", dir / "r.csv", out, err), kExitOk);

  std::vector<ImageScore> scores;
  for (const auto& id : {"synth11_0000", "synth11_0001", "synth11_0002"}) {
    const std::string f = std::string(id) + "_segmentation.png";
    scores.push_back({id, confusion(raw_to_mask(read_image(dir / "pred" / f, 1)),
                                    raw_to_mask(read_image(dir / "data" / "masks" / f, 1)))});
  }
  std::ostringstream expected;
  write_report_csv(expected, scores);
  std::ifstream csv(dir / "r.csv");
  const std::string text((std::istreambuf_iterator<char>(csv)), {});
  EXPECT_EQ(text, expected.str());
}

TEST(TrainCommand, ReportsExitStatuses) {
  const fs::path dir = fresh_dir("cmd_train");
  std::ostringstream out, err;
  ASSERT_EQ(cmd_synth(6, 16, 12, dir / "train", out, err), kExitOk);
  ASSERT_EQ(cmd_synth(2, 16, 13, dir / "val", out, err), kExitOk);
  const auto write_config = [&](const std::string& body) {
    std::ofstream(dir / "cfg.txt") << body << "checkpoint_dir=" << (dir / "ck").string() << "\n";
  };
  write_config("input_size=16\nbatch_size=3\nmax_epochs=1\n");
  EXPECT_EQ(cmd_train(dir / "cfg.txt", dir / "train", dir / "val", false, out, err), kExitOk);
  EXPECT_TRUE(fs::exists(dir / "ck" / "best.lsg1"));
  write_config("input_size=16\nbatch_size=3\nmax_epochs=2\n");
  EXPECT_EQ(cmd_train(dir / "cfg.txt", dir / "train", dir / "val", true, out, err), kExitOk);
  write_config("input_size=16\nbatch_size=3\nlr=1e30\n");
  EXPECT_EQ(cmd_train(dir / "cfg.txt", dir / "train", dir / "val", false, out, err),
            kExitNumericalFailure);
  write_config("input_size=16\nwhatever=3\n");
  EXPECT_EQ(cmd_train(dir / "cfg.txt", dir / "train", dir / "val", false, out, err), kExitUsage);
  write_config("input_size=16\n");
  EXPECT_EQ(cmd_train(dir / "cfg.txt", dir / "missing", dir / "val", false, out, err),
            kExitDataError);
}

#ifdef LESIONSEG_CLI_PATH
int run_cli(const std::string& args) {
  const std::string cmd = std::string(LESIONSEG_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

TEST(Cli, ExitCodes) {
  const fs::path dir = fresh_dir("binary");
  EXPECT_EQ(run_cli("--help"), 0);
  EXPECT_EQ(run_cli("frobnicate"), 1);
  EXPECT_EQ(run_cli("predict --checkpoint x"), 1);
  EXPECT_EQ(run_cli("predict --checkpoint x --in y --out z --threshold 300"), 1);
  EXPECT_EQ(run_cli("synth --n 2 --size 16 --seed 1 --out " + (dir / "s").string()), 0);
  EXPECT_EQ(run_cli("eval --pred " + (dir / "s" / "masks").string() + " --truth " +
                    (dir / "s" / "masks").string()),
            0);
  EXPECT_EQ(run_cli("eval --pred " + (dir / "nope").string() + " --truth " + (dir / "s").string()), 2);
}
#endif

}  // namespace
}  // namespace lesionseg
