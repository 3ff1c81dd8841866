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

#include "lesionseg/train.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <sstream>

#include "lesionseg/arch.hpp"
#include "lesionseg/checkpoint.hpp"
#include "lesionseg/errors.hpp"
#include "lesionseg/metrics.hpp"
#include "lesionseg/optim.hpp"

namespace lesionseg {

namespace fs = std::filesystem;

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::uint64_t parse_uint(const std::string& key, const std::string& v) {
  std::size_t used = 0;
  unsigned long long out = 0;
  try {
    out = std::stoull(v, &used);
  } catch (const std::logic_error&) {
    used = 0;
  }
  if (used != v.size() || v.empty() || v.front() == '-') {
    throw ConfigError("config key " + key + " expects a non-negative integer, got '" + v + "'");
  }
  return out;
}

double parse_double(const std::string& key, const std::string& v) {
  std::size_t used = 0;
  double out = 0;
  try {
    out = std::stod(v, &used);
  } catch (const std::logic_error&) {
    used = 0;
  }
  if (used != v.size() || v.empty()) {
    throw ConfigError("config key " + key + " expects a number, got '" + v + "'");
  }
  return out;
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ConfigError("config key " + key + " expects a boolean, got '" + v + "'");
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

void TrainConfig::validate() const {
  if (batch_size == 0) throw ConfigError("batch_size must be >= 1");
  if (patience == 0) throw ConfigError("patience must be >= 1");
  if (input_h == 0 || input_w == 0 || input_h % 4 != 0 || input_w % 4 != 0) {
    throw ConfigError("input_size must be divisible by 4");
  }
  if (!(lr >= 0.0) || !std::isfinite(lr)) throw ConfigError("lr must be a finite value >= 0");
  if (checkpoint_dir.empty()) throw ConfigError("checkpoint_dir must not be empty");
}

std::string TrainConfig::to_text() const {
  std::ostringstream out;
  out << "input_size=" << input_h << "x" << input_w << '\n'
      << "batch_size=" << batch_size << '\n'
      << "lr=" << format_double(lr) << '\n'
      << "max_epochs=" << max_epochs << '\n'
      << "patience=" << patience << '\n'
      << "eval_every=" << eval_every << '\n'
      << "seed=" << seed << '\n'
      << "checkpoint_dir=" << checkpoint_dir.string() << '\n'
      << "determinism=" << (determinism ? "true" : "false") << '\n';
  return out.str();
}

TrainConfig TrainConfig::parse(std::string_view text) {
  TrainConfig cfg;
  std::set<std::string> seen;
  std::istringstream in{std::string(text)};
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const auto hash = raw.find('#');
    const std::string line = trim(std::string_view(raw).substr(0, hash));
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(line_no) + ": expected key=value");
    }
    const std::string key = trim(std::string_view(line).substr(0, eq));
    const std::string value = trim(std::string_view(line).substr(eq + 1));
    if (!seen.insert(key).second) throw ConfigError("duplicate config key " + key);
    if (key == "input_size") {
      const auto x = value.find('x');
      if (x == std::string::npos) {
        cfg.input_h = cfg.input_w = parse_uint(key, value);
      } else {
        cfg.input_h = parse_uint(key, value.substr(0, x));
        cfg.input_w = parse_uint(key, value.substr(x + 1));
      }
    } else if (key == "batch_size") {
      cfg.batch_size = parse_uint(key, value);
    } else if (key == "lr") {
      cfg.lr = parse_double(key, value);
    } else if (key == "max_epochs") {
      cfg.max_epochs = parse_uint(key, value);
    } else if (key == "patience") {
      cfg.patience = parse_uint(key, value);
    } else if (key == "eval_every") {
      cfg.eval_every = parse_uint(key, value);
    } else if (key == "seed") {
      cfg.seed = parse_uint(key, value);
    } else if (key == "checkpoint_dir") {
      cfg.checkpoint_dir = value;
    } else if (key == "determinism") {
      cfg.determinism = parse_bool(key, value);
    } else {
      throw ConfigError("unknown config key '" + key + "'");
    }
  }
  cfg.validate();
  return cfg;
}

TrainConfig TrainConfig::load(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse(buf.str());
}

double evaluate(const Network& net, const std::vector<Sample>& samples, std::size_t batch_size,
                const PostprocConfig& postproc) {
  if (samples.empty()) throw MetricError("validation set is empty");
  std::vector<ConfusionCounts> counts;
  counts.reserve(samples.size());
  std::vector<std::size_t> indices;
  for (std::size_t begin = 0; begin < samples.size(); begin += batch_size) {
    const std::size_t end = std::min(begin + batch_size, samples.size());
    indices.clear();
    for (std::size_t i = begin; i < end; ++i) indices.push_back(i);
    const Batch batch = make_batch(samples, indices);
    const Tensor4 logits = net.infer(batch.images);
    for (std::size_t k = 0; k < indices.size(); ++k) {
      const Sample& s = samples[indices[k]];
      const Mask pred = postprocess(logits, k, s.mask.height, s.mask.width, postproc);
      counts.push_back(confusion(pred, s.mask));
    }
  }
  return mean_iou(counts);
}

namespace {

struct Progress {
  std::uint64_t step = 0;
  std::uint64_t epoch = 0;
  std::uint64_t batch_in_epoch = 0;
  double best = -std::numeric_limits<double>::infinity();
  std::uint64_t since_improvement = 0;
  std::uint64_t evaluations = 0;
  double last_loss = 0.0;

  std::map<std::string, double> to_metadata(std::uint64_t seed) const {
    return {{"step", static_cast<double>(step)},
            {"epoch", static_cast<double>(epoch)},
            {"batch_in_epoch", static_cast<double>(batch_in_epoch)},
            {"best_miou", best},
            {"since_improvement", static_cast<double>(since_improvement)},
            {"evaluations", static_cast<double>(evaluations)},
            {"last_loss", last_loss},
            {"seed", static_cast<double>(seed)}};
  }

  static Progress from_metadata(const std::map<std::string, double>& meta) {
    auto get = [&](const char* key) {
      auto it = meta.find(key);
      if (it == meta.end()) throw CheckpointError(std::string("resume checkpoint lacks ") + key);
      return it->second;
    };
    Progress p;
    p.step = static_cast<std::uint64_t>(get("step"));
    p.epoch = static_cast<std::uint64_t>(get("epoch"));
    p.batch_in_epoch = static_cast<std::uint64_t>(get("batch_in_epoch"));
    p.best = get("best_miou");
    p.since_improvement = static_cast<std::uint64_t>(get("since_improvement"));
    p.evaluations = static_cast<std::uint64_t>(get("evaluations"));
    p.last_loss = get("last_loss");
    return p;
  }
};

void check_disjoint(const std::vector<Sample>& a, const std::vector<Sample>& b) {
  std::set<std::string> ids;
  for (const auto& s : a) ids.insert(s.id);
  for (const auto& s : b) {
    if (ids.count(s.id)) throw DataError("sample " + s.id + " appears in both train and validation sets");
  }
}

}  // namespace

TrainResult train(const TrainConfig& config, const std::vector<Sample>& train_set,
                  const std::vector<Sample>& val_set, const TrainOptions& options) {
  config.validate();
  if (train_set.empty()) throw DataError("training set is empty");
  if (val_set.empty()) throw DataError("validation set is empty");
  check_disjoint(train_set, val_set);

  const ArchSpec arch = ArchSpec::lesionseg(config.input_h, config.input_w);
  fs::create_directories(config.checkpoint_dir);
  const fs::path best_path = config.checkpoint_dir / kBestCheckpoint;
  const fs::path last_path = config.checkpoint_dir / kLastCheckpoint;
  {
    std::ofstream snap(config.checkpoint_dir / kConfigSnapshot, std::ios::trunc);
    snap << config.to_text();
  }
  std::ofstream logfile(config.checkpoint_dir / kTrainLog, options.resume ? std::ios::app : std::ios::trunc);
  auto log = [&](const std::string& line) {
    logfile << line << '\n';
    logfile.flush();
    if (options.log) *options.log << line << std::endl;
  };

  Network net;
  AdamState adam;
  Progress progress;
  if (options.resume) {
    Checkpoint ck = load_checkpoint(last_path, arch);
    net = std::move(ck.network);
    adam = std::move(ck.optimizer);
    progress = Progress::from_metadata(ck.metadata);
    log("resumed from " + last_path.string() + " at step " + std::to_string(progress.step));
  } else {
    net = Network::build(arch, config.seed);
  }
  adam.config.lr = static_cast<float>(config.lr);
  const bool frozen = config.lr == 0.0;

  TrainResult result;
  const auto started = std::chrono::steady_clock::now();
  double loss_sum = 0.0;
  std::size_t loss_count = 0;
  bool stop = false;

  auto run_evaluation = [&]() {
    const double miou = evaluate(net, val_set, config.batch_size);
    EvalRecord rec;
    rec.step = progress.step;
    rec.epoch = progress.epoch;
    rec.train_loss = loss_count ? loss_sum / static_cast<double>(loss_count) : progress.last_loss;
    rec.val_miou = miou;
    rec.improved = miou >= progress.best + kMinImprovement;
    rec.elapsed_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    loss_sum = 0.0;
    loss_count = 0;
    progress.evaluations += 1;
    if (rec.improved) {
      progress.best = miou;
      progress.since_improvement = 0;
    } else {
      progress.since_improvement += 1;
    }
    const auto meta = progress.to_metadata(config.seed);
    if (rec.improved) save_checkpoint(best_path, net, adam, meta);
    save_checkpoint(last_path, net, adam, meta);

    char line[256];
    std::snprintf(line, sizeof line, "step=%llu epoch=%llu loss=%.6f val_miou=%.6f best=%.6f%s",
                  static_cast<unsigned long long>(rec.step),
                  static_cast<unsigned long long>(rec.epoch), rec.train_loss, miou, progress.best,
                  rec.improved ? " *" : "");
    log(line);
    result.history.push_back(rec);
    if (options.on_eval) options.on_eval(rec);
    if (progress.since_improvement >= config.patience) {
      result.reason = StopReason::Patience;
      stop = true;
    }
  };

  while (!stop && progress.epoch < config.max_epochs) {
    BatchStream stream(train_set, config.batch_size, config.seed, progress.epoch, true);
    stream.seek(progress.batch_in_epoch);
    while (!stop) {
      std::optional<Batch> batch = stream.next();
      if (!batch) break;
      Network::StepResult step = net.backward(batch->images, batch->labels, !frozen);
      if (!std::isfinite(step.loss)) {
        throw NumericalError("non-finite loss at step " + std::to_string(progress.step + 1));
      }
      const auto params = net.parameters();
      if (frozen) {
        for (const auto& p : params) {
          for (float g : p.tensor->grad()) {
            if (!std::isfinite(g)) throw NumericalError("non-finite gradient in parameter " + p.name);
          }
        }
      } else {
        adam_step(params, adam);
      }
      progress.step += 1;
      progress.batch_in_epoch = stream.position();
      progress.last_loss = step.loss;
      loss_sum += step.loss;
      loss_count += 1;
      if (config.eval_every > 0 && progress.step % config.eval_every == 0) run_evaluation();
    }
    if (stop) break;
    progress.epoch += 1;
    progress.batch_in_epoch = 0;
    if (config.eval_every == 0) run_evaluation();
  }
  if (!stop) {
    result.reason = StopReason::MaxEpochs;
    // Persist the final position so a resumed run continues from here.
    save_checkpoint(last_path, net, adam, progress.to_metadata(config.seed));
  }

  result.steps = progress.step;
  result.evaluations = progress.evaluations;
  result.best_miou = progress.best;
  result.last_loss = progress.last_loss;
  log(std::string("stopped: ") + (result.reason == StopReason::Patience ? "patience exhausted" : "max_epochs reached") +
      ", best val_miou=" + format_double(progress.best));
  return result;
}

}  // namespace lesionseg
