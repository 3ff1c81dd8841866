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

#include "lesionseg/checkpoint.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <fstream>
#include <iterator>

#include "lesionseg/errors.hpp"

namespace lesionseg {

namespace {

constexpr std::array<std::uint8_t, 4> kMagic{'L', 'S', 'G', '1'};
constexpr const char* kAdamPrefix = "adam.";

class Writer {
 public:
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) bytes_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) bytes_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void str(const std::string& s) {
    u32(static_cast<std::uint32_t>(s.size()));
    bytes_.insert(bytes_.end(), s.begin(), s.end());
  }
  void raw(std::span<const std::uint8_t> b) { bytes_.insert(bytes_.end(), b.begin(), b.end()); }
  void record(const std::string& name, const Tensor4& t) {
    str(name);
    const Shape& s = t.shape();
    for (std::size_t d : {s.n, s.c, s.h, s.w}) u32(static_cast<std::uint32_t>(d));
    for (float v : t.data()) f32(v);
  }
  std::vector<std::uint8_t> take() { return std::move(bytes_); }

 private:
  std::vector<std::uint8_t> bytes_;
};

class Reader {
 public:
  explicit Reader(const std::vector<std::uint8_t>& bytes) : bytes_(bytes) {}

  void need(std::size_t n) const {
    if (bytes_.size() - pos_ < n) throw CheckpointError("checkpoint truncated");
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes_[pos_++]) << (8 * i);
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(bytes_[pos_++]) << (8 * i);
    return v;
  }
  float f32() { return std::bit_cast<float>(u32()); }
  double f64() { return std::bit_cast<double>(u64()); }
  std::string str() {
    const std::uint32_t n = u32();
    need(n);
    std::string s(bytes_.begin() + static_cast<std::ptrdiff_t>(pos_),
                  bytes_.begin() + static_cast<std::ptrdiff_t>(pos_ + n));
    pos_ += n;
    return s;
  }
  /// Reads a record, requiring the given name and shape.
  void record_into(const std::string& name, Tensor4& t) {
    const std::string got = str();
    if (got != name) {
      throw CheckpointError("expected record '" + name + "', found '" + got + "'");
    }
    Shape s;
    s.n = u32();
    s.c = u32();
    s.h = u32();
    s.w = u32();
    if (s != t.shape()) {
      throw CheckpointError("record '" + name + "' has shape " + to_string(s) +
                            ", architecture requires " + to_string(t.shape()));
    }
    need(4 * t.size());
    for (float& v : t.data()) v = f32();
  }
  bool done() const { return pos_ == bytes_.size(); }

 private:
  const std::vector<std::uint8_t>& bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::vector<std::uint8_t> encode_checkpoint(const Network& net, const AdamState& optimizer,
                                            const std::map<std::string, double>& metadata) {
  Writer w;
  w.raw(kMagic);
  w.u32(kCheckpointVersion);
  const ArchSpec& spec = net.spec();
  w.u64(spec.digest());
  w.str(spec.serialize());
  w.u64(net.seed());

  const auto state = net.state();
  w.u32(static_cast<std::uint32_t>(state.size()));
  for (const auto& p : state) w.record(p.name, *p.tensor);

  w.u32(static_cast<std::uint32_t>(2 * optimizer.names.size()));
  for (std::size_t i = 0; i < optimizer.names.size(); ++i) {
    w.record("adam.m/" + optimizer.names[i], optimizer.m[i]);
    w.record("adam.v/" + optimizer.names[i], optimizer.v[i]);
  }

  std::map<std::string, double> meta;
  for (const auto& [k, v] : metadata) {
    if (k.rfind(kAdamPrefix, 0) == 0) throw CheckpointError("metadata key '" + k + "' is reserved");
    meta[k] = v;
  }
  const AdamConfig& cfg = optimizer.config;
  meta["adam.lr"] = cfg.lr;
  meta["adam.beta1"] = cfg.beta1;
  meta["adam.beta2"] = cfg.beta2;
  meta["adam.epsilon"] = cfg.epsilon;
  meta["adam.clip_norm"] = cfg.clip_norm;
  meta["adam.step"] = static_cast<double>(optimizer.step);
  w.u32(static_cast<std::uint32_t>(meta.size()));
  for (const auto& [k, v] : meta) {
    w.str(k);
    w.f64(v);
  }
  return w.take();
}

Checkpoint decode_checkpoint(const std::vector<std::uint8_t>& bytes) {
  Reader r(bytes);
  r.need(4);
  if (!std::equal(kMagic.begin(), kMagic.end(), bytes.begin())) {
    throw CheckpointError("not a checkpoint: bad magic bytes");
  }
  r.u32();  // magic, already compared
  const std::uint32_t version = r.u32();
  if (version != kCheckpointVersion) {
    throw CheckpointError("unsupported checkpoint version " + std::to_string(version));
  }
  const std::uint64_t digest = r.u64();
  ArchSpec spec;
  try {
    spec = ArchSpec::parse(r.str());
  } catch (const SpecError& e) {
    throw CheckpointError(std::string("checkpoint architecture is invalid: ") + e.what());
  }
  if (spec.digest() != digest) throw CheckpointError("checkpoint architecture digest mismatch");
  const std::uint64_t seed = r.u64();

  Checkpoint ck{Network::build(spec, seed), AdamState{}, {}};
  auto state = ck.network.state();
  const std::uint32_t count = r.u32();
  if (count != state.size()) {
    throw CheckpointError("checkpoint holds " + std::to_string(count) +
                          " tensors, architecture requires " + std::to_string(state.size()));
  }
  for (auto& p : state) r.record_into(p.name, *p.tensor);

  const std::uint32_t opt_count = r.u32();
  const auto params = ck.network.parameters();
  if (opt_count != 0 && opt_count != 2 * params.size()) {
    throw CheckpointError("optimizer state does not cover the network parameters");
  }
  if (opt_count != 0) {
    for (const auto& p : params) {
      ck.optimizer.names.push_back(p.name);
      Tensor4& m = ck.optimizer.m.emplace_back(p.tensor->shape());
      r.record_into("adam.m/" + p.name, m);
      Tensor4& v = ck.optimizer.v.emplace_back(p.tensor->shape());
      r.record_into("adam.v/" + p.name, v);
    }
  }

  const std::uint32_t meta_count = r.u32();
  std::map<std::string, double> meta;
  for (std::uint32_t i = 0; i < meta_count; ++i) {
    std::string key = r.str();
    meta[std::move(key)] = r.f64();
  }
  if (!r.done()) throw CheckpointError("trailing bytes after checkpoint payload");

  auto take = [&](const char* key) {
    auto it = meta.find(key);
    if (it == meta.end()) throw CheckpointError(std::string("missing metadata entry ") + key);
    const double v = it->second;
    meta.erase(it);
    return v;
  };
  AdamConfig& cfg = ck.optimizer.config;
  cfg.lr = static_cast<float>(take("adam.lr"));
  cfg.beta1 = static_cast<float>(take("adam.beta1"));
  cfg.beta2 = static_cast<float>(take("adam.beta2"));
  cfg.epsilon = static_cast<float>(take("adam.epsilon"));
  cfg.clip_norm = static_cast<float>(take("adam.clip_norm"));
  ck.optimizer.step = static_cast<std::uint64_t>(take("adam.step"));
  for (const auto& [k, v] : meta) {
    if (k.rfind(kAdamPrefix, 0) == 0) throw CheckpointError("unknown metadata entry " + k);
  }
  ck.metadata = std::move(meta);
  return ck;
}

void save_checkpoint(const std::filesystem::path& path, const Network& net,
                     const AdamState& optimizer, const std::map<std::string, double>& metadata) {
  const auto bytes = encode_checkpoint(net, optimizer, metadata);
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw CheckpointError("cannot open " + tmp.string() + " for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw CheckpointError("failed writing " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open checkpoint " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return decode_checkpoint(bytes);
}

Checkpoint load_checkpoint(const std::filesystem::path& path, const ArchSpec& expected) {
  Checkpoint ck = load_checkpoint(path);
  if (ck.network.spec().digest() != expected.digest()) {
    throw CheckpointError("shape mismatch: checkpoint " + path.string() +
                          " was written for a different architecture");
  }
  return ck;
}

}  // namespace lesionseg
