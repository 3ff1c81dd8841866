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

#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include "gradcheck.hpp"
#include "lesionseg/checkpoint.hpp"
#include "lesionseg/errors.hpp"

namespace lesionseg {
namespace {

namespace fs = std::filesystem;

struct Trained {
  Network net;
  AdamState adam;
};

Trained trained_network(std::size_t size, std::uint64_t seed) {
  Rng rng(seed);
  Trained t{Network::build(ArchSpec::lesionseg_narrow(size, size, 8), seed), {}};
  const Tensor4 x = testing::random_tensor({2, 3, size, size}, rng);
  Labels labels(2, size, size);
  for (auto& v : labels.values) v = static_cast<std::uint8_t>(rng.below(2));
  for (int i = 0; i < 3; ++i) {
    t.net.backward(x, labels);
    adam_step(t.net.parameters(), t.adam);
  }
  return t;
}

std::vector<std::uint8_t> read_bytes(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

void write_bytes(const fs::path& p, const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(p, std::ios::binary);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "lesionseg_ckpt_test";
  fs::create_directories(dir);
  return dir / name;
}

TEST(Checkpoint, SaveLoadForwardIsBitIdentical) {
  Trained t = trained_network(16, 1);
  const fs::path path = scratch("roundtrip.lsg1");
  save_checkpoint(path, t.net, t.adam, {{"step", 3.0}, {"best_miou", 0.25}});
  const Checkpoint back = load_checkpoint(path, t.net.spec());

  Rng rng(77);
  const Tensor4 x = testing::random_tensor({2, 3, 16, 16}, rng);
  const Tensor4 a = t.net.infer(x);
  const Tensor4 b = back.network.infer(x);
  ASSERT_EQ(a.shape(), b.shape());
  for (std::size_t i = 0; i < a.size(); ++i) ASSERT_EQ(a[i], b[i]);

  const auto sa = t.net.state();
  const auto sb = back.network.state();
  ASSERT_EQ(sa.size(), sb.size());
  for (std::size_t i = 0; i < sa.size(); ++i) {
    EXPECT_EQ(sa[i].name, sb[i].name);
    for (std::size_t j = 0; j < sa[i].tensor->size(); ++j)
      ASSERT_EQ((*sa[i].tensor)[j], (*sb[i].tensor)[j]);
  }
  EXPECT_EQ(back.optimizer.step, 3u);
  EXPECT_EQ(back.optimizer.names, t.adam.names);
  EXPECT_EQ(back.optimizer.config.lr, t.adam.config.lr);
  for (std::size_t i = 0; i < t.adam.m.size(); ++i)
    for (std::size_t j = 0; j < t.adam.m[i].size(); ++j) {
      ASSERT_EQ(back.optimizer.m[i][j], t.adam.m[i][j]);
      ASSERT_EQ(back.optimizer.v[i][j], t.adam.v[i][j]);
    }
  EXPECT_EQ(back.metadata.at("step"), 3.0);
  EXPECT_EQ(back.metadata.at("best_miou"), 0.25);
  EXPECT_EQ(back.network.seed(), t.net.seed());
}

TEST(Checkpoint, EncodingIsDeterministic) {
  const Trained a = trained_network(16, 4);
  const Trained b = trained_network(16, 4);
  EXPECT_EQ(encode_checkpoint(a.net, a.adam), encode_checkpoint(b.net, b.adam));
  const fs::path p1 = scratch("det1.lsg1");
  const fs::path p2 = scratch("det2.lsg1");
  save_checkpoint(p1, a.net, a.adam);
  save_checkpoint(p2, b.net, b.adam);
  EXPECT_EQ(read_bytes(p1), read_bytes(p2));
}

TEST(Checkpoint, CorruptedFilesRejected) {
  const Trained t = trained_network(16, 2);
  const std::vector<std::uint8_t> good = encode_checkpoint(t.net, t.adam);
  ASSERT_NO_THROW(decode_checkpoint(good));

  auto bad_magic = good;
  bad_magic[0] ^= 0xff;
  EXPECT_THROW(decode_checkpoint(bad_magic), CheckpointError);

  auto bad_version = good;
  bad_version[4] = 99;
  EXPECT_THROW(decode_checkpoint(bad_version), CheckpointError);

  for (std::size_t cut : {std::size_t{0}, std::size_t{3}, std::size_t{10}, good.size() / 2,
                          good.size() - 1}) {
    const std::vector<std::uint8_t> truncated(good.begin(), good.begin() + static_cast<long>(cut));
    EXPECT_THROW(decode_checkpoint(truncated), CheckpointError) << "cut at " << cut;
  }

  auto trailing = good;
  trailing.push_back(0);
  EXPECT_THROW(decode_checkpoint(trailing), CheckpointError);

  // Flip a byte inside the embedded architecture text so the digest disagrees.
  auto bad_spec = good;
  bad_spec[4 + 4 + 8 + 4 + 5] ^= 0x01;
  EXPECT_THROW(decode_checkpoint(bad_spec), CheckpointError);

  const fs::path path = scratch("corrupt.lsg1");
  write_bytes(path, bad_magic);
  EXPECT_THROW(load_checkpoint(path), CheckpointError);
  EXPECT_THROW(load_checkpoint(scratch("missing.lsg1")), CheckpointError);
}

TEST(Checkpoint, ArchitectureMismatchReported) {
  const Trained t = trained_network(16, 3);
  const fs::path path = scratch("mismatch.lsg1");
  save_checkpoint(path, t.net, t.adam);
  try {
    load_checkpoint(path, ArchSpec::lesionseg(16, 16));
    FAIL() << "expected CheckpointError";
  } catch (const CheckpointError& e) {
    EXPECT_NE(std::string(e.what()).find("shape mismatch"), std::string::npos);
  }
}

}  // namespace
}  // namespace lesionseg
