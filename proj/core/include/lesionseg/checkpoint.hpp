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
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "lesionseg/arch.hpp"
#include "lesionseg/network.hpp"
#include "lesionseg/optim.hpp"

namespace lesionseg {

/// Checkpoint file layout (all integers and floats little-endian):
///
///   "LSG1"                       magic
///   u32 version                  kCheckpointVersion
///   u64 spec digest              ArchSpec::digest() of the text below
///   u32 length, bytes            ArchSpec::serialize()
///   u64 network seed
///   u32 count, records           network state (parameters + BN buffers)
///   u32 count, records           optimizer moments "adam.m/<name>", "adam.v/<name>"
///   u32 count, entries           metadata: u32 length, name, f64 value
///
/// A record is: u32 name length, name bytes, 4 x u32 dims, f32 values.
/// Optimizer hyperparameters and the step counter are stored as metadata
/// entries under the reserved "adam." prefix.
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  Network network;
  AdamState optimizer;
  /// Training metadata (step, epoch, best score, ...); excludes "adam." keys.
  std::map<std::string, double> metadata;
};

std::vector<std::uint8_t> encode_checkpoint(const Network& net, const AdamState& optimizer,
                                            const std::map<std::string, double>& metadata = {});

/// Throws CheckpointError on bad magic/version, truncation, trailing bytes,
/// digest mismatch or records that do not fit the stored architecture.
Checkpoint decode_checkpoint(const std::vector<std::uint8_t>& bytes);

/// Writes via a temporary file and rename.
void save_checkpoint(const std::filesystem::path& path, const Network& net,
                     const AdamState& optimizer,
                     const std::map<std::string, double>& metadata = {});

Checkpoint load_checkpoint(const std::filesystem::path& path);

/// As load_checkpoint, additionally rejecting checkpoints whose
/// architecture differs from `expected`.
Checkpoint load_checkpoint(const std::filesystem::path& path, const ArchSpec& expected);

}  // namespace lesionseg
