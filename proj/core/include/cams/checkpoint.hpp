// Copyright 2026 The CAMS Authors. All Rights Reserved.
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

#include "cams/model.hpp"

namespace cams {

// Binary layout (little-endian host order):
//   "CAMSCKPT" | u32 format version | u64 config hash | u32 sizeof(Real)
//   | u64 parameter count | per parameter: u32 name length, name bytes,
//     u32 rank, u64 dims[rank], raw values | u64 FNV-1a of everything before.
inline constexpr std::uint32_t kCheckpointVersion = 1;

void save_checkpoint(const CamsModel& model, std::uint64_t config_hash,
                     const std::filesystem::path& path);

// Restores every parameter of `model` in place. Throws ParseError on a
// malformed or truncated file, VersionError when the stored config hash (or
// format version, or scalar width) differs from the expected one.
void load_checkpoint(const std::filesystem::path& path, CamsModel& model,
                     std::uint64_t expected_hash);

// Config hash stored in a checkpoint header, without loading parameters.
std::uint64_t checkpoint_config_hash(const std::filesystem::path& path);

}  // namespace cams
