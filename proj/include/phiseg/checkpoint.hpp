// Copyright 2026 The PHiSeg Toolkit Authors
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
#include <optional>

#include "json.hpp"
#include "phiseg/config.hpp"
#include "phiseg/model.hpp"

namespace phiseg {

inline constexpr std::uint32_t kCheckpointFormatVersion = 1;

// Single-file weight archive:
//   "PHSG" | u32 format version | u64 metadata length | metadata JSON
//   | u32 tensor count | per tensor: u32 name length, name, u8 dtype,
//     u32 rank, i64 dims[rank], little-endian payload.
// The metadata always carries the ModelConfig under "model".
void save_weights(const std::filesystem::path& path, PHiSeg& model,
                  const nlohmann::json& extra_metadata = nlohmann::json::object());

struct LoadedWeights {
  PHiSeg model{nullptr};
  nlohmann::json metadata;
};

// Throws DimensionMismatch if `expected` is given and differs from the
// embedded config, IoError on malformed files.
LoadedWeights load_weights(const std::filesystem::path& path,
                           const std::optional<ModelConfig>& expected = std::nullopt);

nlohmann::json read_checkpoint_metadata(const std::filesystem::path& path);

}  // namespace phiseg
