// Copyright 2026 The fergrad Authors.
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
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fergrad/model.hpp"

namespace fergrad {

inline constexpr int kFormatVersion = 1;

struct SerializedModel {
  std::vector<std::uint8_t> blob;  // little-endian float32, state tensors in order
  std::string manifest;
};

std::uint64_t fnv1a64(std::span<const std::uint8_t> bytes);

SerializedModel serialize(Model<float>& model);

// Rebuilds the model described by the manifest and loads the blob into it.
// Throws kIntegrity on size or checksum mismatch, kFormat on a malformed or
// unsupported manifest.
Model<float> deserialize(std::span<const std::uint8_t> blob, std::string_view manifest);

// Writes <stem>.bin and <stem>.manifest.
void save_model(Model<float>& model, const std::filesystem::path& stem);
Model<float> load_model(const std::filesystem::path& stem);

// Spec text form used by the manifest: "key value" lines.
std::string spec_to_text(const ArchSpec& spec);

}  // namespace fergrad
