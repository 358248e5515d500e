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

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fergrad/filters.hpp"
#include "fergrad/model.hpp"
#include "fergrad/random.hpp"

namespace fergrad {

inline constexpr int kFerplusClasses = 8;
inline constexpr int kKdefClasses = 7;
inline constexpr std::int64_t kInputSize = 64;

// FERplus column order: 8 emotions, then unknown and not-a-face.
inline constexpr std::array<std::string_view, 10> kVoteColumns = {
    "neutral", "happiness", "surprise", "sadness", "anger",
    "disgust", "fear",      "contempt", "unknown", "NF"};
inline constexpr std::array<std::string_view, 7> kKdefClassNames = {
    "neutral", "anger", "disgust", "fear", "happiness", "sadness", "surprise"};

enum class Usage { kTraining, kPublicTest, kPrivateTest };
std::string_view usage_name(Usage u);

struct VoteRecord {
  std::string image_id;
  Usage usage = Usage::kTraining;
  std::array<int, 10> votes{};
};

// Winning emotion index in [0, 8), or nullopt when an unknown/not-a-face
// column reaches the maximum. Emotion ties go to the lowest column.
std::optional<int> majority_vote(const VoteRecord& rec);

// `row` names the record in error messages.
Image parse_pixels(std::string_view field, std::int64_t h, std::int64_t w,
                   std::string_view row = "");

struct Sample {
  Image image;  // raw range, single channel
  int label = 0;
  std::string source_id;
};

struct DatasetSplit {
  std::vector<Sample> train, validation, test;
  int num_classes = 0;
  std::string provenance;
  std::int64_t rejected = 0;        // majority-vote rejects
  std::int64_t skipped = 0;         // unparseable file names
  std::int64_t vote_warnings = 0;   // vote rows not summing to 10

  std::vector<std::int64_t> class_counts(const std::vector<Sample>& part) const;
};

DatasetSplit load_ferplus(const std::filesystem::path& pixels_csv,
                          const std::filesystem::path& votes_csv);

struct KdefName {
  std::string subject;  // gender letter + number, shared across sessions
  int label = 0;
  std::string angle;    // S, HL, HR, FL, FR
};
std::optional<KdefName> parse_kdef_stem(std::string_view stem);

struct KdefOptions {
  bool straight_only = true;
  std::uint64_t seed = 0;
  std::int64_t size = kInputSize;
};
DatasetSplit load_kdef(const std::filesystem::path& root, const KdefOptions& opts = {});

// Grayscale decode of PGM/PPM (P2, P3, P5, P6) or baseline JPEG.
Image read_image_gray(const std::filesystem::path& path);
void write_pgm(const Image& img, const std::filesystem::path& path);

// Per-stream model inputs for one raw image: resized to `size`, derivative
// images taken from the resized raw image, then every channel normalized with
// the same map. Concat variants give one image, parallel variants one per stream.
std::vector<Image> assemble_variant(const Image& raw, Variant variant,
                                    std::int64_t size = kInputSize,
                                    NormalizeMode mode = NormalizeMode::kUnit);

// Samples stacked into per-stream float tensors [N, H, W, C].
struct PreparedSet {
  std::vector<Tensor<float>> streams;
  std::vector<int> labels;
  int num_classes = 0;

  std::int64_t size() const { return static_cast<std::int64_t>(labels.size()); }
};

PreparedSet prepare(const std::vector<Sample>& samples, Variant variant, int num_classes,
                    std::int64_t size = kInputSize);

// Rows of `set` at `indices`, one tensor per stream.
std::vector<Tensor<float>> gather(const PreparedSet& set, std::span<const std::size_t> indices);
std::vector<int> gather_labels(const PreparedSet& set, std::span<const std::size_t> indices);

// Fisher-Yates with the kit's generator, so orders do not depend on the
// standard library's distributions.
void shuffle_indices(std::vector<std::size_t>& idx, Rng& rng);

// Each start_epoch() draws a fresh permutation from the seeded generator; the
// last partial batch is kept.
class BatchIterator {
 public:
  BatchIterator(std::size_t count, std::size_t batch_size, std::uint64_t seed);
  void start_epoch();
  bool next(std::span<const std::size_t>& batch);
  std::size_t batches_per_epoch() const;

 private:
  std::size_t count_, batch_;
  Rng rng_;
  std::vector<std::size_t> order_;
  std::size_t pos_ = 0;
};

BatchIterator shuffle_batches(std::size_t count, std::size_t batch_size, std::uint64_t seed);

// Synthetic 8-class sets at 64x64 raw range.
// Oriented bars: class k is a square-wave grating at k * 22.5 degrees with
// random period, phase and pixel noise.
DatasetSplit synthetic_bars(std::int64_t train_per_class, std::int64_t val_per_class,
                            std::int64_t test_per_class, std::uint64_t seed);
// Directional ramps: class k is a sawtooth along k * 45 degrees (slow rise,
// sharp drop) with random period, phase, brightness offset and pixel noise.
// Class means match, so only the direction of change separates classes.
DatasetSplit synthetic_ramps(std::int64_t train_per_class, std::int64_t val_per_class,
                             std::int64_t test_per_class, std::uint64_t seed);

// Writes <dir>/<split>_s<i>.f32 (little-endian float32), <split>_labels.txt and
// <split>.manifest.
void write_prepared(const PreparedSet& set, const std::string& split,
                    const std::filesystem::path& dir);

}  // namespace fergrad
