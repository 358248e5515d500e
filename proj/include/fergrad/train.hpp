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
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "fergrad/data.hpp"
#include "fergrad/model.hpp"

namespace fergrad {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  void validate() const;
};

template <typename T>
struct AdamMoments {
  std::vector<std::vector<T>> m, v;

  static AdamMoments zeros_like(std::span<const Tensor<T>> params);
};

// One bias-corrected Adam update at step t >= 1. A parameter with an empty
// gradient span is treated as having a zero gradient.
template <typename T>
void adam_step(std::span<Tensor<T>> params, std::span<const std::span<const T>> grads,
               AdamMoments<T>& moments, std::int64_t t, const AdamConfig& cfg);

struct TrainConfig {
  std::string arch = "base";
  Variant variant = Variant::kPlain;
  bool stl = false;
  bool shared_backbone = false;
  AdamConfig adam;
  std::int64_t batch = 32;
  std::int64_t epochs = 30;
  double bn_momentum = 0.99;
  std::uint64_t seed = 0;
  std::string dataset = "ferplus";  // ferplus, kdef or synthetic
  std::filesystem::path data_dir;
  std::filesystem::path checkpoint;  // model stem; empty disables saving

  void validate() const;
  ArchSpec arch_spec(int num_classes) const;
  // Canonical text of every field, used for fingerprints.
  std::string canonical() const;
};

struct EpochRecord {
  std::int64_t epoch = 0;  // 1-based
  double train_loss = 0;   // mean over batches
  double train_accuracy = 0;
  double val_accuracy = -1;  // -1 when there is no validation set
};

struct TrainResult {
  Model<float> model;
  std::vector<EpochRecord> history;
  std::int64_t best_epoch = 0;  // 0: initial weights kept
};

// Return false to stop after the current epoch.
using EpochCallback = std::function<bool(const EpochRecord&, Model<float>&)>;

TrainResult train(const TrainConfig& cfg, const PreparedSet& train_set, const PreparedSet& val_set,
                  const EpochCallback& on_epoch = nullptr);
TrainResult train(const TrainConfig& cfg, const DatasetSplit& split,
                  const EpochCallback& on_epoch = nullptr);

struct EvalResult {
  double accuracy = 0;  // percent
  std::vector<std::vector<std::int64_t>> confusion;  // rows true, columns predicted
  std::int64_t count = 0;
};

EvalResult evaluate_logits(const Tensor<float>& logits, std::span<const int> labels, int classes);
EvalResult evaluate(Model<float>& model, const PreparedSet& set, std::int64_t batch = 64);

struct RunOutcome {
  double test_accuracy = 0;
  EvalResult test;
  std::vector<EpochRecord> history;
};

struct RunReport {
  std::string label;
  std::vector<double> accuracies;
  double avg = 0, min = 0, max = 0;
  std::int64_t ledger_total = 0;
  std::string fingerprint;
  std::vector<std::vector<std::int64_t>> best_confusion;
  std::vector<std::vector<EpochRecord>> histories;

  static std::string table_header();
  std::string table_row() const;
  // One "run epoch split metric value" record per line.
  std::string records() const;
  void write_records(const std::filesystem::path& path) const;
};

using Trainer = std::function<RunOutcome(const TrainConfig&)>;

// Runs `runs` trainings with seeds cfg.seed + i and aggregates test accuracy.
RunReport multi_run(const TrainConfig& cfg, std::int64_t runs, const Trainer& trainer);

// Trainer over a fixed split; the split is prepared once per call.
Trainer split_trainer(const DatasetSplit& split);

std::string config_fingerprint(const TrainConfig& cfg);
std::string variant_label(const TrainConfig& cfg);

}  // namespace fergrad
