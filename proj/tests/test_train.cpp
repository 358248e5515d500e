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

#include <gtest/gtest.h>

#include <cmath>

#include "fergrad/train.hpp"

namespace fergrad {
namespace {

using F = Tensor<double>;

void step(F& p, std::vector<double> g, AdamMoments<double>& mom, std::int64_t t, const AdamConfig& cfg) {
  std::vector<Tensor<double>> params{p};
  std::vector<std::span<const double>> grads{std::span<const double>(g)};
  adam_step<double>(params, grads, mom, t, cfg);
}

TEST(Adam, SingleStepMovesByLearningRate) {
  F p(Shape{1}, 0.5);
  std::vector<Tensor<double>> ps{p};
  auto mom = AdamMoments<double>::zeros_like(ps);
  step(p, {1.0}, mom, 1, AdamConfig{});
  EXPECT_NEAR(0.5 - p[0], 1e-3, 1e-8);
}

TEST(Adam, ZeroGradientFromFreshStateIsNoOp) {
  F p(Shape{3}, std::vector<double>{1.0, -2.0, 0.125});
  std::vector<Tensor<double>> ps{p};
  auto mom = AdamMoments<double>::zeros_like(ps);
  for (int t = 1; t <= 5; ++t) step(p, {0, 0, 0}, mom, t, AdamConfig{});
  EXPECT_EQ(p[0], 1.0);
  EXPECT_EQ(p[1], -2.0);
  EXPECT_EQ(p[2], 0.125);
  // Empty gradient spans count as zero.
  std::vector<std::span<const double>> none{std::span<const double>()};
  adam_step<double>(ps, none, mom, 6, AdamConfig{});
  EXPECT_EQ(p[0], 1.0);
}

TEST(Adam, MomentsDecayUnderZeroGradient) {
  F p(Shape{1}, 0.0);
  std::vector<Tensor<double>> ps{p};
  auto mom = AdamMoments<double>::zeros_like(ps);
  step(p, {2.0}, mom, 1, AdamConfig{});
  const double m1 = mom.m[0][0], v1 = mom.v[0][0];
  step(p, {0.0}, mom, 2, AdamConfig{});
  EXPECT_NEAR(mom.m[0][0], 0.9 * m1, 1e-15);
  EXPECT_NEAR(mom.v[0][0], 0.999 * v1, 1e-15);
}

TEST(Adam, ConstantGradientStepTendsToLearningRate) {
  F p(Shape{1}, 0.0);
  std::vector<Tensor<double>> ps{p};
  auto mom = AdamMoments<double>::zeros_like(ps);
  double prev = 0;
  for (int t = 1; t <= 2000; ++t) {
    prev = p[0];
    step(p, {0.3}, mom, t, AdamConfig{});
  }
  EXPECT_NEAR(prev - p[0], 1e-3, 1e-7);
}

TEST(Adam, InvalidConfig) {
  AdamConfig cfg;
  cfg.lr = 0;
  EXPECT_THROW(cfg.validate(), Error);
  cfg = AdamConfig{};
  cfg.beta1 = 1.0;
  EXPECT_THROW(cfg.validate(), Error);
  F p(Shape{1});
  std::vector<Tensor<double>> ps{p};
  auto mom = AdamMoments<double>::zeros_like(ps);
  EXPECT_THROW(step(p, {1.0}, mom, 0, AdamConfig{}), Error);
}

TEST(Evaluate, ConstantPredictorOnBalancedSet) {
  Tensor<float> logits(Shape{16, 8});
  std::vector<int> labels;
  for (int i = 0; i < 16; ++i) {
    logits[i * 8] = 1.0f;
    labels.push_back(i % 8);
  }
  auto r = evaluate_logits(logits, labels, 8);
  EXPECT_DOUBLE_EQ(r.accuracy, 12.5);
  EXPECT_EQ(r.count, 16);
  for (int k = 0; k < 8; ++k) EXPECT_EQ(r.confusion[k][0], 2);
}

TEST(Evaluate, PerfectLogitsGiveDiagonal) {
  Tensor<float> logits(Shape{14, 7});
  std::vector<int> labels;
  for (int i = 0; i < 14; ++i) {
    logits[i * 7 + i % 7] = 5.0f;
    labels.push_back(i % 7);
  }
  auto r = evaluate_logits(logits, labels, 7);
  EXPECT_DOUBLE_EQ(r.accuracy, 100.0);
  for (int a = 0; a < 7; ++a)
    for (int b = 0; b < 7; ++b) EXPECT_EQ(r.confusion[a][b], a == b ? 2 : 0);
  std::vector<int> short_labels(3, 0);
  EXPECT_THROW(evaluate_logits(logits, short_labels, 7), Error);
}

TEST(MultiRun, StubArithmetic) {
  TrainConfig cfg;
  cfg.seed = 10;
  std::vector<std::uint64_t> seeds;
  auto stub = [&](const TrainConfig& c) {
    seeds.push_back(c.seed);
    RunOutcome o;
    o.test_accuracy = 80.0 + 2.0 * static_cast<double>(c.seed - 10);
    return o;
  };
  auto rep = multi_run(cfg, 4, stub);
  EXPECT_DOUBLE_EQ(rep.avg, 83.0);
  EXPECT_DOUBLE_EQ(rep.min, 80.0);
  EXPECT_DOUBLE_EQ(rep.max, 86.0);
  EXPECT_EQ(seeds, (std::vector<std::uint64_t>{10, 11, 12, 13}));
  EXPECT_EQ(rep.ledger_total, 645472);
  auto one = multi_run(cfg, 1, stub);
  EXPECT_EQ(one.avg, one.min);
  EXPECT_EQ(one.avg, one.max);
  EXPECT_THROW(multi_run(cfg, 0, stub), Error);
  EXPECT_NE(rep.table_row().find("83.00"), std::string::npos);
}

TEST(Config, FingerprintTracksFields) {
  TrainConfig a, b;
  EXPECT_EQ(config_fingerprint(a), config_fingerprint(b));
  b.adam.lr = 2e-3;
  EXPECT_NE(config_fingerprint(a), config_fingerprint(b));
  b = a;
  b.bn_momentum = 0.9;
  EXPECT_NE(config_fingerprint(a), config_fingerprint(b));
  a.batch = 0;
  EXPECT_THROW(a.validate(), Error);
}

TrainConfig tiny_config() {
  TrainConfig cfg;
  cfg.dataset = "synthetic";
  cfg.epochs = 1;
  cfg.batch = 8;
  cfg.seed = 5;
  return cfg;
}

TEST(Train, ZeroEpochsReturnsFreshModel) {
  auto split = synthetic_bars(1, 1, 0, 2);
  auto cfg = tiny_config();
  cfg.epochs = 0;
  auto res = train(cfg, split);
  EXPECT_TRUE(res.history.empty());
  EXPECT_EQ(res.best_epoch, 0);
  auto fresh = Model<float>::build(cfg.arch_spec(8), cfg.seed);
  auto a = res.model.state(), b = fresh.state();
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::int64_t j = 0; j < a[i].tensor.numel(); ++j) ASSERT_EQ(a[i].tensor[j], b[i].tensor[j]);
}

TEST(Train, EmptyTrainingSplitFails) {
  DatasetSplit split;
  split.num_classes = 8;
  EXPECT_THROW(train(tiny_config(), split), Error);
}

TEST(Train, DeterministicWeights) {
  auto split = synthetic_bars(2, 1, 0, 3);
  auto cfg = tiny_config();
  auto a = train(cfg, split), b = train(cfg, split);
  ASSERT_EQ(a.history.size(), 1u);
  EXPECT_EQ(a.history[0].train_loss, b.history[0].train_loss);
  EXPECT_TRUE(std::isfinite(a.history[0].train_loss));
  EXPECT_GE(a.history[0].val_accuracy, 0.0);
  auto sa = a.model.state(), sb = b.model.state();
  for (std::size_t i = 0; i < sa.size(); ++i)
    for (std::int64_t j = 0; j < sa[i].tensor.numel(); ++j) ASSERT_EQ(sa[i].tensor[j], sb[i].tensor[j]);
}

TEST(Train, CallbackStopsEarly) {
  auto split = synthetic_bars(1, 0, 0, 3);
  auto cfg = tiny_config();
  cfg.epochs = 5;
  int calls = 0;
  auto res = train(cfg, split, [&](const EpochRecord&, Model<float>&) { return ++calls < 2; });
  EXPECT_EQ(calls, 2);
  EXPECT_EQ(res.history.size(), 2u);
}

}  // namespace
}  // namespace fergrad
