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

#include <filesystem>
#include <string>
#include <vector>

#include "fergrad.h"

namespace {

std::string take(fg_string* s) {
  std::string out = fg_string_data(s);
  fg_string_destroy(s);
  return out;
}

TEST(CApi, CountParams) {
  fg_string* table = nullptr;
  int64_t total = 0;
  ASSERT_EQ(fg_count_params("base", "plain", 0, 8, &table, &total), FG_OK);
  EXPECT_EQ(total, 645472);
  auto text = take(table);
  EXPECT_EQ(text.rfind("Total 645472"), text.size() - std::string("Total 645472\n").size());
  ASSERT_EQ(fg_count_params("base", "sobel-concat", 0, 8, &table, &total), FG_OK);
  fg_string_destroy(table);
  EXPECT_EQ(total, 645472 + 864);
}

TEST(CApi, ErrorsCarryMessages) {
  fg_string* table = nullptr;
  int64_t total = 0;
  EXPECT_EQ(fg_count_params("resnet", "plain", 0, 8, &table, &total), FG_INVALID_ARGUMENT);
  EXPECT_NE(std::string(fg_last_error()).find("resnet"), std::string::npos);
  EXPECT_EQ(fg_count_params(nullptr, "plain", 0, 8, &table, &total), FG_INVALID_ARGUMENT);
  EXPECT_STREQ(fg_status_name(FG_INTEGRITY), "integrity error");
  fg_model* m = nullptr;
  EXPECT_EQ(fg_model_load("/nonexistent/stem", &m), FG_IO);
  EXPECT_EQ(m, nullptr);
}

TEST(CApi, Audit) {
  fg_string* rep = nullptr;
  int bad = -1;
  ASSERT_EQ(fg_audit_base(&rep, &bad), FG_OK);
  EXPECT_EQ(bad, 0);
  fg_string_destroy(rep);
}

TEST(CApi, ModelRoundTrip) {
  fg_model* m = nullptr;
  ASSERT_EQ(fg_model_build("base", "laplacian-parallel", 0, 8, 4, &m), FG_OK);
  int64_t led = 0, aux = 0;
  ASSERT_EQ(fg_model_param_count(m, &led, &aux), FG_OK);
  EXPECT_EQ(led, 2 * (645472 - 2048) + 512 * 8);
  std::vector<float> x(2 * 64 * 64, 0.25f);
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = static_cast<float>(i % 17) / 17.0f;
  std::vector<float> a(8), b(8);
  ASSERT_EQ(fg_model_forward(m, x.data(), 1, a.data(), 8), FG_OK);
  EXPECT_EQ(fg_model_forward(m, x.data(), 1, a.data(), 4), FG_SHAPE_MISMATCH);

  const auto stem = (std::filesystem::temp_directory_path() / "fergrad_capi_model").string();
  ASSERT_EQ(fg_model_save(m, stem.c_str()), FG_OK);
  fg_model* back = nullptr;
  ASSERT_EQ(fg_model_load(stem.c_str(), &back), FG_OK);
  ASSERT_EQ(fg_model_forward(back, x.data(), 1, b.data(), 8), FG_OK);
  EXPECT_EQ(a, b);
  fg_model_destroy(back);
  fg_model_destroy(m);
  std::filesystem::remove(stem + ".bin");
  std::filesystem::remove(stem + ".manifest");
}

TEST(CApi, TrainEvaluateAndReport) {
  fg_dataset* ds = nullptr;
  ASSERT_EQ(fg_dataset_synthetic("bars", 1, 1, 1, 3, &ds), FG_OK);
  fg_string* summary = nullptr;
  ASSERT_EQ(fg_dataset_summary(ds, &summary), FG_OK);
  EXPECT_FALSE(take(summary).empty());

  fg_train_config cfg;
  fg_train_config_defaults(&cfg);
  EXPECT_DOUBLE_EQ(cfg.bn_momentum, 0.99);
  cfg.dataset = "synthetic";
  cfg.epochs = 1;
  cfg.batch = 8;
  fg_model* m = nullptr;
  fg_string* hist = nullptr;
  ASSERT_EQ(fg_train(&cfg, ds, &m, &hist), FG_OK) << fg_last_error();
  EXPECT_NE(take(hist).find("0 1 train loss"), std::string::npos);
  double acc = -1;
  fg_string* conf = nullptr;
  ASSERT_EQ(fg_evaluate(m, ds, &acc, &conf), FG_OK);
  EXPECT_GE(acc, 0.0);
  EXPECT_LE(acc, 100.0);
  fg_string_destroy(conf);
  fg_model_destroy(m);

  cfg.epochs = 0;
  fg_report* rep = nullptr;
  ASSERT_EQ(fg_multi_run(&cfg, ds, 2, &rep), FG_OK);
  fg_string* table = nullptr;
  ASSERT_EQ(fg_report_table(rep, &table), FG_OK);
  EXPECT_NE(take(table).find("645472"), std::string::npos);
  fg_report_destroy(rep);

  cfg.bn_momentum = 1.5;
  EXPECT_EQ(fg_train(&cfg, ds, &m, &hist), FG_INVALID_ARGUMENT);
  fg_dataset_destroy(ds);
}

}  // namespace
