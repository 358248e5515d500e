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

#include <algorithm>

#include "fergrad/filters.hpp"
#include "fergrad/random.hpp"
#include "oracles.hpp"

namespace fergrad {
namespace {

using namespace oracle;

void expect_equal(const Image& a, const Image& b) {
  ASSERT_EQ(a.data.shape(), b.data.shape());
  for (std::int64_t i = 0; i < a.data.numel(); ++i) ASSERT_EQ(a.data[i], b.data[i]) << "at " << i;
}

TEST(Sobel, ConstantGivesZero) {
  Image img(6, 7, 1);
  for (auto& v : img.data.data()) v = 7;
  auto [gx, gy] = sobel(img);
  for (double v : gx.data.data()) EXPECT_EQ(v, 0.0);
  for (double v : gy.data.data()) EXPECT_EQ(v, 0.0);
}

TEST(Sobel, HorizontalRamp) {
  Image img(5, 6, 1);
  for (std::int64_t y = 0; y < 5; ++y)
    for (std::int64_t x = 0; x < 6; ++x) img.at(y, x) = static_cast<double>(x);
  auto [gx, gy] = sobel(img);
  for (std::int64_t y = 1; y < 4; ++y)
    for (std::int64_t x = 1; x < 5; ++x) {
      EXPECT_EQ(gx.at(y, x), 8.0);
      EXPECT_EQ(gy.at(y, x), 0.0);
    }
}

TEST(Sobel, MatchesOracle) {
  Rng rng(11);
  for (int i = 0; i < 50; ++i) {
    auto img = random_image(5, 5, rng);
    auto [gx, gy] = sobel(img);
    expect_equal(gx, correlate(img, kKx));
    expect_equal(gy, correlate(img, kKy));
  }
}

TEST(Sobel, Errors) {
  EXPECT_THROW(sobel(Image(5, 5, 2)), Error);
  EXPECT_THROW(sobel(Image(2, 5, 1)), Error);
  EXPECT_THROW(laplacian(Image(5, 2, 1)), Error);
}

TEST(Laplacian, ConstantAndAffineVanish) {
  Image c(5, 5, 1), ramp(6, 6, 1);
  for (auto& v : c.data.data()) v = 3;
  for (std::int64_t y = 0; y < 6; ++y)
    for (std::int64_t x = 0; x < 6; ++x) ramp.at(y, x) = 3.0 * x + 2.0 * y;
  const Image lc = laplacian(c);
  for (double v : lc.data.data()) EXPECT_EQ(v, 0.0);
  auto l = laplacian(ramp);
  for (std::int64_t y = 1; y < 5; ++y)
    for (std::int64_t x = 1; x < 5; ++x) EXPECT_EQ(l.at(y, x), 0.0);
}

TEST(Laplacian, MatchesOracle) {
  Rng rng(12);
  for (int i = 0; i < 50; ++i) {
    auto img = random_image(5, 5, rng);
    expect_equal(laplacian(img), correlate(img, kLap));
  }
}

TEST(Filters, Linear) {
  Rng rng(13);
  for (int i = 0; i < 20; ++i) {
    auto f = random_image(6, 5, rng), g = random_image(6, 5, rng);
    const double a = static_cast<double>(uniform_index(rng, 7)) - 3;
    const double b = static_cast<double>(uniform_index(rng, 7)) - 3;
    Image mix(6, 5, 1);
    for (std::int64_t j = 0; j < mix.data.numel(); ++j) mix.data[j] = a * f.data[j] + b * g.data[j];
    auto lm = laplacian(mix), lf = laplacian(f), lg = laplacian(g);
    auto [sm, unused_m] = sobel(mix);
    auto [sf, unused_f] = sobel(f);
    auto [sg, unused_g] = sobel(g);
    for (std::int64_t j = 0; j < mix.data.numel(); ++j) {
      EXPECT_EQ(lm.data[j], a * lf.data[j] + b * lg.data[j]);
      EXPECT_EQ(sm.data[j], a * sf.data[j] + b * sg.data[j]);
    }
  }
}

TEST(Resize, ShapeIdentityAndCheckerboard) {
  Rng rng(14);
  auto img = random_image(48, 48, rng);
  auto big = resize_bilinear(img, 64, 64);
  EXPECT_EQ(big.data.shape(), (Shape{64, 64, 1}));

  auto small = random_image(5, 5, rng);
  expect_equal(resize_bilinear(small, 5, 5), small);

  Image cb(2, 2, 1);
  cb.at(0, 1) = 255;
  cb.at(1, 0) = 255;
  EXPECT_EQ(resize_bilinear(cb, 3, 3).at(1, 1), 127.5);

  EXPECT_THROW(resize_bilinear(cb, 0, 3), Error);
}

TEST(Resize, ConstantPreserved) {
  Image c(7, 9, 1);
  for (auto& v : c.data.data()) v = 93.25;
  const Image r = resize_bilinear(c, 13, 4);
  for (double v : r.data.data()) EXPECT_EQ(v, 93.25);
}

TEST(Concat, OrderAndRecovery) {
  Rng rng(15);
  auto a = random_image(4, 4, rng), b = random_image(4, 4, rng), c = random_image(4, 4, rng);
  auto abc = concat_channels({a, b, c});
  EXPECT_EQ(abc.channels(), 3);
  expect_equal(abc.channel(0), a);
  expect_equal(abc.channel(1), b);
  expect_equal(abc.channel(2), c);
  expect_equal(concat_channels({a}), a);
  EXPECT_THROW(concat_channels({a, random_image(4, 5, rng)}), Error);
}

TEST(Normalize, Endpoints) {
  Image img(1, 3, 1);
  img.at(0, 0) = 255;
  img.at(0, 1) = 0;
  img.at(0, 2) = 127.5;
  auto u = normalize(img, NormalizeMode::kUnit);
  auto s = normalize(img, NormalizeMode::kSigned);
  EXPECT_EQ(u.at(0, 0), 1.0);
  EXPECT_EQ(s.at(0, 1), -1.0);
  EXPECT_EQ(s.at(0, 2), 0.0);
  EXPECT_TRUE(u.within_declared_range());
  EXPECT_TRUE(s.within_declared_range());
}

TEST(Normalize, DerivativeChannelsShareMap) {
  Rng rng(16);
  auto img = random_image(6, 6, rng);
  auto lap = laplacian(img);
  auto both = normalize(concat_channels({img, lap}), NormalizeMode::kUnit);
  for (std::int64_t y = 0; y < 6; ++y)
    for (std::int64_t x = 0; x < 6; ++x) EXPECT_EQ(both.at(y, x, 1), lap.at(y, x) / 255.0);
}

}  // namespace
}  // namespace fergrad
