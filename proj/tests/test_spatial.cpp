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

#include "fergrad/random.hpp"
#include "fergrad/spatial_transformer.hpp"

namespace fergrad {
namespace {

using D = Tensor<double>;

D theta(double a, double b, double tx, double c, double d, double ty) {
  return D(Shape{1, 2, 3}, std::vector<double>{a, b, tx, c, d, ty});
}

D ramp_image(std::int64_t h, std::int64_t w) {
  D img(Shape{1, h, w, 1});
  for (std::int64_t i = 0; i < h * w; ++i) img[i] = static_cast<double>(i);
  return img;
}

double lattice(std::int64_t i, std::int64_t n) { return 2.0 * static_cast<double>(i) / static_cast<double>(n - 1) - 1.0; }

TEST(AffineGrid, IdentityIsLattice) {
  auto g = affine_grid<double>(nullptr, theta(1, 0, 0, 0, 1, 0), 4, 5);
  ASSERT_EQ(g.shape(), (Shape{1, 4, 5, 2}));
  for (std::int64_t y = 0; y < 4; ++y)
    for (std::int64_t x = 0; x < 5; ++x) {
      EXPECT_NEAR(g[(y * 5 + x) * 2], lattice(x, 5), 1e-15);
      EXPECT_NEAR(g[(y * 5 + x) * 2 + 1], lattice(y, 4), 1e-15);
    }
}

TEST(AffineGrid, ZoomAndTranslation) {
  auto z = affine_grid<double>(nullptr, theta(0.5, 0, 0, 0, 0.5, 0), 3, 3);
  EXPECT_NEAR(z[0], -0.5, 1e-15);
  EXPECT_NEAR(z[z.numel() - 1], 0.5, 1e-15);
  auto t = affine_grid<double>(nullptr, theta(1, 0, 0.25, 0, 1, -0.5), 3, 3);
  auto id = affine_grid<double>(nullptr, theta(1, 0, 0, 0, 1, 0), 3, 3);
  for (std::int64_t i = 0; i < t.numel(); i += 2) {
    EXPECT_NEAR(t[i] - id[i], 0.25, 1e-15);
    EXPECT_NEAR(t[i + 1] - id[i + 1], -0.5, 1e-15);
  }
}

TEST(AffineGrid, RejectsBadTheta) {
  EXPECT_THROW(affine_grid<double>(nullptr, D(Shape{1, 3, 3}), 2, 2), Error);
  EXPECT_THROW(affine_grid<double>(nullptr, D(Shape{1, 2, 3}), 0, 2), Error);
}

TEST(BilinearSample, IdentityIsExact) {
  Rng rng(1);
  for (std::int64_t n : {2, 3, 7, 48, 64}) {
    D img(Shape{1, n, n, 2});
    for (auto& v : img.data()) v = standard_normal(rng);
    auto out = bilinear_sample<double>(nullptr, img, affine_grid<double>(nullptr, theta(1, 0, 0, 0, 1, 0), n, n));
    for (std::int64_t i = 0; i < img.numel(); ++i) ASSERT_EQ(out[i], img[i]) << "n=" << n << " i=" << i;
  }
}

TEST(BilinearSample, HalfPixelShiftAverages) {
  D img = ramp_image(1, 3);  // values 0 1 2 along x
  D grid(Shape{1, 1, 1, 2}, std::vector<double>{-0.5, -1.0});
  EXPECT_NEAR(bilinear_sample<double>(nullptr, img, grid)[0], 0.5, 1e-15);
}

TEST(BilinearSample, OutsideReadsZero) {
  D img(Shape{1, 4, 4, 1}, 7.0);
  D grid(Shape{1, 1, 2, 2}, std::vector<double>{5.0, 0.0, 0.0, -9.0});
  auto out = bilinear_sample<double>(nullptr, img, grid);
  EXPECT_EQ(out[0], 0.0);
  EXPECT_EQ(out[1], 0.0);
}

TEST(BilinearSample, LinearInImage) {
  Rng rng(2);
  D a(Shape{1, 5, 6, 1}), b(Shape{1, 5, 6, 1}), grid(Shape{1, 3, 3, 2});
  for (auto& v : a.data()) v = standard_normal(rng);
  for (auto& v : b.data()) v = standard_normal(rng);
  for (auto& v : grid.data()) v = uniform(rng, -1.2, 1.2);
  D comb(a.shape());
  for (std::int64_t i = 0; i < a.numel(); ++i) comb[i] = 2.0 * a[i] - 3.0 * b[i];
  auto sa = bilinear_sample<double>(nullptr, a, grid), sb = bilinear_sample<double>(nullptr, b, grid);
  auto sc = bilinear_sample<double>(nullptr, comb, grid);
  for (std::int64_t i = 0; i < sc.numel(); ++i) EXPECT_NEAR(sc[i], 2.0 * sa[i] - 3.0 * sb[i], 1e-12);
}

TEST(Stl, FreshTransformerIsExactIdentity) {
  Rng rng(3);
  auto net = LocNet<double>::create(64, 64, 1, rng);
  for (int trial = 0; trial < 3; ++trial) {
    D img(Shape{2, 64, 64, 1});
    for (auto& v : img.data()) v = uniform(rng, 0.0, 1.0);
    auto out = stl_forward<double>(nullptr, img, net);
    ASSERT_EQ(out.shape(), img.shape());
    for (std::int64_t i = 0; i < img.numel(); ++i) ASSERT_EQ(out[i], img[i]);
  }
}

TEST(Stl, ParamCountMatchesCreated) {
  Rng rng(4);
  auto net = LocNet<float>::create(64, 64, 1, rng);
  const std::int64_t created = net.conv1.kernel.numel() + net.conv1.bias->numel() + net.conv2.kernel.numel() +
                               net.conv2.bias->numel() + net.fc1_w.numel() + net.fc1_b.numel() +
                               net.fc2_w.numel() + net.fc2_b.numel();
  EXPECT_EQ(LocNet<float>::param_count(64, 64, 1), created);
}

}  // namespace
}  // namespace fergrad
