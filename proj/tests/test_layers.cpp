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

#include "fergrad/gradcheck.hpp"
#include "fergrad/layers.hpp"
#include "fergrad/ops.hpp"
#include "fergrad/random.hpp"
#include "oracles.hpp"

namespace fergrad {
namespace {

using namespace oracle;

D random_real(Shape s, Rng& rng) {
  D t(std::move(s));
  for (auto& v : t.data()) v = standard_normal(rng);
  return t;
}

void expect_exact(const D& a, const D& b) {
  ASSERT_EQ(a.shape(), b.shape());
  for (std::int64_t i = 0; i < a.numel(); ++i) ASSERT_EQ(a[i], b[i]) << "at " << i;
}

TEST(Conv2d, IdentityKernel) {
  Rng rng(1);
  D x = random_real({2, 5, 4, 1}, rng);
  ConvParams<double> p{D(Shape{1, 1, 1, 1}, 1.0), std::nullopt, 1, Padding::kSame};
  expect_exact(conv2d<double>(nullptr, x, p), x);
}

TEST(Conv2d, TableShape) {
  ConvParams<float> p{Tensor<float>(Shape{3, 3, 1, 48}), Tensor<float>(Shape{48}), 1, Padding::kSame};
  auto y = conv2d<float>(nullptr, Tensor<float>(Shape{1, 64, 64, 1}), p);
  EXPECT_EQ(y.shape(), (Shape{1, 64, 64, 48}));
  EXPECT_EQ(conv_output_size(64, 3, 2, Padding::kSame), 32);
  EXPECT_EQ(conv_output_size(7, 3, 2, Padding::kSame), 4);
}

TEST(Conv2d, MatchesNaiveOracle) {
  Rng rng(2);
  for (int i = 0; i < 50; ++i) {
    const int stride = 1 + static_cast<int>(uniform_index(rng, 2));
    const std::int64_t ks = uniform_index(rng, 2) ? 3 : 1;
    D x = random_int({2, 6, 6, 2}, rng), k = random_int({ks, ks, 2, 3}, rng), b = random_int({3}, rng);
    ConvParams<double> p{k, b, stride, Padding::kSame};
    expect_exact(conv2d<double>(nullptr, x, p), naive_conv(x, k, &b, stride));
  }
  D x = random_real({1, 6, 6, 2}, rng), k = random_real({3, 3, 2, 4}, rng);
  ConvParams<double> p{k, std::nullopt, 1, Padding::kSame};
  auto got = conv2d<double>(nullptr, x, p);
  auto want = naive_conv(x, k, nullptr, 1);
  for (std::int64_t i = 0; i < got.numel(); ++i) EXPECT_NEAR(got[i], want[i], 1e-10);
}

TEST(Conv2d, Errors) {
  ConvParams<double> p{D(Shape{3, 3, 2, 4}), std::nullopt, 1, Padding::kSame};
  EXPECT_THROW(conv2d<double>(nullptr, D(Shape{1, 5, 5, 3}), p), Error);
  p.stride = 0;
  EXPECT_THROW(conv2d<double>(nullptr, D(Shape{1, 5, 5, 2}), p), Error);
}

TEST(DepSep, ParamCount) { EXPECT_EQ(depsep_param_count(3, 32, 64), 2336); }

TEST(DepSep, MatchesTwoStageOracle) {
  Rng rng(3);
  for (int i = 0; i < 20; ++i) {
    D x = random_int({1, 8, 8, 4}, rng), dk = random_int({3, 3, 4, 1}, rng),
      pk = random_int({1, 1, 4, 5}, rng);
    ConvParams<double> dw{dk, std::nullopt, 1, Padding::kSame};
    ConvParams<double> pw{pk, std::nullopt, 1, Padding::kSame};
    auto want = naive_conv(naive_depthwise(x, dk), pk, nullptr, 1);
    expect_exact(depthwise_separable<double>(nullptr, x, dw, pw), want);
  }
}

TEST(DepSep, SingleChannelEqualsConv) {
  Rng rng(4);
  D x = random_int({1, 5, 5, 1}, rng), dk = random_int({3, 3, 1, 1}, rng), pk = random_int({1, 1, 1, 3}, rng);
  D full(Shape{3, 3, 1, 3});
  for (int t = 0; t < 9; ++t)
    for (int o = 0; o < 3; ++o) full[t * 3 + o] = dk[t] * pk[o];
  ConvParams<double> dw{dk, std::nullopt, 1, Padding::kSame};
  ConvParams<double> pw{pk, std::nullopt, 1, Padding::kSame};
  ConvParams<double> cf{full, std::nullopt, 1, Padding::kSame};
  expect_exact(depthwise_separable<double>(nullptr, x, dw, pw), conv2d<double>(nullptr, x, cf));
}

TEST(DepSep, Errors) {
  ConvParams<double> dw{D(Shape{3, 3, 2, 2}), std::nullopt, 1, Padding::kSame};
  ConvParams<double> pw{D(Shape{1, 1, 2, 3}), std::nullopt, 1, Padding::kSame};
  EXPECT_THROW(depthwise_separable<double>(nullptr, D(Shape{1, 4, 4, 2}), dw, pw), Error);
  dw.kernel = D(Shape{3, 3, 2, 1});
  pw.kernel = D(Shape{3, 3, 2, 3});
  EXPECT_THROW(depthwise_separable<double>(nullptr, D(Shape{1, 4, 4, 2}), dw, pw), Error);
}

BottleneckParams<double> make_bottleneck(std::int64_t cin, std::int64_t cout, int t, int s, Rng& rng) {
  BottleneckParams<double> p;
  const auto hid = cin * t;
  p.expand = {random_real({1, 1, cin, hid}, rng), std::nullopt, 1, Padding::kSame};
  p.depthwise = {random_real({3, 3, hid, 1}, rng), std::nullopt, s, Padding::kSame};
  p.project = {random_real({1, 1, hid, cout}, rng), std::nullopt, 1, Padding::kSame};
  p.bn_expand = BatchNormState<double>::create(hid);
  p.bn_depthwise = BatchNormState<double>::create(hid);
  p.bn_project = BatchNormState<double>::create(cout);
  for (auto* bn : {&p.bn_expand, &p.bn_depthwise, &p.bn_project}) bn->reset_running_stats();
  p.expansion = t;
  p.residual = s == 1 && cin == cout;
  return p;
}

TEST(Bottleneck, StrideHalvesSpatial) {
  Rng rng(5);
  auto p = make_bottleneck(32, 32, 6, 2, rng);
  auto y = inverted_bottleneck<double>(nullptr, random_real({1, 64, 64, 32}, rng), p, Mode::kTrain);
  EXPECT_EQ(y.shape(), (Shape{1, 32, 32, 32}));
}

TEST(Bottleneck, ZeroInputZeroOutput) {
  Rng rng(6);
  auto p = make_bottleneck(4, 4, 2, 1, rng);
  auto y = inverted_bottleneck<double>(nullptr, D(Shape{2, 5, 5, 4}), p, Mode::kEval);
  for (double v : y.data()) EXPECT_EQ(v, 0.0);
}

TEST(Bottleneck, ParamCountTableRow) {
  EXPECT_EQ(bottleneck_param_count(24, 32, 6), 9360);
  EXPECT_EQ(bottleneck_param_count(32, 24, 6), 12480);
}

TEST(Bottleneck, ResidualAddsInput) {
  Rng rng(7);
  auto p = make_bottleneck(3, 3, 2, 1, rng);
  D x = random_real({2, 4, 4, 3}, rng);
  auto with = inverted_bottleneck<double>(nullptr, x, p, Mode::kEval);
  p.residual = false;
  auto branch = inverted_bottleneck<double>(nullptr, x, p, Mode::kEval);
  for (std::int64_t i = 0; i < x.numel(); ++i) EXPECT_NEAR(with[i] - branch[i], x[i], 1e-12);
}

TEST(Bottleneck, ResidualShapeMismatch) {
  Rng rng(8);
  auto p = make_bottleneck(3, 4, 2, 1, rng);
  p.residual = true;
  EXPECT_THROW(inverted_bottleneck<double>(nullptr, random_real({1, 4, 4, 3}, rng), p, Mode::kEval), Error);
}

TEST(MaxPool, Basics) {
  D x(Shape{1, 2, 2, 1}, std::vector<double>{1, 2, 3, 4});
  EXPECT_EQ(max_pool<double>(nullptr, x, 2, 2)[0], 4.0);
  D c(Shape{1, 4, 4, 2}, 5.0);
  auto y = max_pool<double>(nullptr, c, 2, 2);
  EXPECT_EQ(y.shape(), (Shape{1, 2, 2, 2}));
  for (double v : y.data()) EXPECT_EQ(v, 5.0);
  EXPECT_THROW(max_pool<double>(nullptr, D(Shape{1, 2, 2, 1}), 3, 1), Error);
}

TEST(MaxPool, MatchesOracle) {
  Rng rng(9);
  for (int i = 0; i < 50; ++i) {
    D x = random_int({1, 4, 4, 2}, rng, -50, 50);
    expect_exact(max_pool<double>(nullptr, x, 2, 2), naive_max_pool(x, 2, 2));
    expect_exact(max_pool<double>(nullptr, x, 3, 1), naive_max_pool(x, 3, 1));
  }
}

TEST(GlobalAvgPool, ShapeConstantAndGradient) {
  auto y = global_avg_pool<float>(nullptr, Tensor<float>(Shape{1, 8, 8, 256}));
  EXPECT_EQ(y.shape(), (Shape{1, 1, 1, 256}));
  D c(Shape{1, 3, 3, 2}, 2.5);
  const D gc = global_avg_pool<double>(nullptr, c);
  for (double v : gc.data()) EXPECT_EQ(v, 2.5);

  Rng rng(10);
  D x = random_real({2, 3, 5, 4}, rng);
  x.set_requires_grad(true);
  Tape<double> tape;
  tape.backward(sum(&tape, global_avg_pool(&tape, x)));
  for (double g : x.grad()) EXPECT_NEAR(g, 1.0 / 15.0, 1e-15);
  std::function<double(const D&)> f = [](const D& z) {
    return sum<double>(nullptr, global_avg_pool<double>(nullptr, z)).item();
  };
  EXPECT_LT(max_relative_error<double>(x.grad(), finite_diff_grad(f, x, 1e-6)), 1e-4);
}

TEST(Dense, IdentityAndArithmetic) {
  Rng rng(11);
  D x = random_real({3, 4}, rng), eye(Shape{4, 4});
  for (int i = 0; i < 4; ++i) eye[i * 5] = 1;
  expect_exact(dense<double>(nullptr, x, eye, D(Shape{4})), x);
  auto y = dense<double>(nullptr, D(Shape{1, 2}, 1.0), D(Shape{2, 1}, 1.0),
                         D(Shape{1}, std::vector<double>{-2}));
  EXPECT_EQ(y[0], 0.0);
  EXPECT_THROW(dense<double>(nullptr, D(Shape{1, 3}), D(Shape{2, 1}), std::nullopt), Error);
}

TEST(BatchNorm, TrainNormalizes) {
  Rng rng(12);
  D x(Shape{16, 3, 3, 2});
  for (auto& v : x.data()) v = 3.0 + 2.0 * standard_normal(rng);
  auto st = BatchNormState<double>::create(2);
  st.scale = D(Shape{2}, std::vector<double>{1.5, -0.5});
  st.shift = D(Shape{2}, std::vector<double>{0.25, -1.0});
  st.epsilon = 0;
  auto y = batch_norm<double>(nullptr, x, st, Mode::kTrain);
  for (int c = 0; c < 2; ++c) {
    double m = 0, s = 0;
    const auto n = y.numel() / 2;
    for (std::int64_t i = c; i < y.numel(); i += 2) m += y[i];
    m /= static_cast<double>(n);
    for (std::int64_t i = c; i < y.numel(); i += 2) s += (y[i] - m) * (y[i] - m);
    s = std::sqrt(s / static_cast<double>(n));
    EXPECT_NEAR(m, st.shift[c], 1e-5);
    EXPECT_NEAR(s, std::abs(st.scale[c]), 1e-5);
  }
  for (double v : st.running_var.data()) EXPECT_GE(v, 0.0);
  EXPECT_TRUE(st.has_running_stats);
}

TEST(BatchNorm, FixedPoint) {
  D x(Shape{2, 1, 1, 1}, std::vector<double>{-1, 1});
  auto st = BatchNormState<double>::create(1);
  st.epsilon = 0;
  auto y = batch_norm<double>(nullptr, x, st, Mode::kTrain);
  EXPECT_NEAR(y[0], -1.0, 1e-5);
  EXPECT_NEAR(y[1], 1.0, 1e-5);
}

TEST(BatchNorm, EvalIsAffine) {
  Rng rng(13);
  auto st = BatchNormState<double>::create(3);
  st.running_mean = random_real({3}, rng);
  st.running_var = D(Shape{3}, std::vector<double>{0.5, 1.5, 2.0});
  st.has_running_stats = true;
  D x = random_real({2, 2, 2, 3}, rng), ax(x.shape());
  const double a = 1.7, b = -0.3;
  for (std::int64_t i = 0; i < x.numel(); ++i) ax[i] = a * x[i] + b;
  D zero(x.shape());
  auto f0 = batch_norm<double>(nullptr, zero, st, Mode::kEval);
  auto fx = batch_norm<double>(nullptr, x, st, Mode::kEval);
  auto fax = batch_norm<double>(nullptr, ax, st, Mode::kEval);
  D bconst(x.shape(), b);
  auto fb = batch_norm<double>(nullptr, bconst, st, Mode::kEval);
  // f(a x + b) - f(b) == a (f(x) - f(0)) for an affine f.
  for (std::int64_t i = 0; i < x.numel(); ++i)
    EXPECT_NEAR(fax[i] - fb[i], a * (fx[i] - f0[i]), 1e-12);
}

TEST(BatchNorm, EvalWithoutStatsFails) {
  auto st = BatchNormState<double>::create(2);
  try {
    batch_norm<double>(nullptr, D(Shape{1, 1, 1, 2}), st, Mode::kEval);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kState);
  }
  EXPECT_THROW(batch_norm<double>(nullptr, D(Shape{1, 1, 1, 3}), st, Mode::kTrain), Error);
}

TEST(SoftmaxCE, UniformSaturatedAndErrors) {
  std::vector<int> l0{0}, l3{3};
  auto u = softmax_cross_entropy<double>(nullptr, D(Shape{1, 8}), std::span<const int>(l3));
  EXPECT_NEAR(u.item(), std::log(8.0), 1e-12);
  auto s = softmax_cross_entropy<double>(nullptr, D(Shape{1, 2}, std::vector<double>{1000, 0}),
                                         std::span<const int>(l0));
  EXPECT_TRUE(std::isfinite(s.item()));
  EXPECT_NEAR(s.item(), 0.0, 1e-12);
  std::vector<int> bad{8};
  EXPECT_THROW(softmax_cross_entropy<double>(nullptr, D(Shape{1, 8}), std::span<const int>(bad)), Error);
}

TEST(Relu6, Range) {
  Rng rng(14);
  D x = random_real({200}, rng);
  for (auto& v : x.data()) v *= 5;
  const D r = relu6<double>(nullptr, x);
  for (double v : r.data()) {
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 6.0);
  }
}

}  // namespace
}  // namespace fergrad
