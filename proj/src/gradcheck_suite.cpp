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

#include "fergrad/gradcheck_suite.hpp"

#include <algorithm>
#include <functional>

#include "fergrad/gradcheck.hpp"
#include "fergrad/layers.hpp"
#include "fergrad/ops.hpp"
#include "fergrad/random.hpp"
#include "fergrad/spatial_transformer.hpp"

namespace fergrad {
namespace {

using D = Tensor<double>;
using OpFn = std::function<D(Tape<double>*, const std::vector<D>&)>;

D random_tensor(Shape shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
  D t(std::move(shape));
  for (auto& v : t.data()) v = uniform(rng, lo, hi);
  return t;
}

// Distinct values at least 0.05 apart, so a finite-difference step never
// changes which element of a pooling window wins.
D distinct_tensor(Shape shape, Rng& rng) {
  D t(std::move(shape));
  std::vector<std::size_t> order(static_cast<std::size_t>(t.numel()));
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[uniform_index(rng, i)]);
  for (std::size_t i = 0; i < order.size(); ++i)
    t[static_cast<std::int64_t>(i)] = 0.05 * static_cast<double>(order[i]) + uniform(rng, 0.0, 0.01);
  return t;
}

double dot(const D& a, const D& b) {
  double s = 0;
  for (std::int64_t i = 0; i < a.numel(); ++i) s += a[i] * b[i];
  return s;
}

// Worst relative error between tape gradients and central differences of
// <op(inputs), w> for a random projection w, over all inputs.
double check_op(const OpFn& op, std::vector<D> inputs, Rng& rng) {
  for (auto& in : inputs) in.set_requires_grad(true);
  Tape<double> tape;
  const D y = op(&tape, inputs);
  const D w = random_tensor(y.shape(), rng);
  const D loss = sum(&tape, mul(&tape, y, w));
  tape.backward(loss);

  double worst = 0;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    std::vector<D> probe = inputs;
    std::function<double(const D&)> f = [&](const D& xi) {
      probe[i] = xi;
      return dot(op(nullptr, probe), w);
    };
    const auto numeric = finite_diff_grad<double>(f, inputs[i], 1e-6);
    const auto analytic = inputs[i].has_grad() ? std::vector<double>(inputs[i].grad().begin(), inputs[i].grad().end())
                                               : std::vector<double>(numeric.size(), 0.0);
    const double err = max_relative_error<double>(analytic, numeric);
    if (!(err <= worst)) worst = err;
  }
  return worst;
}

struct Case {
  std::string name;
  std::function<double(Rng&)> run;
};

std::vector<Case> cases() {
  std::vector<Case> out;

  out.push_back({"conv2d", [](Rng& rng) {
    const int stride = 1 + static_cast<int>(uniform_index(rng, 2));
    OpFn op = [stride](Tape<double>* t, const std::vector<D>& in) {
      ConvParams<double> p{in[1], in[2], stride, Padding::kSame};
      return conv2d(t, in[0], p);
    };
    return check_op(op, {random_tensor({2, 5, 6, 3}, rng), random_tensor({3, 3, 3, 4}, rng),
                         random_tensor({4}, rng)}, rng);
  }});

  out.push_back({"depthwise_separable", [](Rng& rng) {
    OpFn op = [](Tape<double>* t, const std::vector<D>& in) {
      ConvParams<double> dw{in[1], std::nullopt, 1, Padding::kSame};
      ConvParams<double> pw{in[2], std::nullopt, 1, Padding::kSame};
      return depthwise_separable(t, in[0], dw, pw);
    };
    return check_op(op, {random_tensor({2, 5, 5, 3}, rng), random_tensor({3, 3, 3, 1}, rng),
                         random_tensor({1, 1, 3, 4}, rng)}, rng);
  }});

  out.push_back({"inverted_bottleneck", [](Rng& rng) {
    const bool residual = uniform_index(rng, 2) == 0;
    const std::int64_t c_out = residual ? 3 : 4;
    OpFn op = [residual](Tape<double>* t, const std::vector<D>& in) {
      BottleneckParams<double> p;
      p.expand = {in[1], std::nullopt, 1, Padding::kSame};
      p.depthwise = {in[2], std::nullopt, residual ? 1 : 2, Padding::kSame};
      p.project = {in[3], std::nullopt, 1, Padding::kSame};
      p.bn_expand = BatchNormState<double>::create(in[1].dim(3));
      p.bn_depthwise = BatchNormState<double>::create(in[1].dim(3));
      p.bn_project = BatchNormState<double>::create(in[3].dim(3));
      p.bn_project.scale = in[4];
      p.residual = residual;
      p.expansion = 2;
      return inverted_bottleneck(t, in[0], p, Mode::kTrain);
    };
    return check_op(op, {random_tensor({2, 4, 4, 3}, rng), random_tensor({1, 1, 3, 6}, rng),
                         random_tensor({3, 3, 6, 1}, rng), random_tensor({1, 1, 6, c_out}, rng),
                         random_tensor({c_out}, rng, 0.5, 1.5)}, rng);
  }});

  out.push_back({"max_pool", [](Rng& rng) {
    OpFn op = [](Tape<double>* t, const std::vector<D>& in) { return max_pool(t, in[0], 2, 2); };
    return check_op(op, {distinct_tensor({2, 4, 6, 3}, rng)}, rng);
  }});

  out.push_back({"global_avg_pool", [](Rng& rng) {
    OpFn op = [](Tape<double>* t, const std::vector<D>& in) { return global_avg_pool(t, in[0]); };
    return check_op(op, {random_tensor({2, 3, 5, 4}, rng)}, rng);
  }});

  out.push_back({"dense", [](Rng& rng) {
    OpFn op = [](Tape<double>* t, const std::vector<D>& in) {
      return dense(t, in[0], in[1], std::optional<D>(in[2]));
    };
    return check_op(op, {random_tensor({3, 5}, rng), random_tensor({5, 4}, rng),
                         random_tensor({4}, rng)}, rng);
  }});

  out.push_back({"batch_norm_eval", [](Rng& rng) {
    auto mean = random_tensor({4}, rng);
    auto var = random_tensor({4}, rng, 0.5, 2.0);
    OpFn op = [mean, var](Tape<double>* t, const std::vector<D>& in) {
      auto st = BatchNormState<double>::create(4);
      st.scale = in[1];
      st.shift = in[2];
      st.running_mean = mean;
      st.running_var = var;
      st.has_running_stats = true;
      return batch_norm(t, in[0], st, Mode::kEval);
    };
    return check_op(op, {random_tensor({2, 3, 3, 4}, rng), random_tensor({4}, rng, 0.5, 1.5),
                         random_tensor({4}, rng)}, rng);
  }});

  out.push_back({"batch_norm_train", [](Rng& rng) {
    OpFn op = [](Tape<double>* t, const std::vector<D>& in) {
      auto st = BatchNormState<double>::create(4);
      st.scale = in[1];
      st.shift = in[2];
      return batch_norm(t, in[0], st, Mode::kTrain);
    };
    return check_op(op, {random_tensor({2, 3, 3, 4}, rng), random_tensor({4}, rng, 0.5, 1.5),
                         random_tensor({4}, rng)}, rng);
  }});

  out.push_back({"softmax_cross_entropy", [](Rng& rng) {
    std::vector<int> labels(4);
    for (auto& l : labels) l = static_cast<int>(uniform_index(rng, 5));
    OpFn op = [labels](Tape<double>* t, const std::vector<D>& in) {
      return softmax_cross_entropy(t, in[0], std::span<const int>(labels));
    };
    return check_op(op, {random_tensor({4, 5}, rng, -3.0, 3.0)}, rng);
  }});

  out.push_back({"affine_grid", [](Rng& rng) {
    OpFn op = [](Tape<double>* t, const std::vector<D>& in) { return affine_grid(t, in[0], 4, 5); };
    return check_op(op, {random_tensor({2, 2, 3}, rng)}, rng);
  }});

  out.push_back({"bilinear_sample", [](Rng& rng) {
    const std::int64_t h = 5, w = 6;
    // Pixel positions with fractional parts in [0.1, 0.9], some outside the
    // image, converted to normalized coordinates.
    D grid({2, 3, 4, 2});
    for (std::int64_t i = 0; i < grid.numel(); ++i) {
      const auto n = (i % 2 == 0) ? w : h;
      const double px = static_cast<double>(uniform_index(rng, static_cast<std::uint64_t>(n + 1))) - 1.0 +
                        uniform(rng, 0.1, 0.9);
      grid[i] = 2.0 * px / static_cast<double>(n - 1) - 1.0;
    }
    OpFn op = [](Tape<double>* t, const std::vector<D>& in) {
      return bilinear_sample(t, in[0], in[1]);
    };
    return check_op(op, {random_tensor({2, h, w, 2}, rng), grid}, rng);
  }});

  out.push_back({"matmul", [](Rng& rng) {
    OpFn op = [](Tape<double>* t, const std::vector<D>& in) { return matmul(t, in[0], in[1]); };
    return check_op(op, {random_tensor({3, 4}, rng), random_tensor({4, 2}, rng)}, rng);
  }});

  out.push_back({"elementwise", [](Rng& rng) {
    OpFn op = [](Tape<double>* t, const std::vector<D>& in) {
      auto a = mul(t, in[0], in[1]);
      auto b = sub(t, exp(t, in[0]), log(t, in[2]));
      return add(t, relu6(t, a), b);
    };
    // relu6 input stays inside (0.04, 6) away from both kinks.
    return check_op(op, {random_tensor({3, 4}, rng, 0.2, 2.0), random_tensor({3, 4}, rng, 0.2, 2.0),
                         random_tensor({3, 4}, rng, 0.5, 2.0)}, rng);
  }});

  out.push_back({"reductions", [](Rng& rng) {
    OpFn op = [](Tape<double>* t, const std::vector<D>& in) {
      auto m = mean(t, in[0], {1});
      auto s = sum(t, in[0], {0, 2});
      auto mx = max_reduce(t, in[0], {2});
      return concat(t, {reshape(t, m, Shape{8}), reshape(t, s, Shape{3}), reshape(t, mx, Shape{6})}, 0);
    };
    return check_op(op, {distinct_tensor({2, 3, 4}, rng)}, rng);
  }});

  out.push_back({"shape_ops", [](Rng& rng) {
    OpFn op = [](Tape<double>* t, const std::vector<D>& in) {
      auto p = pad(t, in[0], {{1, 0}, {0, 2}}, 0.5);
      auto tr = transpose(t, p, {1, 0});
      auto sl = slice(t, tr, 0, 1, 4);
      auto b = broadcast(t, in[1], Shape{3, 4});
      return mul(t, sl, b);
    };
    return check_op(op, {random_tensor({3, 2}, rng), random_tensor({4}, rng)}, rng);
  }});

  return out;
}

}  // namespace

std::vector<GradcheckResult> run_gradcheck_suite(int seeds, double tolerance) {
  std::vector<GradcheckResult> results;
  for (const auto& c : cases()) {
    GradcheckResult r;
    r.op = c.name;
    r.seeds = seeds;
    for (int s = 1; s <= seeds; ++s) {
      Rng rng(static_cast<std::uint64_t>(s) * 7919u);
      const double err = c.run(rng);
      if (!(err <= r.max_rel_error)) r.max_rel_error = err;
    }
    r.pass = r.max_rel_error < tolerance;
    results.push_back(r);
  }
  return results;
}

}  // namespace fergrad
