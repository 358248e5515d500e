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

#include <cmath>
#include <functional>
#include <span>
#include <vector>

#include "fergrad/tensor.hpp"

namespace fergrad {

// Central-difference gradient estimate of a scalar function:
// (f(x + eps e_i) - f(x - eps e_i)) / (2 eps) for each element i.
// Evaluates f on perturbed copies; x itself is left untouched.
template <typename T>
std::vector<T> finite_diff_grad(const std::function<T(const Tensor<T>&)>& f, const Tensor<T>& x,
                                T eps) {
  check(eps > T(0), ErrorCode::kInvalidArgument, "finite_diff_grad: eps must be positive");
  Tensor<T> probe = x.clone();
  probe.set_requires_grad(false);
  std::vector<T> grad(static_cast<std::size_t>(x.numel()));
  for (std::int64_t i = 0; i < x.numel(); ++i) {
    const T orig = probe[i];
    probe[i] = orig + eps;
    const T up = f(probe);
    probe[i] = orig - eps;
    const T down = f(probe);
    probe[i] = orig;
    if (!std::isfinite(up) || !std::isfinite(down))
      fail(ErrorCode::kNumeric,
           "finite_diff_grad: non-finite function value at element " + std::to_string(i));
    grad[static_cast<std::size_t>(i)] = (up - down) / (T(2) * eps);
  }
  return grad;
}

// max_i |a_i - b_i| / max(1, |b_i|), with b the reference.
template <typename T>
T max_relative_error(std::span<const T> a, std::span<const T> b) {
  check(a.size() == b.size(), ErrorCode::kShapeMismatch, "max_relative_error: size mismatch");
  T worst = T(0);
  for (std::size_t i = 0; i < a.size(); ++i) {
    T err = std::abs(a[i] - b[i]) / std::max(T(1), std::abs(b[i]));
    if (!(err <= worst)) worst = err;  // NaN wins
  }
  return worst;
}

}  // namespace fergrad
