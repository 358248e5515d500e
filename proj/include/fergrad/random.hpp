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
#include <cstdint>
#include <random>

#include "fergrad/tensor.hpp"

namespace fergrad {

using Rng = std::mt19937_64;

// Uniform in [0, 1) from the top 53 bits; portable across standard libraries.
inline double uniform01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

inline double uniform(Rng& rng, double lo, double hi) { return lo + (hi - lo) * uniform01(rng); }

inline double standard_normal(Rng& rng) {
  double u1 = uniform01(rng);
  while (u1 <= 0.0) u1 = uniform01(rng);
  const double u2 = uniform01(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
}

// Index in [0, n).
inline std::uint64_t uniform_index(Rng& rng, std::uint64_t n) { return rng() % n; }

// He-uniform: U(-sqrt(6 / fan_in), sqrt(6 / fan_in)).
template <typename T>
void he_uniform(Tensor<T>& t, std::int64_t fan_in, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in));
  for (auto& v : t.data()) v = static_cast<T>(uniform(rng, -limit, limit));
}

}  // namespace fergrad
