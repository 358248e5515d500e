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

#include <Eigen/Core>

namespace fergrad::detail {

template <typename T>
using RowMatrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MatMap = Eigen::Map<RowMatrix<T>>;
template <typename T>
using ConstMatMap = Eigen::Map<const RowMatrix<T>>;

// Row-major C[m,n] (+)= op(A) * op(B), op(A) is m x k and op(B) is k x n.
template <typename T>
void gemm(bool trans_a, bool trans_b, std::int64_t m, std::int64_t n, std::int64_t k,
          const T* a, const T* b, T* c, bool accumulate) {
  MatMap<T> cm(c, m, n);
  auto run = [&](const auto& lhs, const auto& rhs) {
    if (accumulate)
      cm.noalias() += lhs * rhs;
    else
      cm.noalias() = lhs * rhs;
  };
  if (!trans_a && !trans_b)
    run(ConstMatMap<T>(a, m, k), ConstMatMap<T>(b, k, n));
  else if (trans_a && !trans_b)
    run(ConstMatMap<T>(a, k, m).transpose(), ConstMatMap<T>(b, k, n));
  else if (!trans_a && trans_b)
    run(ConstMatMap<T>(a, m, k), ConstMatMap<T>(b, n, k).transpose());
  else
    run(ConstMatMap<T>(a, k, m).transpose(), ConstMatMap<T>(b, n, k).transpose());
}

}  // namespace fergrad::detail
