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

#include <atomic>
#include <cmath>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "fergrad/error.hpp"

namespace fergrad {

using Shape = std::vector<std::int64_t>;

inline std::int64_t shape_numel(const Shape& shape) {
  std::int64_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

inline std::string shape_str(const Shape& shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

inline std::uint64_t next_tensor_id() {
  static std::atomic<std::uint64_t> counter{1};
  return counter.fetch_add(1, std::memory_order_relaxed);
}

// Dense, contiguous, row-major array. Copies of a Tensor share storage (handle
// semantics); use clone() for an independent value. Rank-0 tensors (shape {})
// hold one element and serve as scalars.
template <typename T>
class Tensor {
 public:
  using value_type = T;

  Tensor() = default;

  explicit Tensor(Shape shape) : Tensor(std::move(shape), T(0)) {}

  Tensor(Shape shape, T fill) {
    validate_shape(shape);
    auto n = static_cast<std::size_t>(shape_numel(shape));
    impl_ = std::make_shared<Impl>();
    impl_->shape = std::move(shape);
    impl_->data.assign(n, fill);
  }

  Tensor(Shape shape, std::vector<T> values) {
    validate_shape(shape);
    check(static_cast<std::int64_t>(values.size()) == shape_numel(shape),
          ErrorCode::kShapeMismatch,
          "tensor: " + std::to_string(values.size()) +
              " values do not fill shape " + shape_str(shape));
    impl_ = std::make_shared<Impl>();
    impl_->shape = std::move(shape);
    impl_->data = std::move(values);
  }

  static Tensor scalar(T v) { return Tensor(Shape{}, std::vector<T>{v}); }

  bool defined() const { return impl_ != nullptr; }
  std::uint64_t id() const { return impl_->id; }

  const Shape& shape() const { return impl_->shape; }
  std::size_t rank() const { return impl_->shape.size(); }
  std::int64_t dim(int axis) const {
    int r = static_cast<int>(rank());
    return impl_->shape.at(static_cast<std::size_t>(axis < 0 ? axis + r : axis));
  }
  std::int64_t numel() const { return static_cast<std::int64_t>(impl_->data.size()); }

  Shape strides() const {
    Shape st(rank(), 1);
    for (int i = static_cast<int>(rank()) - 2; i >= 0; --i)
      st[i] = st[i + 1] * impl_->shape[i + 1];
    return st;
  }

  std::span<T> data() { return impl_->data; }
  std::span<const T> data() const { return impl_->data; }
  std::vector<T>& storage() { return impl_->data; }
  const std::vector<T>& storage() const { return impl_->data; }
  T* ptr() { return impl_->data.data(); }
  const T* ptr() const { return impl_->data.data(); }

  T& operator[](std::int64_t i) { return impl_->data[static_cast<std::size_t>(i)]; }
  const T& operator[](std::int64_t i) const { return impl_->data[static_cast<std::size_t>(i)]; }

  T item() const {
    check(numel() == 1, ErrorCode::kShapeMismatch,
          "item: tensor of shape " + shape_str(shape()) + " is not a scalar");
    return impl_->data[0];
  }

  bool requires_grad() const { return impl_ && impl_->requires_grad; }
  Tensor& set_requires_grad(bool on) {
    impl_->requires_grad = on;
    return *this;
  }

  bool has_grad() const { return impl_->has_grad; }
  std::span<const T> grad() const {
    check(impl_->has_grad, ErrorCode::kState, "grad: tensor has no gradient");
    return impl_->grad;
  }
  void set_grad(std::vector<T> g) {
    check(static_cast<std::int64_t>(g.size()) == numel(), ErrorCode::kShapeMismatch,
          "set_grad: gradient size does not match " + shape_str(shape()));
    impl_->grad = std::move(g);
    impl_->has_grad = true;
  }
  void clear_grad() {
    impl_->grad.clear();
    impl_->has_grad = false;
  }

  Tensor clone() const {
    Tensor out(shape(), impl_->data);
    out.impl_->requires_grad = impl_->requires_grad;
    return out;
  }

  bool all_finite() const {
    for (const T& v : impl_->data)
      if (!std::isfinite(v)) return false;
    return true;
  }

  void assert_finite(const std::string& where) const {
    check(all_finite(), ErrorCode::kNumeric, where + ": non-finite value in tensor");
  }

 private:
  struct Impl {
    Shape shape;
    std::vector<T> data;
    bool requires_grad = false;
    bool has_grad = false;
    std::vector<T> grad;
    std::uint64_t id = next_tensor_id();
  };

  static void validate_shape(const Shape& shape) {
    for (auto d : shape)
      check(d > 0, ErrorCode::kShapeMismatch,
            "tensor: non-positive dimension in shape " + shape_str(shape));
  }

  std::shared_ptr<Impl> impl_;
};

template <typename T>
bool same_shape(const Tensor<T>& a, const Tensor<T>& b) {
  return a.shape() == b.shape();
}

}  // namespace fergrad
