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
#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "fergrad/tape.hpp"
#include "fergrad/tensor.hpp"

namespace fergrad {

// The primitive operation set. Composite layers (convolution, pooling, batch
// normalization, ...) live in layers.hpp and record fused tape nodes.
enum class PrimitiveOp {
  kAdd,
  kSub,
  kMul,
  kMatmul,
  kReshape,
  kTranspose,
  kPad,
  kSlice,
  kRelu,
  kRelu6,
  kExp,
  kLog,
  kSum,
  kMean,
  kMax,
  kBroadcast,
};

std::string_view primitive_name(PrimitiveOp op);
PrimitiveOp parse_primitive(std::string_view name);

// Keyword attributes for record(): "shape", "perm", "axes", "pads"
// (flattened before/after pairs), "axis", "start", "stop" and real "value".
struct Attrs {
  std::map<std::string, std::vector<std::int64_t>> ints;
  std::map<std::string, double> reals;

  const std::vector<std::int64_t>& list(const std::string& key) const;
  std::int64_t scalar(const std::string& key) const;
  double real(const std::string& key, double fallback) const;
};

template <typename T>
Tensor<T> add(Tape<T>* tape, const Tensor<T>& a, const Tensor<T>& b);
template <typename T>
Tensor<T> sub(Tape<T>* tape, const Tensor<T>& a, const Tensor<T>& b);
template <typename T>
Tensor<T> mul(Tape<T>* tape, const Tensor<T>& a, const Tensor<T>& b);
template <typename T>
Tensor<T> matmul(Tape<T>* tape, const Tensor<T>& a, const Tensor<T>& b);
template <typename T>
Tensor<T> reshape(Tape<T>* tape, const Tensor<T>& x, Shape shape);
template <typename T>
Tensor<T> transpose(Tape<T>* tape, const Tensor<T>& x, std::vector<std::int64_t> perm);
template <typename T>
Tensor<T> pad(Tape<T>* tape, const Tensor<T>& x,
              std::vector<std::pair<std::int64_t, std::int64_t>> pads, T value = T(0));
template <typename T>
Tensor<T> slice(Tape<T>* tape, const Tensor<T>& x, int axis, std::int64_t start,
                std::int64_t stop);
template <typename T>
Tensor<T> relu(Tape<T>* tape, const Tensor<T>& x);
template <typename T>
Tensor<T> relu6(Tape<T>* tape, const Tensor<T>& x);
template <typename T>
Tensor<T> exp(Tape<T>* tape, const Tensor<T>& x);
template <typename T>
Tensor<T> log(Tape<T>* tape, const Tensor<T>& x);

// Reductions drop the reduced axes; an empty axis list reduces everything to a
// rank-0 scalar.
template <typename T>
Tensor<T> sum(Tape<T>* tape, const Tensor<T>& x, std::vector<std::int64_t> axes = {});
template <typename T>
Tensor<T> mean(Tape<T>* tape, const Tensor<T>& x, std::vector<std::int64_t> axes = {});
template <typename T>
Tensor<T> max_reduce(Tape<T>* tape, const Tensor<T>& x, std::vector<std::int64_t> axes = {});

// Right-aligned broadcast; size-1 (or missing leading) axes are repeated.
// This is the only way shapes are expanded: elementwise ops never broadcast.
template <typename T>
Tensor<T> broadcast(Tape<T>* tape, const Tensor<T>& x, Shape target);

// Concatenation along one axis (used for channel stacking and stream fusion).
template <typename T>
Tensor<T> concat(Tape<T>* tape, const std::vector<Tensor<T>>& xs, int axis);

template <typename T>
Tensor<T> record(Tape<T>* tape, std::string_view op_kind, const std::vector<Tensor<T>>& inputs,
                 const Attrs& attrs = {});
template <typename T>
Tensor<T> record(Tape<T>* tape, PrimitiveOp op, const std::vector<Tensor<T>>& inputs,
                 const Attrs& attrs = {});

}  // namespace fergrad
