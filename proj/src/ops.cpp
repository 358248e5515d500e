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

#include "fergrad/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "gemm.hpp"

namespace fergrad {
namespace {

constexpr std::pair<PrimitiveOp, std::string_view> kPrimitiveNames[] = {
    {PrimitiveOp::kAdd, "add"},           {PrimitiveOp::kSub, "sub"},
    {PrimitiveOp::kMul, "mul"},           {PrimitiveOp::kMatmul, "matmul"},
    {PrimitiveOp::kReshape, "reshape"},   {PrimitiveOp::kTranspose, "transpose"},
    {PrimitiveOp::kPad, "pad"},           {PrimitiveOp::kSlice, "slice"},
    {PrimitiveOp::kRelu, "relu"},         {PrimitiveOp::kRelu6, "relu6"},
    {PrimitiveOp::kExp, "exp"},           {PrimitiveOp::kLog, "log"},
    {PrimitiveOp::kSum, "sum"},           {PrimitiveOp::kMean, "mean"},
    {PrimitiveOp::kMax, "max"},           {PrimitiveOp::kBroadcast, "broadcast"},
};

template <typename T>
void require_same_shape(std::string_view op, const Tensor<T>& a, const Tensor<T>& b) {
  if (a.shape() != b.shape())
    fail(ErrorCode::kShapeMismatch, std::string(op) + ": shape mismatch " +
                                        shape_str(a.shape()) + " vs " + shape_str(b.shape()));
}

std::vector<std::int64_t> normalize_axes(std::vector<std::int64_t> axes, std::size_t rank,
                                         std::string_view op) {
  auto r = static_cast<std::int64_t>(rank);
  if (axes.empty()) {
    axes.resize(rank);
    for (std::size_t i = 0; i < rank; ++i) axes[i] = static_cast<std::int64_t>(i);
  }
  for (auto& a : axes) {
    if (a < 0) a += r;
    check(a >= 0 && a < r, ErrorCode::kInvalidArgument,
          std::string(op) + ": axis out of range for rank " + std::to_string(rank));
  }
  std::sort(axes.begin(), axes.end());
  axes.erase(std::unique(axes.begin(), axes.end()), axes.end());
  return axes;
}

// For each element of `full`, the flat offset into a tensor whose axes have the
// given strides (0 on axes that collapse).
std::vector<std::int64_t> offset_map(const Shape& full, const Shape& strides) {
  auto n = shape_numel(full);
  std::vector<std::int64_t> map(static_cast<std::size_t>(n));
  std::vector<std::int64_t> idx(full.size(), 0);
  std::int64_t off = 0;
  for (std::int64_t i = 0; i < n; ++i) {
    map[static_cast<std::size_t>(i)] = off;
    for (int d = static_cast<int>(full.size()) - 1; d >= 0; --d) {
      if (++idx[d] < full[d]) {
        off += strides[d];
        break;
      }
      off -= strides[d] * (full[d] - 1);
      idx[d] = 0;
    }
  }
  return map;
}

struct Reduction {
  Shape out_shape;
  std::vector<std::int64_t> map;  // input element -> output element
  std::int64_t group = 1;         // elements folded into each output
};

Reduction plan_reduction(const Shape& shape, const std::vector<std::int64_t>& axes) {
  Reduction r;
  Shape out_strides(shape.size(), 0);
  std::vector<bool> reduced(shape.size(), false);
  for (auto a : axes) reduced[static_cast<std::size_t>(a)] = true;
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (reduced[i])
      r.group *= shape[i];
    else
      r.out_shape.push_back(shape[i]);
  }
  std::int64_t stride = 1;
  for (int i = static_cast<int>(shape.size()) - 1; i >= 0; --i) {
    if (reduced[i]) continue;
    out_strides[i] = stride;
    stride *= shape[i];
  }
  r.map = offset_map(shape, out_strides);
  return r;
}

template <typename T, typename F, typename G>
Tensor<T> unary(Tape<T>* tape, std::string_view name, const Tensor<T>& x, F f, G df) {
  Tensor<T> out(x.shape());
  const T* xp = x.ptr();
  T* op = out.ptr();
  for (std::int64_t i = 0; i < x.numel(); ++i) op[i] = f(xp[i]);
  return record_node<T>(tape, std::string(name), {x}, out,
                        [x, out, df](std::span<const T> g, std::span<std::vector<T>*> gin) {
                          if (!gin[0]) return;
                          auto& gx = *gin[0];
                          const T* xp = x.ptr();
                          const T* yp = out.ptr();
                          for (std::size_t i = 0; i < g.size(); ++i)
                            gx[i] += g[i] * df(xp[i], yp[i]);
                        });
}

}  // namespace

std::string_view primitive_name(PrimitiveOp op) {
  for (auto [k, n] : kPrimitiveNames)
    if (k == op) return n;
  return "?";
}

PrimitiveOp parse_primitive(std::string_view name) {
  for (auto [k, n] : kPrimitiveNames)
    if (n == name) return k;
  fail(ErrorCode::kInvalidArgument, "record: unknown op kind '" + std::string(name) + "'");
}

const std::vector<std::int64_t>& Attrs::list(const std::string& key) const {
  auto it = ints.find(key);
  if (it == ints.end()) fail(ErrorCode::kInvalidArgument, "attrs: missing '" + key + "'");
  return it->second;
}

std::int64_t Attrs::scalar(const std::string& key) const {
  const auto& v = list(key);
  check(v.size() == 1, ErrorCode::kInvalidArgument, "attrs: '" + key + "' must be a scalar");
  return v[0];
}

double Attrs::real(const std::string& key, double fallback) const {
  auto it = reals.find(key);
  return it == reals.end() ? fallback : it->second;
}

template <typename T>
Tensor<T> add(Tape<T>* tape, const Tensor<T>& a, const Tensor<T>& b) {
  require_same_shape("add", a, b);
  Tensor<T> out(a.shape());
  for (std::int64_t i = 0; i < a.numel(); ++i) out[i] = a[i] + b[i];
  return record_node<T>(tape, "add", {a, b}, out,
                        [](std::span<const T> g, std::span<std::vector<T>*> gin) {
                          for (auto* gi : gin)
                            if (gi)
                              for (std::size_t i = 0; i < g.size(); ++i) (*gi)[i] += g[i];
                        });
}

template <typename T>
Tensor<T> sub(Tape<T>* tape, const Tensor<T>& a, const Tensor<T>& b) {
  require_same_shape("sub", a, b);
  Tensor<T> out(a.shape());
  for (std::int64_t i = 0; i < a.numel(); ++i) out[i] = a[i] - b[i];
  return record_node<T>(tape, "sub", {a, b}, out,
                        [](std::span<const T> g, std::span<std::vector<T>*> gin) {
                          if (gin[0])
                            for (std::size_t i = 0; i < g.size(); ++i) (*gin[0])[i] += g[i];
                          if (gin[1])
                            for (std::size_t i = 0; i < g.size(); ++i) (*gin[1])[i] -= g[i];
                        });
}

template <typename T>
Tensor<T> mul(Tape<T>* tape, const Tensor<T>& a, const Tensor<T>& b) {
  require_same_shape("mul", a, b);
  Tensor<T> out(a.shape());
  for (std::int64_t i = 0; i < a.numel(); ++i) out[i] = a[i] * b[i];
  return record_node<T>(tape, "mul", {a, b}, out,
                        [a, b](std::span<const T> g, std::span<std::vector<T>*> gin) {
                          if (gin[0])
                            for (std::size_t i = 0; i < g.size(); ++i)
                              (*gin[0])[i] += g[i] * b[static_cast<std::int64_t>(i)];
                          if (gin[1])
                            for (std::size_t i = 0; i < g.size(); ++i)
                              (*gin[1])[i] += g[i] * a[static_cast<std::int64_t>(i)];
                        });
}

template <typename T>
Tensor<T> matmul(Tape<T>* tape, const Tensor<T>& a, const Tensor<T>& b) {
  if (a.rank() != 2 || b.rank() != 2 || a.dim(1) != b.dim(0))
    fail(ErrorCode::kShapeMismatch,
         "matmul: shape mismatch " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
  auto m = a.dim(0), k = a.dim(1), n = b.dim(1);
  Tensor<T> out(Shape{m, n});
  detail::gemm<T>(false, false, m, n, k, a.ptr(), b.ptr(), out.ptr(), false);
  return record_node<T>(tape, "matmul", {a, b}, out,
                        [a, b, m, n, k](std::span<const T> g, std::span<std::vector<T>*> gin) {
                          if (gin[0])  // dA = G B^T
                            detail::gemm<T>(false, true, m, k, n, g.data(), b.ptr(),
                                            gin[0]->data(), true);
                          if (gin[1])  // dB = A^T G
                            detail::gemm<T>(true, false, k, n, m, a.ptr(), g.data(),
                                            gin[1]->data(), true);
                        });
}

template <typename T>
Tensor<T> reshape(Tape<T>* tape, const Tensor<T>& x, Shape shape) {
  check(shape_numel(shape) == x.numel(), ErrorCode::kShapeMismatch,
        "reshape: cannot view " + shape_str(x.shape()) + " as " + shape_str(shape));
  Tensor<T> out(std::move(shape), x.storage());
  return record_node<T>(tape, "reshape", {x}, out,
                        [](std::span<const T> g, std::span<std::vector<T>*> gin) {
                          if (gin[0])
                            for (std::size_t i = 0; i < g.size(); ++i) (*gin[0])[i] += g[i];
                        });
}

template <typename T>
Tensor<T> transpose(Tape<T>* tape, const Tensor<T>& x, std::vector<std::int64_t> perm) {
  auto r = x.rank();
  if (perm.empty())
    for (std::size_t i = 0; i < r; ++i) perm.push_back(static_cast<std::int64_t>(r - 1 - i));
  std::vector<std::int64_t> sorted = perm;
  std::sort(sorted.begin(), sorted.end());
  bool valid = sorted.size() == r;
  for (std::size_t i = 0; valid && i < r; ++i) valid = sorted[i] == static_cast<std::int64_t>(i);
  check(valid, ErrorCode::kShapeMismatch,
        "transpose: permutation does not match shape " + shape_str(x.shape()));

  Shape out_shape(r), in_strides = x.strides(), gather(r);
  for (std::size_t i = 0; i < r; ++i) {
    out_shape[i] = x.shape()[static_cast<std::size_t>(perm[i])];
    gather[i] = in_strides[static_cast<std::size_t>(perm[i])];
  }
  auto map = offset_map(out_shape, gather);
  Tensor<T> out(out_shape);
  for (std::size_t i = 0; i < map.size(); ++i) out[static_cast<std::int64_t>(i)] = x[map[i]];
  return record_node<T>(tape, "transpose", {x}, out,
                        [map](std::span<const T> g, std::span<std::vector<T>*> gin) {
                          if (!gin[0]) return;
                          for (std::size_t i = 0; i < map.size(); ++i)
                            (*gin[0])[static_cast<std::size_t>(map[i])] += g[i];
                        });
}

template <typename T>
Tensor<T> pad(Tape<T>* tape, const Tensor<T>& x,
              std::vector<std::pair<std::int64_t, std::int64_t>> pads, T value) {
  check(pads.size() == x.rank(), ErrorCode::kShapeMismatch,
        "pad: need one (before, after) pair per axis of " + shape_str(x.shape()));
  Shape out_shape = x.shape();
  Shape origin_strides(x.rank());
  for (std::size_t i = 0; i < x.rank(); ++i) {
    check(pads[i].first >= 0 && pads[i].second >= 0, ErrorCode::kInvalidArgument,
          "pad: negative padding");
    out_shape[i] += pads[i].first + pads[i].second;
  }
  Tensor<T> out(out_shape, value);
  auto out_strides = out.strides();
  std::int64_t base = 0;
  for (std::size_t i = 0; i < x.rank(); ++i) base += pads[i].first * out_strides[i];
  auto map = offset_map(x.shape(), out_strides);
  for (auto& m : map) m += base;
  for (std::size_t i = 0; i < map.size(); ++i) out[map[i]] = x[static_cast<std::int64_t>(i)];
  return record_node<T>(tape, "pad", {x}, out,
                        [map](std::span<const T> g, std::span<std::vector<T>*> gin) {
                          if (!gin[0]) return;
                          for (std::size_t i = 0; i < map.size(); ++i)
                            (*gin[0])[i] += g[static_cast<std::size_t>(map[i])];
                        });
}

template <typename T>
Tensor<T> slice(Tape<T>* tape, const Tensor<T>& x, int axis, std::int64_t start,
                std::int64_t stop) {
  int r = static_cast<int>(x.rank());
  if (axis < 0) axis += r;
  check(axis >= 0 && axis < r, ErrorCode::kInvalidArgument, "slice: axis out of range");
  auto len = x.dim(axis);
  check(0 <= start && start < stop && stop <= len, ErrorCode::kShapeMismatch,
        "slice: range [" + std::to_string(start) + "," + std::to_string(stop) +
            ") invalid for shape " + shape_str(x.shape()));
  std::int64_t outer = 1, inner = 1;
  for (int i = 0; i < axis; ++i) outer *= x.dim(i);
  for (int i = axis + 1; i < r; ++i) inner *= x.dim(i);
  Shape out_shape = x.shape();
  out_shape[static_cast<std::size_t>(axis)] = stop - start;
  Tensor<T> out(out_shape);
  auto width = (stop - start) * inner;
  for (std::int64_t o = 0; o < outer; ++o)
    std::copy_n(x.ptr() + o * len * inner + start * inner, width, out.ptr() + o * width);
  return record_node<T>(
      tape, "slice", {x}, out,
      [outer, inner, len, start, width](std::span<const T> g, std::span<std::vector<T>*> gin) {
        if (!gin[0]) return;
        for (std::int64_t o = 0; o < outer; ++o)
          for (std::int64_t i = 0; i < width; ++i)
            (*gin[0])[static_cast<std::size_t>(o * len * inner + start * inner + i)] +=
                g[static_cast<std::size_t>(o * width + i)];
      });
}

template <typename T>
Tensor<T> relu(Tape<T>* tape, const Tensor<T>& x) {
  return unary<T>(
      tape, "relu", x, [](T v) { return v > T(0) ? v : T(0); },
      [](T v, T) { return v > T(0) ? T(1) : T(0); });
}

template <typename T>
Tensor<T> relu6(Tape<T>* tape, const Tensor<T>& x) {
  return unary<T>(
      tape, "relu6", x, [](T v) { return std::min(std::max(v, T(0)), T(6)); },
      [](T v, T) { return (v > T(0) && v < T(6)) ? T(1) : T(0); });
}

template <typename T>
Tensor<T> exp(Tape<T>* tape, const Tensor<T>& x) {
  return unary<T>(
      tape, "exp", x, [](T v) { return std::exp(v); }, [](T, T y) { return y; });
}

template <typename T>
Tensor<T> log(Tape<T>* tape, const Tensor<T>& x) {
  return unary<T>(
      tape, "log", x, [](T v) { return std::log(v); }, [](T v, T) { return T(1) / v; });
}

template <typename T>
Tensor<T> sum(Tape<T>* tape, const Tensor<T>& x, std::vector<std::int64_t> axes) {
  auto plan = plan_reduction(x.shape(), normalize_axes(std::move(axes), x.rank(), "sum"));
  Tensor<T> out(plan.out_shape);
  for (std::size_t i = 0; i < plan.map.size(); ++i)
    out[plan.map[i]] += x[static_cast<std::int64_t>(i)];
  auto map = std::move(plan.map);
  return record_node<T>(tape, "sum", {x}, out,
                        [map](std::span<const T> g, std::span<std::vector<T>*> gin) {
                          if (!gin[0]) return;
                          for (std::size_t i = 0; i < map.size(); ++i)
                            (*gin[0])[i] += g[static_cast<std::size_t>(map[i])];
                        });
}

template <typename T>
Tensor<T> mean(Tape<T>* tape, const Tensor<T>& x, std::vector<std::int64_t> axes) {
  auto plan = plan_reduction(x.shape(), normalize_axes(std::move(axes), x.rank(), "mean"));
  Tensor<T> out(plan.out_shape);
  for (std::size_t i = 0; i < plan.map.size(); ++i)
    out[plan.map[i]] += x[static_cast<std::int64_t>(i)];
  const T inv = T(1) / static_cast<T>(plan.group);
  for (auto& v : out.data()) v *= inv;
  auto map = std::move(plan.map);
  return record_node<T>(tape, "mean", {x}, out,
                        [map, inv](std::span<const T> g, std::span<std::vector<T>*> gin) {
                          if (!gin[0]) return;
                          for (std::size_t i = 0; i < map.size(); ++i)
                            (*gin[0])[i] += g[static_cast<std::size_t>(map[i])] * inv;
                        });
}

template <typename T>
Tensor<T> max_reduce(Tape<T>* tape, const Tensor<T>& x, std::vector<std::int64_t> axes) {
  auto plan = plan_reduction(x.shape(), normalize_axes(std::move(axes), x.rank(), "max"));
  Tensor<T> out(plan.out_shape, -std::numeric_limits<T>::infinity());
  std::vector<std::int64_t> arg(static_cast<std::size_t>(out.numel()), -1);
  for (std::size_t i = 0; i < plan.map.size(); ++i) {
    auto o = plan.map[i];
    T v = x[static_cast<std::int64_t>(i)];
    if (arg[static_cast<std::size_t>(o)] < 0 || v > out[o]) {
      out[o] = v;
      arg[static_cast<std::size_t>(o)] = static_cast<std::int64_t>(i);
    }
  }
  return record_node<T>(tape, "max", {x}, out,
                        [arg](std::span<const T> g, std::span<std::vector<T>*> gin) {
                          if (!gin[0]) return;
                          for (std::size_t o = 0; o < arg.size(); ++o)
                            (*gin[0])[static_cast<std::size_t>(arg[o])] += g[o];
                        });
}

template <typename T>
Tensor<T> broadcast(Tape<T>* tape, const Tensor<T>& x, Shape target) {
  auto fail_shape = [&] {
    fail(ErrorCode::kShapeMismatch,
         "broadcast: cannot expand " + shape_str(x.shape()) + " to " + shape_str(target));
  };
  if (x.rank() > target.size()) fail_shape();
  auto lead = target.size() - x.rank();
  auto in_strides = x.strides();
  Shape gather(target.size(), 0);
  for (std::size_t i = 0; i < x.rank(); ++i) {
    auto d = x.shape()[i];
    if (d == target[lead + i])
      gather[lead + i] = d == 1 ? 0 : in_strides[i];
    else if (d != 1)
      fail_shape();
  }
  auto map = offset_map(target, gather);
  Tensor<T> out(target);
  for (std::size_t i = 0; i < map.size(); ++i) out[static_cast<std::int64_t>(i)] = x[map[i]];
  return record_node<T>(tape, "broadcast", {x}, out,
                        [map](std::span<const T> g, std::span<std::vector<T>*> gin) {
                          if (!gin[0]) return;
                          for (std::size_t i = 0; i < map.size(); ++i)
                            (*gin[0])[static_cast<std::size_t>(map[i])] += g[i];
                        });
}

template <typename T>
Tensor<T> concat(Tape<T>* tape, const std::vector<Tensor<T>>& xs, int axis) {
  check(!xs.empty(), ErrorCode::kInvalidArgument, "concat: no inputs");
  int r = static_cast<int>(xs[0].rank());
  if (axis < 0) axis += r;
  check(axis >= 0 && axis < r, ErrorCode::kInvalidArgument, "concat: axis out of range");
  Shape out_shape = xs[0].shape();
  out_shape[static_cast<std::size_t>(axis)] = 0;
  for (const auto& x : xs) {
    bool ok = static_cast<int>(x.rank()) == r;
    for (int i = 0; ok && i < r; ++i)
      ok = i == axis || x.dim(i) == xs[0].dim(i);
    if (!ok)
      fail(ErrorCode::kShapeMismatch, "concat: shape mismatch " + shape_str(xs[0].shape()) +
                                          " vs " + shape_str(x.shape()));
    out_shape[static_cast<std::size_t>(axis)] += x.dim(axis);
  }
  std::int64_t outer = 1, inner = 1;
  for (int i = 0; i < axis; ++i) outer *= out_shape[static_cast<std::size_t>(i)];
  for (int i = axis + 1; i < r; ++i) inner *= out_shape[static_cast<std::size_t>(i)];
  auto out_row = out_shape[static_cast<std::size_t>(axis)] * inner;

  std::vector<std::int64_t> widths, offsets;
  std::int64_t acc = 0;
  for (const auto& x : xs) {
    widths.push_back(x.dim(axis) * inner);
    offsets.push_back(acc);
    acc += widths.back();
  }
  Tensor<T> out(out_shape);
  for (std::size_t s = 0; s < xs.size(); ++s)
    for (std::int64_t o = 0; o < outer; ++o)
      std::copy_n(xs[s].ptr() + o * widths[s], widths[s], out.ptr() + o * out_row + offsets[s]);
  return record_node<T>(
      tape, "concat", xs, out,
      [outer, out_row, widths, offsets](std::span<const T> g, std::span<std::vector<T>*> gin) {
        for (std::size_t s = 0; s < gin.size(); ++s) {
          if (!gin[s]) continue;
          for (std::int64_t o = 0; o < outer; ++o)
            for (std::int64_t i = 0; i < widths[s]; ++i)
              (*gin[s])[static_cast<std::size_t>(o * widths[s] + i)] +=
                  g[static_cast<std::size_t>(o * out_row + offsets[s] + i)];
        }
      });
}

template <typename T>
Tensor<T> record(Tape<T>* tape, PrimitiveOp op, const std::vector<Tensor<T>>& inputs,
                 const Attrs& attrs) {
  std::size_t arity = (op == PrimitiveOp::kAdd || op == PrimitiveOp::kSub ||
                       op == PrimitiveOp::kMul || op == PrimitiveOp::kMatmul)
                          ? 2
                          : 1;
  check(inputs.size() == arity, ErrorCode::kInvalidArgument,
        "record: " + std::string(primitive_name(op)) + " expects " + std::to_string(arity) +
            " input(s), got " + std::to_string(inputs.size()));
  auto axes = [&] {
    auto it = attrs.ints.find("axes");
    return it == attrs.ints.end() ? std::vector<std::int64_t>{} : it->second;
  };
  const auto& x = inputs[0];
  switch (op) {
    case PrimitiveOp::kAdd: return add(tape, x, inputs[1]);
    case PrimitiveOp::kSub: return sub(tape, x, inputs[1]);
    case PrimitiveOp::kMul: return mul(tape, x, inputs[1]);
    case PrimitiveOp::kMatmul: return matmul(tape, x, inputs[1]);
    case PrimitiveOp::kReshape: return reshape(tape, x, attrs.list("shape"));
    case PrimitiveOp::kTranspose: {
      auto it = attrs.ints.find("perm");
      return transpose(tape, x, it == attrs.ints.end() ? std::vector<std::int64_t>{} : it->second);
    }
    case PrimitiveOp::kPad: {
      const auto& flat = attrs.list("pads");
      check(flat.size() % 2 == 0, ErrorCode::kInvalidArgument, "record: pads must be pairs");
      std::vector<std::pair<std::int64_t, std::int64_t>> pads;
      for (std::size_t i = 0; i < flat.size(); i += 2) pads.emplace_back(flat[i], flat[i + 1]);
      return pad(tape, x, std::move(pads), static_cast<T>(attrs.real("value", 0.0)));
    }
    case PrimitiveOp::kSlice:
      return slice(tape, x, static_cast<int>(attrs.scalar("axis")), attrs.scalar("start"),
                   attrs.scalar("stop"));
    case PrimitiveOp::kRelu: return relu(tape, x);
    case PrimitiveOp::kRelu6: return relu6(tape, x);
    case PrimitiveOp::kExp: return exp(tape, x);
    case PrimitiveOp::kLog: return log(tape, x);
    case PrimitiveOp::kSum: return sum(tape, x, axes());
    case PrimitiveOp::kMean: return mean(tape, x, axes());
    case PrimitiveOp::kMax: return max_reduce(tape, x, axes());
    case PrimitiveOp::kBroadcast: return broadcast(tape, x, attrs.list("shape"));
  }
  fail(ErrorCode::kInvalidArgument, "record: unknown op kind");
}

template <typename T>
Tensor<T> record(Tape<T>* tape, std::string_view op_kind, const std::vector<Tensor<T>>& inputs,
                 const Attrs& attrs) {
  return record(tape, parse_primitive(op_kind), inputs, attrs);
}

#define FERGRAD_INSTANTIATE_OPS(T)                                                          \
  template Tensor<T> add(Tape<T>*, const Tensor<T>&, const Tensor<T>&);                    \
  template Tensor<T> sub(Tape<T>*, const Tensor<T>&, const Tensor<T>&);                    \
  template Tensor<T> mul(Tape<T>*, const Tensor<T>&, const Tensor<T>&);                    \
  template Tensor<T> matmul(Tape<T>*, const Tensor<T>&, const Tensor<T>&);                 \
  template Tensor<T> reshape(Tape<T>*, const Tensor<T>&, Shape);                           \
  template Tensor<T> transpose(Tape<T>*, const Tensor<T>&, std::vector<std::int64_t>);     \
  template Tensor<T> pad(Tape<T>*, const Tensor<T>&,                                       \
                         std::vector<std::pair<std::int64_t, std::int64_t>>, T);           \
  template Tensor<T> slice(Tape<T>*, const Tensor<T>&, int, std::int64_t, std::int64_t);   \
  template Tensor<T> relu(Tape<T>*, const Tensor<T>&);                                     \
  template Tensor<T> relu6(Tape<T>*, const Tensor<T>&);                                    \
  template Tensor<T> exp(Tape<T>*, const Tensor<T>&);                                      \
  template Tensor<T> log(Tape<T>*, const Tensor<T>&);                                      \
  template Tensor<T> sum(Tape<T>*, const Tensor<T>&, std::vector<std::int64_t>);           \
  template Tensor<T> mean(Tape<T>*, const Tensor<T>&, std::vector<std::int64_t>);          \
  template Tensor<T> max_reduce(Tape<T>*, const Tensor<T>&, std::vector<std::int64_t>);    \
  template Tensor<T> broadcast(Tape<T>*, const Tensor<T>&, Shape);                         \
  template Tensor<T> concat(Tape<T>*, const std::vector<Tensor<T>>&, int);                 \
  template Tensor<T> record(Tape<T>*, PrimitiveOp, const std::vector<Tensor<T>>&,          \
                            const Attrs&);                                                 \
  template Tensor<T> record(Tape<T>*, std::string_view, const std::vector<Tensor<T>>&,     \
                            const Attrs&);

FERGRAD_INSTANTIATE_OPS(float)
FERGRAD_INSTANTIATE_OPS(double)

}  // namespace fergrad
