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

#include "fergrad/layers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "gemm.hpp"

namespace fergrad {
namespace {

struct ConvGeometry {
  std::int64_t n, h, w, c_in, k, out_h, out_w, pad_top, pad_left;
  int stride;
};

std::int64_t same_pad_before(std::int64_t in, std::int64_t out, std::int64_t k, int s) {
  auto total = std::max<std::int64_t>((out - 1) * s + k - in, 0);
  return total / 2;
}

template <typename T>
ConvGeometry geometry(const char* op, const Tensor<T>& x, std::int64_t k, std::int64_t c_in,
                      int stride, Padding padding) {
  check(x.rank() == 4, ErrorCode::kShapeMismatch,
        std::string(op) + ": expected NHWC input, got " + shape_str(x.shape()));
  check(stride >= 1, ErrorCode::kInvalidArgument,
        std::string(op) + ": invalid stride " + std::to_string(stride));
  if (x.dim(3) != c_in)
    fail(ErrorCode::kShapeMismatch, std::string(op) + ": channel mismatch, input " +
                                        shape_str(x.shape()) + " vs kernel C_in " +
                                        std::to_string(c_in));
  ConvGeometry g{x.dim(0), x.dim(1), x.dim(2), c_in, k, 0, 0, 0, 0, stride};
  g.out_h = conv_output_size(g.h, k, stride, padding);
  g.out_w = conv_output_size(g.w, k, stride, padding);
  check(g.out_h >= 1 && g.out_w >= 1, ErrorCode::kShapeMismatch,
        std::string(op) + ": kernel larger than input " + shape_str(x.shape()));
  if (padding == Padding::kSame) {
    g.pad_top = same_pad_before(g.h, g.out_h, k, stride);
    g.pad_left = same_pad_before(g.w, g.out_w, k, stride);
  }
  return g;
}

// Gathers the receptive fields of image n into rows of [out_h*out_w, k*k*C].
template <typename T>
void im2col(const ConvGeometry& g, const T* img, T* col) {
  const auto row = g.k * g.k * g.c_in;
  for (std::int64_t oy = 0; oy < g.out_h; ++oy)
    for (std::int64_t ox = 0; ox < g.out_w; ++ox) {
      T* dst = col + (oy * g.out_w + ox) * row;
      for (std::int64_t ky = 0; ky < g.k; ++ky) {
        const auto iy = oy * g.stride - g.pad_top + ky;
        for (std::int64_t kx = 0; kx < g.k; ++kx, dst += g.c_in) {
          const auto ix = ox * g.stride - g.pad_left + kx;
          if (iy < 0 || iy >= g.h || ix < 0 || ix >= g.w)
            std::fill_n(dst, g.c_in, T(0));
          else
            std::copy_n(img + (iy * g.w + ix) * g.c_in, g.c_in, dst);
        }
      }
    }
}

template <typename T>
void col2im_add(const ConvGeometry& g, const T* col, T* img) {
  const auto row = g.k * g.k * g.c_in;
  for (std::int64_t oy = 0; oy < g.out_h; ++oy)
    for (std::int64_t ox = 0; ox < g.out_w; ++ox) {
      const T* src = col + (oy * g.out_w + ox) * row;
      for (std::int64_t ky = 0; ky < g.k; ++ky) {
        const auto iy = oy * g.stride - g.pad_top + ky;
        for (std::int64_t kx = 0; kx < g.k; ++kx, src += g.c_in) {
          const auto ix = ox * g.stride - g.pad_left + kx;
          if (iy < 0 || iy >= g.h || ix < 0 || ix >= g.w) continue;
          T* dst = img + (iy * g.w + ix) * g.c_in;
          for (std::int64_t c = 0; c < g.c_in; ++c) dst[c] += src[c];
        }
      }
    }
}

template <typename T>
void check_bias(const char* op, const std::optional<Tensor<T>>& bias, std::int64_t c_out) {
  if (bias && bias->numel() != c_out)
    fail(ErrorCode::kShapeMismatch, std::string(op) + ": bias " + shape_str(bias->shape()) +
                                        " does not match " + std::to_string(c_out) +
                                        " output channels");
}

}  // namespace

std::int64_t conv_output_size(std::int64_t in, std::int64_t kernel, int stride, Padding padding) {
  if (padding == Padding::kSame) return (in + stride - 1) / stride;
  if (in < kernel) return 0;
  return (in - kernel) / stride + 1;
}

template <typename T>
BatchNormState<T> BatchNormState<T>::create(std::int64_t channels) {
  BatchNormState s;
  s.scale = Tensor<T>(Shape{channels}, T(1));
  s.shift = Tensor<T>(Shape{channels}, T(0));
  s.running_mean = Tensor<T>(Shape{channels}, T(0));
  s.running_var = Tensor<T>(Shape{channels}, T(1));
  s.scale.set_requires_grad(true);
  s.shift.set_requires_grad(true);
  return s;
}

template <typename T>
void BatchNormState<T>::reset_running_stats() {
  std::fill(running_mean.data().begin(), running_mean.data().end(), T(0));
  std::fill(running_var.data().begin(), running_var.data().end(), T(1));
  has_running_stats = true;
}

template <typename T>
Tensor<T> conv2d(Tape<T>* tape, const Tensor<T>& x, const ConvParams<T>& p) {
  const auto& kern = p.kernel;
  check(kern.rank() == 4 && kern.dim(0) == kern.dim(1), ErrorCode::kShapeMismatch,
        "conv2d: kernel must be [k, k, C_in, C_out], got " + shape_str(kern.shape()));
  const auto g = geometry("conv2d", x, kern.dim(0), kern.dim(2), p.stride, p.padding);
  const auto c_out = kern.dim(3);
  check_bias("conv2d", p.bias, c_out);

  const auto rows = g.out_h * g.out_w;
  const auto depth = g.k * g.k * g.c_in;
  const bool pointwise = g.k == 1 && g.stride == 1;
  Tensor<T> out(Shape{g.n, g.out_h, g.out_w, c_out});

  if (pointwise) {
    detail::gemm<T>(false, false, g.n * rows, c_out, g.c_in, x.ptr(), kern.ptr(), out.ptr(), false);
  } else {
    std::vector<T> col(static_cast<std::size_t>(rows * depth));
    for (std::int64_t n = 0; n < g.n; ++n) {
      im2col(g, x.ptr() + n * g.h * g.w * g.c_in, col.data());
      detail::gemm<T>(false, false, rows, c_out, depth, col.data(), kern.ptr(),
                      out.ptr() + n * rows * c_out, false);
    }
  }
  if (p.bias) {
    const T* b = p.bias->ptr();
    T* o = out.ptr();
    for (std::int64_t r = 0; r < g.n * rows; ++r)
      for (std::int64_t c = 0; c < c_out; ++c) o[r * c_out + c] += b[c];
  }

  std::vector<Tensor<T>> inputs{x, kern};
  if (p.bias) inputs.push_back(*p.bias);
  return record_node<T>(
      tape, "conv2d", std::move(inputs), out,
      [x, kern, g, c_out, rows, depth, pointwise](std::span<const T> gy,
                                                  std::span<std::vector<T>*> gin) {
        T* gx = gin[0] ? gin[0]->data() : nullptr;
        T* gk = gin[1] ? gin[1]->data() : nullptr;
        if (gin.size() > 2 && gin[2]) {
          T* gb = gin[2]->data();
          for (std::int64_t r = 0; r < g.n * rows; ++r)
            for (std::int64_t c = 0; c < c_out; ++c) gb[c] += gy[static_cast<std::size_t>(r * c_out + c)];
        }
        if (pointwise) {
          if (gk) detail::gemm<T>(true, false, g.c_in, c_out, g.n * rows, x.ptr(), gy.data(), gk, true);
          if (gx) detail::gemm<T>(false, true, g.n * rows, g.c_in, c_out, gy.data(), kern.ptr(), gx, true);
          return;
        }
        std::vector<T> col(static_cast<std::size_t>(rows * depth));
        for (std::int64_t n = 0; n < g.n; ++n) {
          const T* gyn = gy.data() + n * rows * c_out;
          if (gk) {
            im2col(g, x.ptr() + n * g.h * g.w * g.c_in, col.data());
            detail::gemm<T>(true, false, depth, c_out, rows, col.data(), gyn, gk, true);
          }
          if (gx) {
            detail::gemm<T>(false, true, rows, depth, c_out, gyn, kern.ptr(), col.data(), false);
            col2im_add(g, col.data(), gx + n * g.h * g.w * g.c_in);
          }
        }
      });
}

template <typename T>
Tensor<T> depthwise_conv2d(Tape<T>* tape, const Tensor<T>& x, const ConvParams<T>& p) {
  const auto& kern = p.kernel;
  check(kern.rank() == 4 && kern.dim(0) == kern.dim(1), ErrorCode::kShapeMismatch,
        "depthwise_conv2d: kernel must be [k, k, C, 1], got " + shape_str(kern.shape()));
  check(kern.dim(3) == 1, ErrorCode::kInvalidArgument,
        "depthwise_conv2d: channel multiplier must be 1, got " + std::to_string(kern.dim(3)));
  const auto g = geometry("depthwise_conv2d", x, kern.dim(0), kern.dim(2), p.stride, p.padding);
  const auto c = g.c_in;
  check_bias("depthwise_conv2d", p.bias, c);

  Tensor<T> out(Shape{g.n, g.out_h, g.out_w, c});
  const T* kp = kern.ptr();
  for (std::int64_t n = 0; n < g.n; ++n) {
    const T* img = x.ptr() + n * g.h * g.w * c;
    for (std::int64_t oy = 0; oy < g.out_h; ++oy)
      for (std::int64_t ox = 0; ox < g.out_w; ++ox) {
        T* dst = out.ptr() + ((n * g.out_h + oy) * g.out_w + ox) * c;
        for (std::int64_t ky = 0; ky < g.k; ++ky) {
          const auto iy = oy * g.stride - g.pad_top + ky;
          if (iy < 0 || iy >= g.h) continue;
          for (std::int64_t kx = 0; kx < g.k; ++kx) {
            const auto ix = ox * g.stride - g.pad_left + kx;
            if (ix < 0 || ix >= g.w) continue;
            const T* src = img + (iy * g.w + ix) * c;
            const T* wk = kp + (ky * g.k + kx) * c;
            for (std::int64_t ch = 0; ch < c; ++ch) dst[ch] += src[ch] * wk[ch];
          }
        }
        if (p.bias)
          for (std::int64_t ch = 0; ch < c; ++ch) dst[ch] += (*p.bias)[ch];
      }
  }

  std::vector<Tensor<T>> inputs{x, kern};
  if (p.bias) inputs.push_back(*p.bias);
  return record_node<T>(
      tape, "depthwise_conv2d", std::move(inputs), out,
      [x, kern, g](std::span<const T> gy, std::span<std::vector<T>*> gin) {
        const auto c = g.c_in;
        T* gx = gin[0] ? gin[0]->data() : nullptr;
        T* gk = gin[1] ? gin[1]->data() : nullptr;
        T* gb = gin.size() > 2 && gin[2] ? gin[2]->data() : nullptr;
        const T* kp = kern.ptr();
        for (std::int64_t n = 0; n < g.n; ++n) {
          const T* img = x.ptr() + n * g.h * g.w * c;
          T* gimg = gx ? gx + n * g.h * g.w * c : nullptr;
          for (std::int64_t oy = 0; oy < g.out_h; ++oy)
            for (std::int64_t ox = 0; ox < g.out_w; ++ox) {
              const T* go = gy.data() + ((n * g.out_h + oy) * g.out_w + ox) * c;
              if (gb)
                for (std::int64_t ch = 0; ch < c; ++ch) gb[ch] += go[ch];
              for (std::int64_t ky = 0; ky < g.k; ++ky) {
                const auto iy = oy * g.stride - g.pad_top + ky;
                if (iy < 0 || iy >= g.h) continue;
                for (std::int64_t kx = 0; kx < g.k; ++kx) {
                  const auto ix = ox * g.stride - g.pad_left + kx;
                  if (ix < 0 || ix >= g.w) continue;
                  const auto off = (iy * g.w + ix) * c;
                  const auto koff = (ky * g.k + kx) * c;
                  if (gk)
                    for (std::int64_t ch = 0; ch < c; ++ch) gk[koff + ch] += go[ch] * img[off + ch];
                  if (gimg)
                    for (std::int64_t ch = 0; ch < c; ++ch) gimg[off + ch] += go[ch] * kp[koff + ch];
                }
              }
            }
        }
      });
}

template <typename T>
Tensor<T> depthwise_separable(Tape<T>* tape, const Tensor<T>& x, const ConvParams<T>& depthwise,
                              const ConvParams<T>& pointwise) {
  check(pointwise.kernel.rank() == 4 && pointwise.kernel.dim(0) == 1 &&
            pointwise.kernel.dim(1) == 1,
        ErrorCode::kInvalidArgument,
        "depthwise_separable: pointwise kernel must be 1x1, got " +
            shape_str(pointwise.kernel.shape()));
  check(pointwise.stride == 1, ErrorCode::kInvalidArgument,
        "depthwise_separable: pointwise stride must be 1");
  auto mid = depthwise_conv2d(tape, x, depthwise);
  return conv2d(tape, mid, pointwise);
}

template <typename T>
Tensor<T> batch_norm(Tape<T>* tape, const Tensor<T>& x, BatchNormState<T>& st, Mode mode) {
  const auto c = x.dim(-1);
  if (st.channels() != c)
    fail(ErrorCode::kShapeMismatch, "batch_norm: state has " + std::to_string(st.channels()) +
                                        " channels, input " + shape_str(x.shape()));
  const auto rows = x.numel() / c;
  std::vector<T> mean(static_cast<std::size_t>(c)), inv_std(static_cast<std::size_t>(c));
  const T* xp = x.ptr();

  if (mode == Mode::kTrain) {
    std::vector<double> s(static_cast<std::size_t>(c), 0.0), ss(static_cast<std::size_t>(c), 0.0);
    for (std::int64_t r = 0; r < rows; ++r)
      for (std::int64_t ch = 0; ch < c; ++ch) s[ch] += xp[r * c + ch];
    for (std::int64_t ch = 0; ch < c; ++ch) s[ch] /= static_cast<double>(rows);
    for (std::int64_t r = 0; r < rows; ++r)
      for (std::int64_t ch = 0; ch < c; ++ch) {
        const double d = xp[r * c + ch] - s[ch];
        ss[ch] += d * d;
      }
    for (std::int64_t ch = 0; ch < c; ++ch) {
      const double var = ss[ch] / static_cast<double>(rows);
      mean[ch] = static_cast<T>(s[ch]);
      inv_std[ch] = static_cast<T>(1.0 / std::sqrt(var + static_cast<double>(st.epsilon)));
      if (!st.has_running_stats) {
        st.running_mean[ch] = T(0);
        st.running_var[ch] = T(1);
      }
      st.running_mean[ch] = st.momentum * st.running_mean[ch] + (T(1) - st.momentum) * mean[ch];
      st.running_var[ch] =
          st.momentum * st.running_var[ch] + (T(1) - st.momentum) * static_cast<T>(var);
    }
    st.has_running_stats = true;
    ++st.train_steps;
  } else {
    check(st.has_running_stats, ErrorCode::kState,
          "batch_norm: eval mode requested before running statistics exist");
    for (std::int64_t ch = 0; ch < c; ++ch) {
      mean[ch] = st.running_mean[ch];
      inv_std[ch] = T(1) / std::sqrt(st.running_var[ch] + st.epsilon);
    }
  }

  Tensor<T> xhat(x.shape()), out(x.shape());
  const T* sc = st.scale.ptr();
  const T* sh = st.shift.ptr();
  for (std::int64_t r = 0; r < rows; ++r)
    for (std::int64_t ch = 0; ch < c; ++ch) {
      const auto i = r * c + ch;
      const T v = (xp[i] - mean[ch]) * inv_std[ch];
      xhat[i] = v;
      out[i] = sc[ch] * v + sh[ch];
    }

  const bool train = mode == Mode::kTrain;
  return record_node<T>(
      tape, train ? "batch_norm_train" : "batch_norm_eval", {x, st.scale, st.shift}, out,
      [xhat, scale = st.scale, inv_std, c, rows, train](std::span<const T> gy,
                                                        std::span<std::vector<T>*> gin) {
        const T* xh = xhat.ptr();
        const T* sc = scale.ptr();
        std::vector<double> sum_g(static_cast<std::size_t>(c), 0.0),
            sum_gx(static_cast<std::size_t>(c), 0.0);
        for (std::int64_t r = 0; r < rows; ++r)
          for (std::int64_t ch = 0; ch < c; ++ch) {
            const auto i = r * c + ch;
            sum_g[ch] += gy[i];
            sum_gx[ch] += gy[i] * xh[i];
          }
        if (gin[1])
          for (std::int64_t ch = 0; ch < c; ++ch) (*gin[1])[ch] += static_cast<T>(sum_gx[ch]);
        if (gin[2])
          for (std::int64_t ch = 0; ch < c; ++ch) (*gin[2])[ch] += static_cast<T>(sum_g[ch]);
        if (!gin[0]) return;
        T* gx = gin[0]->data();
        if (!train) {
          for (std::int64_t r = 0; r < rows; ++r)
            for (std::int64_t ch = 0; ch < c; ++ch)
              gx[r * c + ch] += gy[r * c + ch] * sc[ch] * inv_std[ch];
          return;
        }
        const T inv_rows = T(1) / static_cast<T>(rows);
        for (std::int64_t r = 0; r < rows; ++r)
          for (std::int64_t ch = 0; ch < c; ++ch) {
            const auto i = r * c + ch;
            const T mg = static_cast<T>(sum_g[ch]) * inv_rows;
            const T mgx = static_cast<T>(sum_gx[ch]) * inv_rows;
            gx[i] += sc[ch] * inv_std[ch] * (gy[i] - mg - xh[i] * mgx);
          }
      });
}

template <typename T>
Tensor<T> inverted_bottleneck(Tape<T>* tape, const Tensor<T>& x, BottleneckParams<T>& p,
                              Mode mode) {
  auto h = conv2d(tape, x, p.expand);
  h = relu6(tape, batch_norm(tape, h, p.bn_expand, mode));
  h = depthwise_conv2d(tape, h, p.depthwise);
  h = relu6(tape, batch_norm(tape, h, p.bn_depthwise, mode));
  h = conv2d(tape, h, p.project);
  h = batch_norm(tape, h, p.bn_project, mode);
  if (!p.residual) return h;
  if (h.shape() != x.shape())
    fail(ErrorCode::kShapeMismatch, "inverted_bottleneck: residual needs matching shapes, " +
                                        shape_str(x.shape()) + " vs " + shape_str(h.shape()));
  return add(tape, h, x);
}

template <typename T>
Tensor<T> max_pool(Tape<T>* tape, const Tensor<T>& x, int window, int stride) {
  check(x.rank() == 4, ErrorCode::kShapeMismatch,
        "max_pool: expected NHWC input, got " + shape_str(x.shape()));
  check(window >= 1 && stride >= 1, ErrorCode::kInvalidArgument, "max_pool: invalid window/stride");
  const auto n = x.dim(0), h = x.dim(1), w = x.dim(2), c = x.dim(3);
  check(window <= h && window <= w, ErrorCode::kShapeMismatch,
        "max_pool: window " + std::to_string(window) + " larger than input " + shape_str(x.shape()));
  const auto oh = (h - window) / stride + 1, ow = (w - window) / stride + 1;
  Tensor<T> out(Shape{n, oh, ow, c});
  std::vector<std::int64_t> arg(static_cast<std::size_t>(out.numel()));
  for (std::int64_t b = 0; b < n; ++b)
    for (std::int64_t oy = 0; oy < oh; ++oy)
      for (std::int64_t ox = 0; ox < ow; ++ox)
        for (std::int64_t ch = 0; ch < c; ++ch) {
          const auto o = ((b * oh + oy) * ow + ox) * c + ch;
          std::int64_t best = -1;
          for (int ky = 0; ky < window; ++ky)
            for (int kx = 0; kx < window; ++kx) {
              const auto i = ((b * h + oy * stride + ky) * w + ox * stride + kx) * c + ch;
              if (best < 0 || x[i] > x[best]) best = i;
            }
          out[o] = x[best];
          arg[static_cast<std::size_t>(o)] = best;
        }
  return record_node<T>(tape, "max_pool", {x}, out,
                        [arg](std::span<const T> gy, std::span<std::vector<T>*> gin) {
                          if (!gin[0]) return;
                          for (std::size_t o = 0; o < arg.size(); ++o)
                            (*gin[0])[static_cast<std::size_t>(arg[o])] += gy[o];
                        });
}

template <typename T>
Tensor<T> global_avg_pool(Tape<T>* tape, const Tensor<T>& x) {
  check(x.rank() == 4, ErrorCode::kShapeMismatch,
        "global_avg_pool: expected NHWC input, got " + shape_str(x.shape()));
  const auto n = x.dim(0), hw = x.dim(1) * x.dim(2), c = x.dim(3);
  Tensor<T> out(Shape{n, 1, 1, c});
  const T inv = T(1) / static_cast<T>(hw);
  for (std::int64_t b = 0; b < n; ++b) {
    for (std::int64_t p = 0; p < hw; ++p)
      for (std::int64_t ch = 0; ch < c; ++ch) out[b * c + ch] += x[(b * hw + p) * c + ch];
    for (std::int64_t ch = 0; ch < c; ++ch) out[b * c + ch] *= inv;
  }
  return record_node<T>(tape, "global_avg_pool", {x}, out,
                        [n, hw, c, inv](std::span<const T> gy, std::span<std::vector<T>*> gin) {
                          if (!gin[0]) return;
                          for (std::int64_t b = 0; b < n; ++b)
                            for (std::int64_t p = 0; p < hw; ++p)
                              for (std::int64_t ch = 0; ch < c; ++ch)
                                (*gin[0])[static_cast<std::size_t>((b * hw + p) * c + ch)] +=
                                    gy[static_cast<std::size_t>(b * c + ch)] * inv;
                        });
}

template <typename T>
Tensor<T> dense(Tape<T>* tape, const Tensor<T>& x, const Tensor<T>& w,
                const std::optional<Tensor<T>>& b) {
  if (x.rank() != 2 || w.rank() != 2 || x.dim(1) != w.dim(0))
    fail(ErrorCode::kShapeMismatch,
         "dense: dim mismatch " + shape_str(x.shape()) + " vs weights " + shape_str(w.shape()));
  check_bias("dense", b, w.dim(1));
  auto y = matmul(tape, x, w);
  if (!b) return y;
  return add(tape, y, broadcast(tape, *b, y.shape()));
}

template <typename T>
Tensor<T> softmax_cross_entropy(Tape<T>* tape, const Tensor<T>& logits,
                                std::span<const int> labels) {
  check(logits.rank() == 2, ErrorCode::kShapeMismatch,
        "softmax_cross_entropy: logits must be [N, K], got " + shape_str(logits.shape()));
  const auto n = logits.dim(0), k = logits.dim(1);
  check(static_cast<std::int64_t>(labels.size()) == n, ErrorCode::kShapeMismatch,
        "softmax_cross_entropy: " + std::to_string(labels.size()) + " labels for batch of " +
            std::to_string(n));
  for (int l : labels)
    check(l >= 0 && l < k, ErrorCode::kInvalidArgument,
          "softmax_cross_entropy: label " + std::to_string(l) + " outside [0, " +
              std::to_string(k) + ")");

  Tensor<T> probs(logits.shape());
  double loss = 0.0;
  for (std::int64_t r = 0; r < n; ++r) {
    const T* z = logits.ptr() + r * k;
    const T zmax = *std::max_element(z, z + k);
    double denom = 0.0;
    for (std::int64_t j = 0; j < k; ++j) denom += std::exp(static_cast<double>(z[j] - zmax));
    const double log_denom = std::log(denom);
    for (std::int64_t j = 0; j < k; ++j)
      probs[r * k + j] = static_cast<T>(std::exp(static_cast<double>(z[j] - zmax) - log_denom));
    loss += log_denom - static_cast<double>(z[labels[static_cast<std::size_t>(r)]] - zmax);
  }
  auto out = Tensor<T>::scalar(static_cast<T>(loss / static_cast<double>(n)));
  std::vector<int> lab(labels.begin(), labels.end());
  return record_node<T>(tape, "softmax_cross_entropy", {logits}, out,
                        [probs, lab, n, k](std::span<const T> gy, std::span<std::vector<T>*> gin) {
                          if (!gin[0]) return;
                          const T scale = gy[0] / static_cast<T>(n);
                          auto& g = *gin[0];
                          for (std::int64_t r = 0; r < n; ++r)
                            for (std::int64_t j = 0; j < k; ++j) {
                              T d = probs[r * k + j] - (lab[static_cast<std::size_t>(r)] == j ? T(1) : T(0));
                              g[static_cast<std::size_t>(r * k + j)] += scale * d;
                            }
                        });
}

std::int64_t conv_param_count(std::int64_t k, std::int64_t c_in, std::int64_t c_out, bool bias) {
  return k * k * c_in * c_out + (bias ? c_out : 0);
}

std::int64_t depsep_param_count(std::int64_t k, std::int64_t depth, std::int64_t filters) {
  return k * k * depth + depth * filters;
}

std::int64_t bottleneck_param_count(std::int64_t c_in, std::int64_t c_out,
                                    std::int64_t expansion) {
  const auto hidden = c_in * expansion;
  return c_in * hidden + 9 * hidden + hidden * c_out;
}

#define FERGRAD_INSTANTIATE_LAYERS(T)                                                         \
  template struct BatchNormState<T>;                                                          \
  template Tensor<T> conv2d(Tape<T>*, const Tensor<T>&, const ConvParams<T>&);                \
  template Tensor<T> depthwise_conv2d(Tape<T>*, const Tensor<T>&, const ConvParams<T>&);      \
  template Tensor<T> depthwise_separable(Tape<T>*, const Tensor<T>&, const ConvParams<T>&,    \
                                         const ConvParams<T>&);                               \
  template Tensor<T> batch_norm(Tape<T>*, const Tensor<T>&, BatchNormState<T>&, Mode);        \
  template Tensor<T> inverted_bottleneck(Tape<T>*, const Tensor<T>&, BottleneckParams<T>&,    \
                                         Mode);                                               \
  template Tensor<T> max_pool(Tape<T>*, const Tensor<T>&, int, int);                          \
  template Tensor<T> global_avg_pool(Tape<T>*, const Tensor<T>&);                             \
  template Tensor<T> dense(Tape<T>*, const Tensor<T>&, const Tensor<T>&,                      \
                           const std::optional<Tensor<T>>&);                                  \
  template Tensor<T> softmax_cross_entropy(Tape<T>*, const Tensor<T>&, std::span<const int>);

FERGRAD_INSTANTIATE_LAYERS(float)
FERGRAD_INSTANTIATE_LAYERS(double)

}  // namespace fergrad
