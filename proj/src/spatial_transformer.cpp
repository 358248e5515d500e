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

#include "fergrad/spatial_transformer.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace fergrad {
namespace {

template <typename T>
T lattice(std::int64_t i, std::int64_t n) {
  if (n == 1) return T(0);
  return T(2 * i) / T(n - 1) - T(1);
}

// Pixel coordinate of a normalized coordinate. Results within a few ulps of a
// pixel centre are snapped onto it: the normalized lattice is not exactly
// representable, and without the snap an identity grid would blend neighbours
// by ~1e-16.
template <typename T>
T to_pixel(T g, std::int64_t n) {
  const T half = T(n - 1) / T(2);
  T p = (g + T(1)) * half;
  const T r = std::nearbyint(p);
  const T tol = T(8) * std::numeric_limits<T>::epsilon() * std::max<T>(T(1), T(n));
  if (std::abs(p - r) <= tol) p = r;
  return p;
}

}  // namespace

template <typename T>
Tensor<T> affine_grid(Tape<T>* tape, const Tensor<T>& theta, std::int64_t out_h,
                      std::int64_t out_w) {
  check(theta.rank() == 3 && theta.dim(1) == 2 && theta.dim(2) == 3, ErrorCode::kShapeMismatch,
        "affine_grid: theta must be [N, 2, 3], got " + shape_str(theta.shape()));
  check(out_h >= 1 && out_w >= 1, ErrorCode::kInvalidArgument, "affine_grid: empty output size");
  const auto n = theta.dim(0);
  Tensor<T> grid(Shape{n, out_h, out_w, 2});
  for (std::int64_t b = 0; b < n; ++b) {
    const T* th = theta.ptr() + b * 6;
    for (std::int64_t i = 0; i < out_h; ++i) {
      const T y = lattice<T>(i, out_h);
      for (std::int64_t j = 0; j < out_w; ++j) {
        const T x = lattice<T>(j, out_w);
        T* g = grid.ptr() + ((b * out_h + i) * out_w + j) * 2;
        g[0] = th[0] * x + th[1] * y + th[2];
        g[1] = th[3] * x + th[4] * y + th[5];
      }
    }
  }
  return record_node<T>(
      tape, "affine_grid", {theta}, grid,
      [n, out_h, out_w](std::span<const T> gg, std::span<std::vector<T>*> gin) {
        if (!gin[0]) return;
        auto& gt = *gin[0];
        for (std::int64_t b = 0; b < n; ++b)
          for (std::int64_t i = 0; i < out_h; ++i) {
            const T y = lattice<T>(i, out_h);
            for (std::int64_t j = 0; j < out_w; ++j) {
              const T x = lattice<T>(j, out_w);
              const T* g = gg.data() + ((b * out_h + i) * out_w + j) * 2;
              T* d = gt.data() + b * 6;
              d[0] += g[0] * x, d[1] += g[0] * y, d[2] += g[0];
              d[3] += g[1] * x, d[4] += g[1] * y, d[5] += g[1];
            }
          }
      });
}

template <typename T>
Tensor<T> bilinear_sample(Tape<T>* tape, const Tensor<T>& img, const Tensor<T>& grid) {
  check(img.rank() == 4, ErrorCode::kShapeMismatch,
        "bilinear_sample: image must be NHWC, got " + shape_str(img.shape()));
  check(grid.rank() == 4 && grid.dim(3) == 2 && grid.dim(0) == img.dim(0),
        ErrorCode::kShapeMismatch,
        "bilinear_sample: grid " + shape_str(grid.shape()) + " does not match image " +
            shape_str(img.shape()));
  const auto n = img.dim(0), h = img.dim(1), w = img.dim(2), c = img.dim(3);
  const auto oh = grid.dim(1), ow = grid.dim(2);
  Tensor<T> out(Shape{n, oh, ow, c});

  auto pixel = [&](std::int64_t b, std::int64_t y, std::int64_t x, std::int64_t ch) -> T {
    if (y < 0 || y >= h || x < 0 || x >= w) return T(0);
    return img[((b * h + y) * w + x) * c + ch];
  };

  for (std::int64_t b = 0; b < n; ++b)
    for (std::int64_t i = 0; i < oh; ++i)
      for (std::int64_t j = 0; j < ow; ++j) {
        const T* g = grid.ptr() + ((b * oh + i) * ow + j) * 2;
        const T px = to_pixel(g[0], w), py = to_pixel(g[1], h);
        const T fx0 = std::floor(px), fy0 = std::floor(py);
        const T fx = px - fx0, fy = py - fy0;
        const auto x0 = static_cast<std::int64_t>(fx0), y0 = static_cast<std::int64_t>(fy0);
        T* o = out.ptr() + ((b * oh + i) * ow + j) * c;
        for (std::int64_t ch = 0; ch < c; ++ch) {
          const T a = pixel(b, y0, x0, ch), bb = pixel(b, y0, x0 + 1, ch);
          const T p = pixel(b, y0 + 1, x0, ch), q = pixel(b, y0 + 1, x0 + 1, ch);
          const T top = a + fx * (bb - a);
          const T bottom = p + fx * (q - p);
          o[ch] = top + fy * (bottom - top);
        }
      }

  return record_node<T>(
      tape, "bilinear_sample", {img, grid}, out,
      [img, grid, n, h, w, c, oh, ow](std::span<const T> go, std::span<std::vector<T>*> gin) {
        T* gimg = gin[0] ? gin[0]->data() : nullptr;
        T* ggrid = gin[1] ? gin[1]->data() : nullptr;
        const T sx = T(w - 1) / T(2), sy = T(h - 1) / T(2);
        auto inside = [&](std::int64_t y, std::int64_t x) {
          return y >= 0 && y < h && x >= 0 && x < w;
        };
        for (std::int64_t b = 0; b < n; ++b)
          for (std::int64_t i = 0; i < oh; ++i)
            for (std::int64_t j = 0; j < ow; ++j) {
              const T* g = grid.ptr() + ((b * oh + i) * ow + j) * 2;
              const T px = to_pixel(g[0], w), py = to_pixel(g[1], h);
              const T fx0 = std::floor(px), fy0 = std::floor(py);
              const T fx = px - fx0, fy = py - fy0;
              const auto x0 = static_cast<std::int64_t>(fx0), y0 = static_cast<std::int64_t>(fy0);
              const T* gout = go.data() + ((b * oh + i) * ow + j) * c;
              T dfx = 0, dfy = 0;
              for (std::int64_t ch = 0; ch < c; ++ch) {
                auto at = [&](std::int64_t y, std::int64_t x) -> T {
                  return inside(y, x) ? img[((b * h + y) * w + x) * c + ch] : T(0);
                };
                const T a = at(y0, x0), bb = at(y0, x0 + 1);
                const T p = at(y0 + 1, x0), q = at(y0 + 1, x0 + 1);
                const T top = a + fx * (bb - a), bottom = p + fx * (q - p);
                dfx += gout[ch] * ((T(1) - fy) * (bb - a) + fy * (q - p));
                dfy += gout[ch] * (bottom - top);
                if (gimg) {
                  const T corners[4] = {(T(1) - fx) * (T(1) - fy), fx * (T(1) - fy),
                                        (T(1) - fx) * fy, fx * fy};
                  const std::int64_t ys[4] = {y0, y0, y0 + 1, y0 + 1};
                  const std::int64_t xs[4] = {x0, x0 + 1, x0, x0 + 1};
                  for (int k = 0; k < 4; ++k)
                    if (inside(ys[k], xs[k]))
                      gimg[((b * h + ys[k]) * w + xs[k]) * c + ch] += gout[ch] * corners[k];
                }
              }
              if (ggrid) {
                T* gg = ggrid + ((b * oh + i) * ow + j) * 2;
                gg[0] += dfx * sx;
                gg[1] += dfy * sy;
              }
            }
      });
}

template <typename T>
LocNet<T> LocNet<T>::create(std::int64_t height, std::int64_t width, std::int64_t channels,
                            Rng& rng) {
  check(height >= 4 && width >= 4, ErrorCode::kShapeMismatch,
        "LocNet: input must be at least 4x4 for two 2x2 pooling stages");
  LocNet net;
  net.conv1.kernel = Tensor<T>(Shape{3, 3, channels, 8});
  he_uniform(net.conv1.kernel, 9 * channels, rng);
  net.conv1.bias = Tensor<T>(Shape{8});
  net.conv2.kernel = Tensor<T>(Shape{3, 3, 8, 10});
  he_uniform(net.conv2.kernel, 9 * 8, rng);
  net.conv2.bias = Tensor<T>(Shape{10});
  const auto flat = (height / 2 / 2) * (width / 2 / 2) * 10;
  net.fc1_w = Tensor<T>(Shape{flat, 32});
  he_uniform(net.fc1_w, flat, rng);
  net.fc1_b = Tensor<T>(Shape{32});
  net.fc2_w = Tensor<T>(Shape{32, 6});
  net.fc2_b = Tensor<T>(Shape{6}, std::vector<T>{1, 0, 0, 0, 1, 0});
  for (auto* t : {&net.conv1.kernel, &*net.conv1.bias, &net.conv2.kernel, &*net.conv2.bias,
                  &net.fc1_w, &net.fc1_b, &net.fc2_w, &net.fc2_b})
    t->set_requires_grad(true);
  return net;
}

template <typename T>
std::int64_t LocNet<T>::param_count(std::int64_t height, std::int64_t width,
                                    std::int64_t channels) {
  const auto flat = (height / 2 / 2) * (width / 2 / 2) * 10;
  return conv_param_count(3, channels, 8, true) + conv_param_count(3, 8, 10, true) +
         flat * 32 + 32 + 32 * 6 + 6;
}

template <typename T>
Tensor<T> localize(Tape<T>* tape, const Tensor<T>& img, const LocNet<T>& net) {
  auto h = max_pool(tape, relu(tape, conv2d(tape, img, net.conv1)), 2, 2);
  h = max_pool(tape, relu(tape, conv2d(tape, h, net.conv2)), 2, 2);
  const auto n = h.dim(0);
  h = reshape(tape, h, Shape{n, h.numel() / n});
  h = relu(tape, dense(tape, h, net.fc1_w, std::optional<Tensor<T>>(net.fc1_b)));
  h = dense(tape, h, net.fc2_w, std::optional<Tensor<T>>(net.fc2_b));
  return reshape(tape, h, Shape{n, 2, 3});
}

template <typename T>
Tensor<T> stl_forward(Tape<T>* tape, const Tensor<T>& img, const LocNet<T>& net) {
  auto theta = localize(tape, img, net);
  return bilinear_sample(tape, img, affine_grid(tape, theta, img.dim(1), img.dim(2)));
}

#define FERGRAD_INSTANTIATE_STL(T)                                                         \
  template Tensor<T> affine_grid(Tape<T>*, const Tensor<T>&, std::int64_t, std::int64_t); \
  template Tensor<T> bilinear_sample(Tape<T>*, const Tensor<T>&, const Tensor<T>&);       \
  template struct LocNet<T>;                                                               \
  template Tensor<T> localize(Tape<T>*, const Tensor<T>&, const LocNet<T>&);               \
  template Tensor<T> stl_forward(Tape<T>*, const Tensor<T>&, const LocNet<T>&);

FERGRAD_INSTANTIATE_STL(float)
FERGRAD_INSTANTIATE_STL(double)

}  // namespace fergrad
