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

#include <algorithm>
#include <array>
#include <optional>

#include "fergrad/filters.hpp"
#include "fergrad/random.hpp"
#include "fergrad/tensor.hpp"

// Naive nested-loop references shared by the unit and acceptance tests. They
// use nothing from the library beyond its containers.
namespace fergrad::oracle {

using D = Tensor<double>;

inline D random_int(Shape s, Rng& rng, int lo = -4, int hi = 4) {
  D t(std::move(s));
  for (auto& v : t.data()) v = static_cast<double>(lo + static_cast<int>(uniform_index(rng, hi - lo + 1)));
  return t;
}

inline Image random_image(std::int64_t h, std::int64_t w, Rng& rng) {
  Image img(h, w, 1);
  for (auto& v : img.data.data()) v = static_cast<double>(uniform_index(rng, 256));
  return img;
}

// Replicate-border correlation written independently of the library.
inline Image correlate(const Image& img, const double (&k)[3][3]) {
  Image out(img.height(), img.width(), 1, ValueRange::kUnbounded);
  for (std::int64_t y = 0; y < img.height(); ++y)
    for (std::int64_t x = 0; x < img.width(); ++x) {
      double acc = 0;
      for (int dy = -1; dy <= 1; ++dy)
        for (int dx = -1; dx <= 1; ++dx) {
          const auto yy = std::clamp<std::int64_t>(y + dy, 0, img.height() - 1);
          const auto xx = std::clamp<std::int64_t>(x + dx, 0, img.width() - 1);
          acc += k[dy + 1][dx + 1] * img.at(yy, xx);
        }
      out.at(y, x) = acc;
    }
  return out;
}

inline constexpr double kKx[3][3] = {{-1, 0, 1}, {-2, 0, 2}, {-1, 0, 1}};
inline constexpr double kKy[3][3] = {{-1, -2, -1}, {0, 0, 0}, {1, 2, 1}};
inline constexpr double kLap[3][3] = {{0, 1, 0}, {1, -4, 1}, {0, 1, 0}};

// SAME-padded (pad_before = total / 2) strided correlation, six nested loops.
inline D naive_conv(const D& x, const D& k, const D* bias, int stride) {
  const auto n = x.dim(0), h = x.dim(1), w = x.dim(2), ci = x.dim(3);
  const auto ks = k.dim(0), co = k.dim(3);
  const auto oh = (h + stride - 1) / stride, ow = (w + stride - 1) / stride;
  const auto pad_h = std::max<std::int64_t>((oh - 1) * stride + ks - h, 0) / 2;
  const auto pad_w = std::max<std::int64_t>((ow - 1) * stride + ks - w, 0) / 2;
  D out(Shape{n, oh, ow, co});
  for (std::int64_t b = 0; b < n; ++b)
    for (std::int64_t y = 0; y < oh; ++y)
      for (std::int64_t x0 = 0; x0 < ow; ++x0)
        for (std::int64_t o = 0; o < co; ++o) {
          double acc = bias ? (*bias)[o] : 0.0;
          for (std::int64_t i = 0; i < ks; ++i)
            for (std::int64_t j = 0; j < ks; ++j)
              for (std::int64_t c = 0; c < ci; ++c) {
                const auto yy = y * stride + i - pad_h, xx = x0 * stride + j - pad_w;
                if (yy < 0 || yy >= h || xx < 0 || xx >= w) continue;
                acc += x[((b * h + yy) * w + xx) * ci + c] * k[((i * ks + j) * ci + c) * co + o];
              }
          out[((b * oh + y) * ow + x0) * co + o] = acc;
        }
  return out;
}

inline D naive_depthwise(const D& x, const D& k) {
  const auto n = x.dim(0), h = x.dim(1), w = x.dim(2), c = x.dim(3), ks = k.dim(0);
  const auto pad = (ks - 1) / 2;
  D out(x.shape());
  for (std::int64_t b = 0; b < n; ++b)
    for (std::int64_t y = 0; y < h; ++y)
      for (std::int64_t x0 = 0; x0 < w; ++x0)
        for (std::int64_t ch = 0; ch < c; ++ch) {
          double acc = 0;
          for (std::int64_t i = 0; i < ks; ++i)
            for (std::int64_t j = 0; j < ks; ++j) {
              const auto yy = y + i - pad, xx = x0 + j - pad;
              if (yy < 0 || yy >= h || xx < 0 || xx >= w) continue;
              acc += x[((b * h + yy) * w + xx) * c + ch] * k[(i * ks + j) * c + ch];
            }
          out[((b * h + y) * w + x0) * c + ch] = acc;
        }
  return out;
}

inline D naive_max_pool(const D& x, int win, int stride) {
  const auto n = x.dim(0), h = x.dim(1), w = x.dim(2), c = x.dim(3);
  const auto oh = (h - win) / stride + 1, ow = (w - win) / stride + 1;
  D out(Shape{n, oh, ow, c});
  for (std::int64_t b = 0; b < n; ++b)
    for (std::int64_t y = 0; y < oh; ++y)
      for (std::int64_t x0 = 0; x0 < ow; ++x0)
        for (std::int64_t ch = 0; ch < c; ++ch) {
          double m = -1e300;
          for (int i = 0; i < win; ++i)
            for (int j = 0; j < win; ++j)
              m = std::max(m, x[((b * h + y * stride + i) * w + x0 * stride + j) * c + ch]);
          out[((b * oh + y) * ow + x0) * c + ch] = m;
        }
  return out;
}

// Exhaustive scan: first column holding the maximum, with reject columns
// winning ties against emotions.
inline std::optional<int> vote_oracle(const std::array<int, 10>& v) {
  int best = -1, arg = -1;
  for (int i = 0; i < 10; ++i)
    if (v[i] > best) best = v[i], arg = i;
  if (v[8] == best || v[9] == best) return std::nullopt;
  return arg;
}

}  // namespace fergrad::oracle
