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

#include "fergrad/filters.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <string>

namespace fergrad {
namespace {

using Kernel3 = std::array<std::array<double, 3>, 3>;

constexpr Kernel3 kSobelX = {{{-1, 0, 1}, {-2, 0, 2}, {-1, 0, 1}}};
constexpr Kernel3 kSobelY = {{{-1, -2, -1}, {0, 0, 0}, {1, 2, 1}}};
constexpr Kernel3 kLaplacian = {{{0, 1, 0}, {1, -4, 1}, {0, 1, 0}}};

void require_filterable(const Image& img, const char* op) {
  check(img.channels() == 1, ErrorCode::kShapeMismatch,
        std::string(op) + ": expected a single-channel image, got " +
            std::to_string(img.channels()) + " channels");
  check(img.height() >= 3 && img.width() >= 3, ErrorCode::kShapeMismatch,
        std::string(op) + ": image " + std::to_string(img.height()) + "x" +
            std::to_string(img.width()) + " is smaller than the 3x3 kernel");
}

Image correlate3(const Image& img, const Kernel3& k) {
  const auto h = img.height(), w = img.width();
  Image out(h, w, 1, ValueRange::kUnbounded);
  for (std::int64_t y = 0; y < h; ++y) {
    for (std::int64_t x = 0; x < w; ++x) {
      double acc = 0.0;
      for (int dy = -1; dy <= 1; ++dy) {
        const auto sy = std::clamp<std::int64_t>(y + dy, 0, h - 1);
        for (int dx = -1; dx <= 1; ++dx) {
          const auto sx = std::clamp<std::int64_t>(x + dx, 0, w - 1);
          acc += k[dy + 1][dx + 1] * img.at(sy, sx);
        }
      }
      out.at(y, x) = acc;
    }
  }
  return out;
}

}  // namespace

Image::Image(std::int64_t height, std::int64_t width, std::int64_t channels, ValueRange r)
    : data(Shape{height, width, channels}), range(r) {}

Image::Image(Tensor<double> d, ValueRange r) : data(std::move(d)), range(r) {
  check(data.rank() == 3, ErrorCode::kShapeMismatch,
        "image: expected [H, W, C] data, got " + shape_str(data.shape()));
}

bool Image::within_declared_range() const {
  double lo = 0, hi = 0;
  switch (range) {
    case ValueRange::kRaw: lo = 0, hi = 255; break;
    case ValueRange::kUnit: lo = 0, hi = 1; break;
    case ValueRange::kSigned: lo = -1, hi = 1; break;
    case ValueRange::kUnbounded: return data.all_finite();
  }
  for (double v : data.data())
    if (!(v >= lo && v <= hi)) return false;
  return true;
}

Image Image::channel(std::int64_t c) const {
  check(c >= 0 && c < channels(), ErrorCode::kInvalidArgument, "image: channel out of range");
  Image out(height(), width(), 1, range);
  for (std::int64_t y = 0; y < height(); ++y)
    for (std::int64_t x = 0; x < width(); ++x) out.at(y, x) = at(y, x, c);
  return out;
}

std::pair<Image, Image> sobel(const Image& img) {
  require_filterable(img, "sobel");
  return {correlate3(img, kSobelX), correlate3(img, kSobelY)};
}

Image laplacian(const Image& img) {
  require_filterable(img, "laplacian");
  return correlate3(img, kLaplacian);
}

Image gradient_magnitude(const Image& gx, const Image& gy) {
  check(gx.data.shape() == gy.data.shape(), ErrorCode::kShapeMismatch,
        "gradient_magnitude: gx/gy shape mismatch");
  Image out(Tensor<double>(gx.data.shape()), ValueRange::kUnbounded);
  for (std::int64_t i = 0; i < gx.data.numel(); ++i)
    out.data[i] = std::hypot(gx.data[i], gy.data[i]);
  return out;
}

Image resize_bilinear(const Image& img, std::int64_t out_h, std::int64_t out_w) {
  check(out_h >= 1 && out_w >= 1, ErrorCode::kInvalidArgument,
        "resize_bilinear: target size must be positive, got " + std::to_string(out_h) + "x" +
            std::to_string(out_w));
  const auto in_h = img.height(), in_w = img.width(), c = img.channels();
  // Corner-aligned: output pixel i samples input coordinate i * (in - 1) / (out - 1).
  auto source = [](std::int64_t i, std::int64_t in, std::int64_t out) {
    if (out == 1) return static_cast<double>(in - 1) / 2.0;
    return static_cast<double>(i * (in - 1)) / static_cast<double>(out - 1);
  };
  Image out(out_h, out_w, c, img.range);
  for (std::int64_t y = 0; y < out_h; ++y) {
    const double sy = source(y, in_h, out_h);
    const auto y0 = static_cast<std::int64_t>(std::floor(sy));
    const auto y1 = std::min(y0 + 1, in_h - 1);
    const double fy = sy - static_cast<double>(y0);
    for (std::int64_t x = 0; x < out_w; ++x) {
      const double sx = source(x, in_w, out_w);
      const auto x0 = static_cast<std::int64_t>(std::floor(sx));
      const auto x1 = std::min(x0 + 1, in_w - 1);
      const double fx = sx - static_cast<double>(x0);
      for (std::int64_t ch = 0; ch < c; ++ch) {
        // Lerp form keeps constants and lattice hits exact.
        const double a = img.at(y0, x0, ch), b = img.at(y0, x1, ch);
        const double p = img.at(y1, x0, ch), q = img.at(y1, x1, ch);
        const double top = a + fx * (b - a);
        const double bottom = p + fx * (q - p);
        out.at(y, x, ch) = top + fy * (bottom - top);
      }
    }
  }
  return out;
}

Image concat_channels(const std::vector<Image>& imgs) {
  check(!imgs.empty(), ErrorCode::kInvalidArgument, "concat_channels: no images");
  const auto h = imgs[0].height(), w = imgs[0].width();
  std::int64_t total = 0;
  ValueRange range = imgs[0].range;
  for (const auto& im : imgs) {
    if (im.height() != h || im.width() != w)
      fail(ErrorCode::kShapeMismatch,
           "concat_channels: size mismatch " + std::to_string(h) + "x" + std::to_string(w) +
               " vs " + std::to_string(im.height()) + "x" + std::to_string(im.width()));
    total += im.channels();
    if (im.range != range) range = ValueRange::kUnbounded;
  }
  Image out(h, w, total, range);
  for (std::int64_t y = 0; y < h; ++y)
    for (std::int64_t x = 0; x < w; ++x) {
      std::int64_t c = 0;
      for (const auto& im : imgs)
        for (std::int64_t k = 0; k < im.channels(); ++k) out.at(y, x, c++) = im.at(y, x, k);
    }
  return out;
}

Image normalize(const Image& img, NormalizeMode mode) {
  Image out(Tensor<double>(img.data.shape()), img.range);
  const bool derivative = img.range == ValueRange::kUnbounded;
  for (std::int64_t i = 0; i < img.data.numel(); ++i) {
    const double v = img.data[i];
    out.data[i] = mode == NormalizeMode::kUnit ? v / 255.0 : v / 127.5 - 1.0;
  }
  if (!derivative) out.range = mode == NormalizeMode::kUnit ? ValueRange::kUnit : ValueRange::kSigned;
  return out;
}

}  // namespace fergrad
