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
#include <utility>
#include <vector>

#include "fergrad/tensor.hpp"

namespace fergrad {

// Value range an image claims to hold. Derivative images are signed and not
// bounded by the pixel range, so they are tagged kUnbounded.
enum class ValueRange { kRaw, kUnit, kSigned, kUnbounded };

struct Image {
  Tensor<double> data;  // [H, W, C]
  ValueRange range = ValueRange::kRaw;

  Image() = default;
  Image(std::int64_t height, std::int64_t width, std::int64_t channels,
        ValueRange range = ValueRange::kRaw);
  Image(Tensor<double> data, ValueRange range);

  std::int64_t height() const { return data.dim(0); }
  std::int64_t width() const { return data.dim(1); }
  std::int64_t channels() const { return data.dim(2); }

  double& at(std::int64_t y, std::int64_t x, std::int64_t c = 0) {
    return data[(y * width() + x) * channels() + c];
  }
  double at(std::int64_t y, std::int64_t x, std::int64_t c = 0) const {
    return data[(y * width() + x) * channels() + c];
  }

  // Min/max scan against the declared range.
  bool within_declared_range() const;
  Image channel(std::int64_t c) const;
};

enum class NormalizeMode { kUnit, kSigned };

// 3x3 Sobel correlation, replicate border. Returns (d/dx, d/dy).
std::pair<Image, Image> sobel(const Image& img);
// 4-neighbour Laplacian correlation, replicate border.
Image laplacian(const Image& img);
// sqrt(gx^2 + gy^2); the single-channel gradient stream of the parallel variants.
Image gradient_magnitude(const Image& gx, const Image& gy);

// Corner-aligned bilinear resampling of every channel.
Image resize_bilinear(const Image& img, std::int64_t out_h, std::int64_t out_w);

Image concat_channels(const std::vector<Image>& imgs);

// unit: x / 255, signed: x / 127.5 - 1. Derivative channels get the same map.
Image normalize(const Image& img, NormalizeMode mode);

}  // namespace fergrad
