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

#include "fergrad/layers.hpp"
#include "fergrad/random.hpp"
#include "fergrad/tape.hpp"
#include "fergrad/tensor.hpp"

namespace fergrad {

// Builds the sampling grid theta * (x_t, y_t, 1)^T for every output pixel.
// theta is [N, 2, 3]; the result is [N, out_h, out_w, 2] holding (x_s, y_s) in
// corner-aligned normalized coordinates, where -1 and +1 are the centres of the
// first and last pixel.
template <typename T>
Tensor<T> affine_grid(Tape<T>* tape, const Tensor<T>& theta, std::int64_t out_h,
                      std::int64_t out_w);

// Bilinear interpolation of img [N, H, W, C] at grid [N, out_h, out_w, 2].
// Samples outside the image read zeros. Differentiable in img and grid.
template <typename T>
Tensor<T> bilinear_sample(Tape<T>* tape, const Tensor<T>& img, const Tensor<T>& grid);

// Localization network: two (3x3 conv + relu + 2x2 max pool) stages with 8 and
// 10 channels, dense -> 32 (relu), dense -> 6. The last layer starts at zero
// weights and an identity bias so a fresh transformer is an exact identity.
template <typename T>
struct LocNet {
  ConvParams<T> conv1, conv2;
  Tensor<T> fc1_w, fc1_b, fc2_w, fc2_b;

  static LocNet create(std::int64_t height, std::int64_t width, std::int64_t channels, Rng& rng);
  static std::int64_t param_count(std::int64_t height, std::int64_t width, std::int64_t channels);
};

// theta [N, 2, 3] regressed from img.
template <typename T>
Tensor<T> localize(Tape<T>* tape, const Tensor<T>& img, const LocNet<T>& net);

// bilinear_sample(img, affine_grid(localize(img), H, W)).
template <typename T>
Tensor<T> stl_forward(Tape<T>* tape, const Tensor<T>& img, const LocNet<T>& net);

}  // namespace fergrad
