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
#include <optional>
#include <span>

#include "fergrad/ops.hpp"
#include "fergrad/tape.hpp"
#include "fergrad/tensor.hpp"

// Differentiable network layers. Activations are NHWC throughout; kernels are
// laid out [k, k, C_in, C_out] (depthwise: [k, k, C, 1]) so that a kernel is
// also a row-major [k*k*C_in, C_out] matrix.
namespace fergrad {

enum class Padding { kSame, kValid };
enum class Mode { kTrain, kEval };

template <typename T>
struct ConvParams {
  Tensor<T> kernel;
  std::optional<Tensor<T>> bias;
  int stride = 1;
  Padding padding = Padding::kSame;

  std::int64_t kernel_size() const { return kernel.dim(0); }
};

template <typename T>
struct BatchNormState {
  Tensor<T> scale;          // trainable, [C]
  Tensor<T> shift;          // trainable, [C]
  Tensor<T> running_mean;   // [C]
  Tensor<T> running_var;    // [C]
  T momentum = T(0.99);
  T epsilon = T(1e-3);
  bool has_running_stats = false;
  std::int64_t train_steps = 0;

  // Unit scale, zero shift, no running statistics yet.
  static BatchNormState create(std::int64_t channels);
  // Running mean 0 / variance 1, the state a freshly built model starts from.
  void reset_running_stats();
  std::int64_t channels() const { return scale.numel(); }
};

template <typename T>
struct BottleneckParams {
  ConvParams<T> expand;     // 1x1, C_in -> t*C_in
  ConvParams<T> depthwise;  // 3x3 depthwise over t*C_in, stride s
  ConvParams<T> project;    // 1x1, t*C_in -> c
  BatchNormState<T> bn_expand, bn_depthwise, bn_project;
  bool residual = false;
  int expansion = 1;

  std::int64_t in_channels() const { return expand.kernel.dim(2); }
  std::int64_t out_channels() const { return project.kernel.dim(3); }
  int stride() const { return depthwise.stride; }
};

// Output spatial extent of a convolution or pooling window.
std::int64_t conv_output_size(std::int64_t in, std::int64_t kernel, int stride, Padding padding);

template <typename T>
Tensor<T> conv2d(Tape<T>* tape, const Tensor<T>& x, const ConvParams<T>& p);

template <typename T>
Tensor<T> depthwise_conv2d(Tape<T>* tape, const Tensor<T>& x, const ConvParams<T>& p);

// Per-channel k x k filtering followed by a 1x1 cross-channel combination.
template <typename T>
Tensor<T> depthwise_separable(Tape<T>* tape, const Tensor<T>& x, const ConvParams<T>& depthwise,
                              const ConvParams<T>& pointwise);

// Train mode normalizes with batch statistics over N, H, W and updates the
// running statistics; eval mode uses the running statistics.
template <typename T>
Tensor<T> batch_norm(Tape<T>* tape, const Tensor<T>& x, BatchNormState<T>& state, Mode mode);

// expand -> BN -> relu6 -> depthwise -> BN -> relu6 -> project -> BN (+ x).
template <typename T>
Tensor<T> inverted_bottleneck(Tape<T>* tape, const Tensor<T>& x, BottleneckParams<T>& p,
                              Mode mode);

template <typename T>
Tensor<T> max_pool(Tape<T>* tape, const Tensor<T>& x, int window, int stride);

template <typename T>
Tensor<T> global_avg_pool(Tape<T>* tape, const Tensor<T>& x);

// x [N, D] times w [D, M] plus optional b [M].
template <typename T>
Tensor<T> dense(Tape<T>* tape, const Tensor<T>& x, const Tensor<T>& w,
                const std::optional<Tensor<T>>& b);

// Mean over the batch of -log softmax(logits)[label].
template <typename T>
Tensor<T> softmax_cross_entropy(Tape<T>* tape, const Tensor<T>& logits,
                                std::span<const int> labels);

// Weight counts. Batch-norm parameters are not included.
std::int64_t conv_param_count(std::int64_t k, std::int64_t c_in, std::int64_t c_out, bool bias);
std::int64_t depsep_param_count(std::int64_t k, std::int64_t depth, std::int64_t filters);
std::int64_t bottleneck_param_count(std::int64_t c_in, std::int64_t c_out, std::int64_t expansion);

}  // namespace fergrad
