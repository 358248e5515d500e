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
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "fergrad/layers.hpp"
#include "fergrad/spatial_transformer.hpp"
#include "fergrad/tape.hpp"
#include "fergrad/tensor.hpp"

namespace fergrad {

enum class LayerKind { kConv2d, kBottleneck, kAvgPool, kMaxPool, kDense, kStl };
enum class Activation { kNone, kRelu, kRelu6 };

// Input construction of a network. Concat variants stack derived images as
// channels of one input; parallel variants feed each derived image to its own
// stream.
enum class Variant {
  kPlain,
  kLaplacianConcat,
  kSobelConcat,
  kLaplacianParallel,
  kSobelParallel,
  kTripleStream,
};

// What a parallel stream sees. The gradient stream is the Sobel magnitude.
enum class StreamInput { kOriginal, kGradient, kLaplacian };

struct LayerSpec {
  LayerKind kind = LayerKind::kConv2d;
  std::int64_t c = 0;  // output channels (units for dense)
  int s = 1;           // stride
  int t = 0;           // expansion factor, bottleneck only
  int k = 1;           // kernel / window size
  bool bias = false;
  Activation act = Activation::kNone;
};

struct ArchSpec {
  std::string name;
  Shape input;  // [H, W, C] of each stream
  std::vector<LayerSpec> layers;
  Variant variant = Variant::kPlain;
  bool stl_enabled = false;
  // One entry per stream. A single kOriginal stream is an ordinary network.
  std::vector<StreamInput> streams{StreamInput::kOriginal};
  // Parallel streams reuse one backbone when true.
  bool shared_backbone = false;
  // Running-statistics momentum of every batch-norm layer.
  double bn_momentum = 0.99;

  std::int64_t num_classes() const { return layers.empty() ? 0 : layers.back().c; }
};

std::string_view variant_name(Variant v);
Variant parse_variant(std::string_view name);
std::string_view stream_input_name(StreamInput s);
std::string_view layer_kind_name(LayerKind k);
std::string_view activation_name(Activation a);

// Input channels per stream implied by a variant (plain 1, Laplacian concat 2,
// Sobel concat 3, parallel variants 1).
std::int64_t variant_input_channels(Variant v);
std::vector<StreamInput> variant_streams(Variant v);

// The inverted-bottleneck network: two 3x3 convs, twelve bottlenecks, global
// average pooling and a bias-free 1x1 classifier, on 64x64 inputs.
ArchSpec base_spec(Variant variant = Variant::kPlain, std::int64_t classes = 8);

// VGG13 as used for FERplus: ten 3x3 convs in five blocks separated by 2x2
// max pooling, then dense 1024 -> 1024 -> classes. A reconstruction of the
// published network (dropout omitted); see docs/architectures.md.
ArchSpec vgg13_spec(Variant variant = Variant::kPlain, std::int64_t classes = 8);

ArchSpec arch_by_name(std::string_view name, Variant variant, std::int64_t classes);

// Combines per-stream backbones of `backbone` into a parallel network: each
// stream ends at its pre-classifier feature, the features are concatenated
// along channels and one bias-free 1x1 classifier produces the logits.
ArchSpec fuse_parallel(ArchSpec backbone, std::vector<StreamInput> streams, bool shared = false);

// Throws naming the layer when shapes do not propagate.
void validate(const ArchSpec& spec);

struct LedgerRow {
  std::string name;
  std::string kind;
  std::int64_t count = 0;
  Shape input;  // [H, W, C]
  std::int64_t c = 0;
  int s = 0;
  int t = 0;
};

struct ParamLedger {
  std::vector<LedgerRow> rows;
  std::int64_t total = 0;      // sum of rows: conv/dense weights and declared biases
  std::int64_t auxiliary = 0;  // batch-norm scale and shift

  std::string format() const;
};

ParamLedger count_params(const ArchSpec& spec);

// 1/N + 1/Se^2: DepSep parameter count relative to a full convolution.
double depsep_reduction_ratio(std::int64_t kernel, std::int64_t filters);
// (Se^2 D + D N) / (Se^2 D N), evaluated directly from the two counts.
double depsep_count_ratio(std::int64_t kernel, std::int64_t depth, std::int64_t filters);

enum class ParamRole { kLedgered, kAuxiliary, kBuffer };

template <typename T>
struct NamedTensor {
  std::string name;
  Tensor<T> tensor;
  ParamRole role;
};

template <typename T>
class Layer {
 public:
  virtual ~Layer() = default;
  virtual Tensor<T> forward(Tape<T>* tape, const Tensor<T>& x, Mode mode) = 0;
  virtual void collect(const std::string& prefix, std::vector<NamedTensor<T>>& out) = 0;
  virtual void mark_stats_loaded() {}
};

template <typename T>
class Model {
 public:
  // Deterministic: parameters are drawn from one generator seeded with `seed`,
  // in order stream 0 (transformer, backbone), stream 1, ..., classifier.
  static Model build(const ArchSpec& spec, std::uint64_t seed);

  Model(Model&&) noexcept = default;
  Model& operator=(Model&&) noexcept = default;

  // One input per stream, each [N, H, W, C]. Returns [N, classes] logits.
  // `trace`, when given, receives the input shape of every layer in order.
  Tensor<T> forward(Tape<T>* tape, const std::vector<Tensor<T>>& inputs, Mode mode,
                    std::vector<Shape>* trace = nullptr);
  Tensor<T> forward(Tape<T>* tape, const Tensor<T>& input, Mode mode) {
    return forward(tape, std::vector<Tensor<T>>{input}, mode);
  }

  // Every state tensor in a fixed order: parameters and running statistics.
  std::vector<NamedTensor<T>> state();
  std::vector<Tensor<T>> trainable();

  std::int64_t ledgered_count();
  std::int64_t auxiliary_count();

  const ArchSpec& spec() const { return spec_; }
  std::uint64_t seed() const { return seed_; }

  // Copies all state values (shapes must agree).
  void load_state_from(Model& other);
  void mark_stats_loaded();

 private:
  Model() = default;

  ArchSpec spec_;
  std::uint64_t seed_ = 0;
  std::vector<std::unique_ptr<Layer<T>>> transformers_;           // per stream, if enabled
  std::vector<std::vector<std::unique_ptr<Layer<T>>>> backbones_;  // per stream, or one if shared
  std::unique_ptr<Layer<T>> head_;
};

}  // namespace fergrad
