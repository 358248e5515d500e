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

#include "fergrad/model.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>

#include "fergrad/random.hpp"

namespace fergrad {
namespace {

constexpr std::pair<Variant, std::string_view> kVariantNames[] = {
    {Variant::kPlain, "plain"},
    {Variant::kLaplacianConcat, "laplacian-concat"},
    {Variant::kSobelConcat, "sobel-concat"},
    {Variant::kLaplacianParallel, "laplacian-parallel"},
    {Variant::kSobelParallel, "sobel-parallel"},
    {Variant::kTripleStream, "triple-stream"},
};

std::string layer_label(std::size_t index, const LayerSpec& l) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "L%02zu_", index + 1);
  return buf + std::string(layer_kind_name(l.kind));
}

// Per-sample output shape of one layer; dense layers produce rank-1 shapes.
Shape propagate(const LayerSpec& l, const Shape& in, const std::string& label) {
  auto bad = [&](const std::string& why) {
    fail(ErrorCode::kShapeMismatch,
         "arch: layer " + label + " cannot accept input " + shape_str(in) + ": " + why);
  };
  const bool spatial = in.size() == 3;
  switch (l.kind) {
    case LayerKind::kConv2d:
    case LayerKind::kBottleneck: {
      if (!spatial) bad("expected an [H, W, C] input");
      const auto k = l.kind == LayerKind::kBottleneck ? 3 : l.k;
      const auto h = conv_output_size(in[0], k, l.s, Padding::kSame);
      const auto w = conv_output_size(in[1], k, l.s, Padding::kSame);
      if (l.c < 1) bad("output channels must be positive");
      return {h, w, l.c};
    }
    case LayerKind::kMaxPool: {
      if (!spatial) bad("expected an [H, W, C] input");
      if (l.k > in[0] || l.k > in[1]) bad("pool window larger than input");
      return {(in[0] - l.k) / l.s + 1, (in[1] - l.k) / l.s + 1, in[2]};
    }
    case LayerKind::kAvgPool:
      if (!spatial) bad("expected an [H, W, C] input");
      return {1, 1, in[2]};
    case LayerKind::kDense:
      if (l.c < 1) bad("units must be positive");
      return {l.c};
    case LayerKind::kStl:
      if (!spatial) bad("expected an [H, W, C] input");
      return in;
  }
  return in;
}

std::int64_t layer_count(const LayerSpec& l, const Shape& in) {
  switch (l.kind) {
    case LayerKind::kConv2d: return conv_param_count(l.k, in[2], l.c, l.bias);
    case LayerKind::kBottleneck: return bottleneck_param_count(in[2], l.c, l.t);
    case LayerKind::kDense: return shape_numel(in) * l.c + (l.bias ? l.c : 0);
    case LayerKind::kStl: return LocNet<float>::param_count(in[0], in[1], in[2]);
    case LayerKind::kAvgPool:
    case LayerKind::kMaxPool: return 0;
  }
  return 0;
}

std::int64_t layer_auxiliary(const LayerSpec& l, const Shape& in) {
  if (l.kind != LayerKind::kBottleneck) return 0;
  const auto hidden = in[2] * l.t;
  return 2 * (hidden + hidden + l.c);
}

Shape head_input(const ArchSpec& spec, const Shape& feature) {
  const auto streams = static_cast<std::int64_t>(spec.streams.size());
  Shape in = feature;
  in.back() *= streams;
  return in;
}

LayerSpec conv(std::int64_t c, int k, int s, bool bias, Activation act) {
  return LayerSpec{LayerKind::kConv2d, c, s, 0, k, bias, act};
}
LayerSpec bottleneck(std::int64_t c, int s, int t) {
  return LayerSpec{LayerKind::kBottleneck, c, s, t, 3, false, Activation::kRelu6};
}

Variant variant_for_streams(const std::vector<StreamInput>& s) {
  using S = StreamInput;
  if (s == std::vector<S>{S::kOriginal}) return Variant::kPlain;
  if (s == std::vector<S>{S::kOriginal, S::kLaplacian}) return Variant::kLaplacianParallel;
  if (s == std::vector<S>{S::kOriginal, S::kGradient}) return Variant::kSobelParallel;
  if (s == std::vector<S>{S::kOriginal, S::kGradient, S::kLaplacian}) return Variant::kTripleStream;
  fail(ErrorCode::kInvalidArgument, "fuse_parallel: unsupported stream combination");
}

// ---------------------------------------------------------------------------
// Layers

template <typename T>
class ConvLayer final : public Layer<T> {
 public:
  ConvLayer(const LayerSpec& l, std::int64_t c_in, Rng& rng) : act_(l.act) {
    p_.kernel = Tensor<T>(Shape{l.k, l.k, c_in, l.c});
    he_uniform(p_.kernel, static_cast<std::int64_t>(l.k) * l.k * c_in, rng);
    p_.kernel.set_requires_grad(true);
    if (l.bias) {
      p_.bias = Tensor<T>(Shape{l.c});
      p_.bias->set_requires_grad(true);
    }
    p_.stride = l.s;
  }
  Tensor<T> forward(Tape<T>* tape, const Tensor<T>& x, Mode) override {
    auto y = conv2d(tape, x, p_);
    if (act_ == Activation::kRelu) return relu(tape, y);
    if (act_ == Activation::kRelu6) return relu6(tape, y);
    return y;
  }
  void collect(const std::string& prefix, std::vector<NamedTensor<T>>& out) override {
    out.push_back({prefix + "kernel", p_.kernel, ParamRole::kLedgered});
    if (p_.bias) out.push_back({prefix + "bias", *p_.bias, ParamRole::kLedgered});
  }

 private:
  ConvParams<T> p_;
  Activation act_;
};

template <typename T>
void add_bn(const std::string& prefix, BatchNormState<T>& bn, std::vector<NamedTensor<T>>& out) {
  out.push_back({prefix + "scale", bn.scale, ParamRole::kAuxiliary});
  out.push_back({prefix + "shift", bn.shift, ParamRole::kAuxiliary});
  out.push_back({prefix + "running_mean", bn.running_mean, ParamRole::kBuffer});
  out.push_back({prefix + "running_var", bn.running_var, ParamRole::kBuffer});
}

template <typename T>
class BottleneckLayer final : public Layer<T> {
 public:
  BottleneckLayer(const LayerSpec& l, std::int64_t c_in, double momentum, Rng& rng) {
    const auto hidden = c_in * l.t;
    p_.expansion = l.t;
    p_.expand.kernel = Tensor<T>(Shape{1, 1, c_in, hidden});
    he_uniform(p_.expand.kernel, c_in, rng);
    p_.depthwise.kernel = Tensor<T>(Shape{3, 3, hidden, 1});
    he_uniform(p_.depthwise.kernel, 9, rng);
    p_.depthwise.stride = l.s;
    p_.project.kernel = Tensor<T>(Shape{1, 1, hidden, l.c});
    he_uniform(p_.project.kernel, hidden, rng);
    for (auto* k : {&p_.expand.kernel, &p_.depthwise.kernel, &p_.project.kernel})
      k->set_requires_grad(true);
    p_.bn_expand = BatchNormState<T>::create(hidden);
    p_.bn_depthwise = BatchNormState<T>::create(hidden);
    p_.bn_project = BatchNormState<T>::create(l.c);
    for (auto* bn : {&p_.bn_expand, &p_.bn_depthwise, &p_.bn_project}) {
      bn->momentum = static_cast<T>(momentum);
      bn->reset_running_stats();
    }
    p_.residual = l.s == 1 && c_in == l.c;
  }
  Tensor<T> forward(Tape<T>* tape, const Tensor<T>& x, Mode mode) override {
    return inverted_bottleneck(tape, x, p_, mode);
  }
  void collect(const std::string& prefix, std::vector<NamedTensor<T>>& out) override {
    out.push_back({prefix + "expand.kernel", p_.expand.kernel, ParamRole::kLedgered});
    out.push_back({prefix + "depthwise.kernel", p_.depthwise.kernel, ParamRole::kLedgered});
    out.push_back({prefix + "project.kernel", p_.project.kernel, ParamRole::kLedgered});
    add_bn(prefix + "bn_expand.", p_.bn_expand, out);
    add_bn(prefix + "bn_depthwise.", p_.bn_depthwise, out);
    add_bn(prefix + "bn_project.", p_.bn_project, out);
  }
  void mark_stats_loaded() override {
    for (auto* bn : {&p_.bn_expand, &p_.bn_depthwise, &p_.bn_project}) bn->has_running_stats = true;
  }

 private:
  BottleneckParams<T> p_;
};

template <typename T>
class AvgPoolLayer final : public Layer<T> {
 public:
  Tensor<T> forward(Tape<T>* tape, const Tensor<T>& x, Mode) override {
    return global_avg_pool(tape, x);
  }
  void collect(const std::string&, std::vector<NamedTensor<T>>&) override {}
};

template <typename T>
class MaxPoolLayer final : public Layer<T> {
 public:
  MaxPoolLayer(int window, int stride) : window_(window), stride_(stride) {}
  Tensor<T> forward(Tape<T>* tape, const Tensor<T>& x, Mode) override {
    return max_pool(tape, x, window_, stride_);
  }
  void collect(const std::string&, std::vector<NamedTensor<T>>&) override {}

 private:
  int window_, stride_;
};

template <typename T>
class DenseLayer final : public Layer<T> {
 public:
  DenseLayer(const LayerSpec& l, std::int64_t fan_in, Rng& rng) : act_(l.act) {
    w_ = Tensor<T>(Shape{fan_in, l.c});
    he_uniform(w_, fan_in, rng);
    w_.set_requires_grad(true);
    if (l.bias) {
      b_ = Tensor<T>(Shape{l.c});
      b_->set_requires_grad(true);
    }
  }
  Tensor<T> forward(Tape<T>* tape, const Tensor<T>& x, Mode) override {
    const auto n = x.dim(0);
    auto flat = x.rank() == 2 ? x : reshape(tape, x, Shape{n, x.numel() / n});
    auto y = dense(tape, flat, w_, b_);
    if (act_ == Activation::kRelu) return relu(tape, y);
    if (act_ == Activation::kRelu6) return relu6(tape, y);
    return y;
  }
  void collect(const std::string& prefix, std::vector<NamedTensor<T>>& out) override {
    out.push_back({prefix + "weight", w_, ParamRole::kLedgered});
    if (b_) out.push_back({prefix + "bias", *b_, ParamRole::kLedgered});
  }

 private:
  Tensor<T> w_;
  std::optional<Tensor<T>> b_;
  Activation act_;
};

template <typename T>
class StlLayer final : public Layer<T> {
 public:
  StlLayer(const Shape& in, Rng& rng) : net_(LocNet<T>::create(in[0], in[1], in[2], rng)) {}
  Tensor<T> forward(Tape<T>* tape, const Tensor<T>& x, Mode) override {
    return stl_forward(tape, x, net_);
  }
  void collect(const std::string& prefix, std::vector<NamedTensor<T>>& out) override {
    out.push_back({prefix + "conv1.kernel", net_.conv1.kernel, ParamRole::kLedgered});
    out.push_back({prefix + "conv1.bias", *net_.conv1.bias, ParamRole::kLedgered});
    out.push_back({prefix + "conv2.kernel", net_.conv2.kernel, ParamRole::kLedgered});
    out.push_back({prefix + "conv2.bias", *net_.conv2.bias, ParamRole::kLedgered});
    out.push_back({prefix + "fc1.weight", net_.fc1_w, ParamRole::kLedgered});
    out.push_back({prefix + "fc1.bias", net_.fc1_b, ParamRole::kLedgered});
    out.push_back({prefix + "fc2.weight", net_.fc2_w, ParamRole::kLedgered});
    out.push_back({prefix + "fc2.bias", net_.fc2_b, ParamRole::kLedgered});
  }

 private:
  LocNet<T> net_;
};

template <typename T>
std::unique_ptr<Layer<T>> make_layer(const LayerSpec& l, const Shape& in, double momentum,
                                     Rng& rng) {
  switch (l.kind) {
    case LayerKind::kConv2d: return std::make_unique<ConvLayer<T>>(l, in[2], rng);
    case LayerKind::kBottleneck: return std::make_unique<BottleneckLayer<T>>(l, in[2], momentum, rng);
    case LayerKind::kAvgPool: return std::make_unique<AvgPoolLayer<T>>();
    case LayerKind::kMaxPool: return std::make_unique<MaxPoolLayer<T>>(l.k, l.s);
    case LayerKind::kDense: return std::make_unique<DenseLayer<T>>(l, shape_numel(in), rng);
    case LayerKind::kStl: return std::make_unique<StlLayer<T>>(in, rng);
  }
  return nullptr;
}

}  // namespace

std::string_view variant_name(Variant v) {
  for (auto [k, n] : kVariantNames)
    if (k == v) return n;
  return "?";
}

Variant parse_variant(std::string_view name) {
  for (auto [k, n] : kVariantNames)
    if (n == name) return k;
  fail(ErrorCode::kInvalidArgument, "unknown variant '" + std::string(name) + "'");
}

std::string_view stream_input_name(StreamInput s) {
  switch (s) {
    case StreamInput::kOriginal: return "original";
    case StreamInput::kGradient: return "gradient";
    case StreamInput::kLaplacian: return "laplacian";
  }
  return "?";
}

std::string_view layer_kind_name(LayerKind k) {
  switch (k) {
    case LayerKind::kConv2d: return "conv2d";
    case LayerKind::kBottleneck: return "bottleneck";
    case LayerKind::kAvgPool: return "avg_pool";
    case LayerKind::kMaxPool: return "max_pool";
    case LayerKind::kDense: return "dense";
    case LayerKind::kStl: return "stl";
  }
  return "?";
}

std::string_view activation_name(Activation a) {
  switch (a) {
    case Activation::kNone: return "none";
    case Activation::kRelu: return "relu";
    case Activation::kRelu6: return "relu6";
  }
  return "?";
}

std::int64_t variant_input_channels(Variant v) {
  switch (v) {
    case Variant::kLaplacianConcat: return 2;
    case Variant::kSobelConcat: return 3;
    default: return 1;
  }
}

std::vector<StreamInput> variant_streams(Variant v) {
  using S = StreamInput;
  switch (v) {
    case Variant::kLaplacianParallel: return {S::kOriginal, S::kLaplacian};
    case Variant::kSobelParallel: return {S::kOriginal, S::kGradient};
    case Variant::kTripleStream: return {S::kOriginal, S::kGradient, S::kLaplacian};
    default: return {S::kOriginal};
  }
}

ArchSpec base_spec(Variant variant, std::int64_t classes) {
  ArchSpec spec;
  spec.name = "base";
  spec.variant = variant;
  spec.input = {64, 64, variant_input_channels(variant)};
  spec.streams = variant_streams(variant);
  spec.layers = {
      conv(48, 3, 1, true, Activation::kRelu),
      conv(32, 3, 1, true, Activation::kRelu),
      bottleneck(32, 2, 6),
      bottleneck(24, 2, 6),
      bottleneck(24, 1, 6),
      bottleneck(32, 2, 6),
      bottleneck(32, 1, 6),
      bottleneck(32, 1, 6),
      bottleneck(64, 1, 6),
      bottleneck(64, 1, 6),
      bottleneck(64, 1, 6),
      bottleneck(64, 1, 6),
      bottleneck(128, 1, 6),
      bottleneck(256, 1, 6),
      LayerSpec{LayerKind::kAvgPool, 256, 1, 0, 1, false, Activation::kNone},
      conv(classes, 1, 1, false, Activation::kNone),
  };
  return spec;
}

ArchSpec vgg13_spec(Variant variant, std::int64_t classes) {
  ArchSpec spec;
  spec.name = "vgg13";
  spec.variant = variant;
  spec.input = {64, 64, variant_input_channels(variant)};
  spec.streams = variant_streams(variant);
  const LayerSpec pool{LayerKind::kMaxPool, 0, 2, 0, 2, false, Activation::kNone};
  auto block = [&](std::int64_t c, int n) {
    for (int i = 0; i < n; ++i) spec.layers.push_back(conv(c, 3, 1, true, Activation::kRelu));
    spec.layers.push_back(pool);
  };
  block(64, 2);
  block(128, 2);
  block(256, 3);
  block(256, 3);
  spec.layers.push_back({LayerKind::kDense, 1024, 1, 0, 1, true, Activation::kRelu});
  spec.layers.push_back({LayerKind::kDense, 1024, 1, 0, 1, true, Activation::kRelu});
  spec.layers.push_back({LayerKind::kDense, classes, 1, 0, 1, true, Activation::kNone});
  return spec;
}

ArchSpec arch_by_name(std::string_view name, Variant variant, std::int64_t classes) {
  if (name == "base") return base_spec(variant, classes);
  if (name == "vgg13") return vgg13_spec(variant, classes);
  fail(ErrorCode::kInvalidArgument, "unknown architecture '" + std::string(name) + "'");
}

ArchSpec fuse_parallel(ArchSpec backbone, std::vector<StreamInput> streams, bool shared) {
  check(!streams.empty(), ErrorCode::kInvalidArgument, "fuse_parallel: no streams");
  check(backbone.input.size() == 3 && backbone.input[2] == 1, ErrorCode::kShapeMismatch,
        "fuse_parallel: stream backbones take single-channel inputs");
  backbone.variant = variant_for_streams(streams);
  backbone.streams = std::move(streams);
  backbone.shared_backbone = shared && backbone.streams.size() > 1;
  validate(backbone);
  return backbone;
}

void validate(const ArchSpec& spec) {
  check(spec.layers.size() >= 2, ErrorCode::kInvalidArgument,
        "arch " + spec.name + ": needs at least a backbone layer and a classifier");
  check(spec.input.size() == 3, ErrorCode::kShapeMismatch,
        "arch " + spec.name + ": input must be [H, W, C]");
  check(!spec.streams.empty(), ErrorCode::kInvalidArgument, "arch " + spec.name + ": no streams");
  check(spec.bn_momentum > 0 && spec.bn_momentum < 1, ErrorCode::kInvalidArgument,
        "arch " + spec.name + ": batch-norm momentum must lie in (0, 1)");
  if (spec.input[2] != variant_input_channels(spec.variant))
    fail(ErrorCode::kShapeMismatch, "arch " + spec.name + ": variant " +
                                        std::string(variant_name(spec.variant)) + " needs " +
                                        std::to_string(variant_input_channels(spec.variant)) +
                                        " input channels, spec has " +
                                        std::to_string(spec.input[2]));
  for (std::size_t i = 0; i < spec.layers.size(); ++i) {
    const auto& l = spec.layers[i];
    if ((l.t > 0) != (l.kind == LayerKind::kBottleneck))
      fail(ErrorCode::kInvalidArgument,
           "arch " + spec.name + ": layer " + layer_label(i, l) +
               " expansion factor must be set exactly for bottlenecks");
    check(l.s >= 1 && l.k >= 1, ErrorCode::kInvalidArgument,
          "arch " + spec.name + ": layer " + layer_label(i, l) + " has invalid stride/kernel");
  }
  const auto& head = spec.layers.back();
  check(head.kind == LayerKind::kDense || (head.kind == LayerKind::kConv2d && head.k == 1),
        ErrorCode::kInvalidArgument,
        "arch " + spec.name + ": classifier must be a dense layer or a 1x1 conv");
  Shape shape = spec.input;
  for (std::size_t i = 0; i + 1 < spec.layers.size(); ++i)
    shape = propagate(spec.layers[i], shape, layer_label(i, spec.layers[i]));
  if (head.kind == LayerKind::kConv2d && !(shape.size() == 3 && shape[0] == 1 && shape[1] == 1))
    fail(ErrorCode::kShapeMismatch, "arch " + spec.name +
                                        ": 1x1 classifier expects a pooled [1, 1, C] feature, got " +
                                        shape_str(shape));
}

std::string ParamLedger::format() const {
  std::ostringstream os;
  char line[160];
  std::snprintf(line, sizeof line, "%-24s %12s %16s %6s %3s %3s\n", "Layer", "Parameters",
                "Input (HxWxC)", "c", "s", "t");
  os << line;
  for (const auto& r : rows) {
    std::string in;
    for (std::size_t i = 0; i < r.input.size(); ++i)
      in += (i ? "x" : "") + std::to_string(r.input[i]);
    std::string s = r.s > 0 ? std::to_string(r.s) : "-";
    std::string t = r.t > 0 ? std::to_string(r.t) : "-";
    std::snprintf(line, sizeof line, "%-24s %12lld %16s %6lld %3s %3s\n", r.name.c_str(),
                  static_cast<long long>(r.count), in.c_str(), static_cast<long long>(r.c),
                  s.c_str(), t.c_str());
    os << line;
  }
  std::snprintf(line, sizeof line, "Auxiliary (batch-norm scale/shift, not in total) %lld\n",
                static_cast<long long>(auxiliary));
  os << line;
  std::snprintf(line, sizeof line, "Total %lld\n", static_cast<long long>(total));
  os << line;
  return os.str();
}

ParamLedger count_params(const ArchSpec& spec) {
  validate(spec);
  ParamLedger ledger;
  const auto n_streams = spec.streams.size();
  const bool multi = n_streams > 1;
  auto add_row = [&](std::string name, const LayerSpec& l, const Shape& in) {
    LedgerRow row;
    row.name = std::move(name);
    row.kind = std::string(layer_kind_name(l.kind));
    row.count = layer_count(l, in);
    row.input = in;
    row.c = l.kind == LayerKind::kMaxPool || l.kind == LayerKind::kStl ? in.back() : l.c;
    row.s = l.kind == LayerKind::kAvgPool || l.kind == LayerKind::kDense ||
                    l.kind == LayerKind::kStl
                ? 0
                : l.s;
    row.t = l.t;
    ledger.total += row.count;
    ledger.auxiliary += layer_auxiliary(l, in);
    ledger.rows.push_back(std::move(row));
  };

  Shape feature;
  for (std::size_t s = 0; s < n_streams; ++s) {
    const std::string prefix = multi ? "s" + std::to_string(s) + "/" : "";
    if (spec.stl_enabled) {
      LayerSpec stl{LayerKind::kStl, spec.input[2], 1, 0, 3, true, Activation::kNone};
      add_row(prefix + "stl", stl, spec.input);
    }
    if (spec.shared_backbone && s > 0) continue;
    Shape shape = spec.input;
    for (std::size_t i = 0; i + 1 < spec.layers.size(); ++i) {
      const auto& l = spec.layers[i];
      add_row(prefix + std::string(layer_kind_name(l.kind)), l, shape);
      shape = propagate(l, shape, layer_label(i, l));
    }
    feature = shape;
  }
  const auto& head = spec.layers.back();
  add_row(std::string(layer_kind_name(head.kind)), head, head_input(spec, feature));
  return ledger;
}

double depsep_reduction_ratio(std::int64_t kernel, std::int64_t filters) {
  check(kernel >= 1 && filters >= 1, ErrorCode::kInvalidArgument,
        "depsep_reduction_ratio: kernel size and filter count must be positive");
  return 1.0 / static_cast<double>(filters) +
         1.0 / static_cast<double>(kernel * kernel);
}

double depsep_count_ratio(std::int64_t kernel, std::int64_t depth, std::int64_t filters) {
  check(kernel >= 1 && depth >= 1 && filters >= 1, ErrorCode::kInvalidArgument,
        "depsep_count_ratio: arguments must be positive");
  return static_cast<double>(depsep_param_count(kernel, depth, filters)) /
         static_cast<double>(conv_param_count(kernel, depth, filters, false));
}

// ---------------------------------------------------------------------------
// Model

template <typename T>
Model<T> Model<T>::build(const ArchSpec& spec, std::uint64_t seed) {
  validate(spec);
  Model m;
  m.spec_ = spec;
  m.seed_ = seed;
  Rng rng(seed);
  const auto n_streams = spec.streams.size();
  Shape feature;
  for (std::size_t s = 0; s < n_streams; ++s) {
    if (spec.stl_enabled) m.transformers_.push_back(std::make_unique<StlLayer<T>>(spec.input, rng));
    if (spec.shared_backbone && s > 0) continue;
    std::vector<std::unique_ptr<Layer<T>>> layers;
    Shape shape = spec.input;
    for (std::size_t i = 0; i + 1 < spec.layers.size(); ++i) {
      layers.push_back(make_layer<T>(spec.layers[i], shape, spec.bn_momentum, rng));
      shape = propagate(spec.layers[i], shape, layer_label(i, spec.layers[i]));
    }
    feature = shape;
    m.backbones_.push_back(std::move(layers));
  }
  m.head_ = make_layer<T>(spec.layers.back(), head_input(spec, feature), spec.bn_momentum, rng);
  return m;
}

template <typename T>
Tensor<T> Model<T>::forward(Tape<T>* tape, const std::vector<Tensor<T>>& inputs, Mode mode,
                            std::vector<Shape>* trace) {
  check(inputs.size() == spec_.streams.size(), ErrorCode::kShapeMismatch,
        "model " + spec_.name + ": expected " + std::to_string(spec_.streams.size()) +
            " stream input(s), got " + std::to_string(inputs.size()));
  auto sample_shape = [](const Tensor<T>& t) { return Shape(t.shape().begin() + 1, t.shape().end()); };
  std::vector<Tensor<T>> features;
  for (std::size_t s = 0; s < inputs.size(); ++s) {
    const auto& x0 = inputs[s];
    if (x0.rank() != 4 || sample_shape(x0) != spec_.input)
      fail(ErrorCode::kShapeMismatch, "model " + spec_.name + ": stream input " +
                                          shape_str(x0.shape()) + " does not match [N," +
                                          shape_str(spec_.input).substr(1));
    Tensor<T> x = x0;
    if (spec_.stl_enabled) {
      if (trace) trace->push_back(sample_shape(x));
      x = transformers_[s]->forward(tape, x, mode);
    }
    auto& backbone = backbones_[spec_.shared_backbone ? 0 : s];
    for (auto& layer : backbone) {
      if (trace) trace->push_back(sample_shape(x));
      x = layer->forward(tape, x, mode);
    }
    features.push_back(x);
  }
  Tensor<T> fused = features.size() == 1 ? features[0] : concat(tape, features, -1);
  if (trace) trace->push_back(sample_shape(fused));
  auto logits = head_->forward(tape, fused, mode);
  const auto n = logits.dim(0);
  if (logits.rank() == 2) return logits;
  return reshape(tape, logits, Shape{n, logits.numel() / n});
}

template <typename T>
std::vector<NamedTensor<T>> Model<T>::state() {
  std::vector<NamedTensor<T>> out;
  const bool multi = spec_.streams.size() > 1;
  for (std::size_t s = 0; s < spec_.streams.size(); ++s) {
    const std::string prefix = multi ? "s" + std::to_string(s) + "/" : "";
    if (spec_.stl_enabled) transformers_[s]->collect(prefix + "stl/", out);
    if (spec_.shared_backbone && s > 0) continue;
    auto& backbone = backbones_[s];
    for (std::size_t i = 0; i < backbone.size(); ++i)
      backbone[i]->collect(prefix + layer_label(i, spec_.layers[i]) + "/", out);
  }
  head_->collect(layer_label(spec_.layers.size() - 1, spec_.layers.back()) + "/", out);
  return out;
}

template <typename T>
std::vector<Tensor<T>> Model<T>::trainable() {
  std::vector<Tensor<T>> out;
  for (auto& nt : state())
    if (nt.role != ParamRole::kBuffer) out.push_back(nt.tensor);
  return out;
}

template <typename T>
std::int64_t Model<T>::ledgered_count() {
  std::int64_t n = 0;
  for (auto& nt : state())
    if (nt.role == ParamRole::kLedgered) n += nt.tensor.numel();
  return n;
}

template <typename T>
std::int64_t Model<T>::auxiliary_count() {
  std::int64_t n = 0;
  for (auto& nt : state())
    if (nt.role == ParamRole::kAuxiliary) n += nt.tensor.numel();
  return n;
}

template <typename T>
void Model<T>::load_state_from(Model& other) {
  auto dst = state();
  auto src = other.state();
  check(dst.size() == src.size(), ErrorCode::kShapeMismatch, "load_state_from: model mismatch");
  for (std::size_t i = 0; i < dst.size(); ++i) {
    check(dst[i].tensor.shape() == src[i].tensor.shape(), ErrorCode::kShapeMismatch,
          "load_state_from: shape mismatch at " + dst[i].name);
    std::copy(src[i].tensor.data().begin(), src[i].tensor.data().end(),
              dst[i].tensor.data().begin());
  }
  mark_stats_loaded();
}

template <typename T>
void Model<T>::mark_stats_loaded() {
  for (auto& b : backbones_)
    for (auto& l : b) l->mark_stats_loaded();
}

template class Model<float>;
template class Model<double>;

}  // namespace fergrad
