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
#include <functional>
#include <span>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "fergrad/tensor.hpp"

namespace fergrad {

template <typename T>
using GradMap = std::unordered_map<std::uint64_t, std::vector<T>>;

// Records differentiable operations of one forward pass. Nodes are appended in
// execution order, so insertion order is a topological order. A tape is meant
// to be created per forward pass and dropped after backward().
template <typename T>
class Tape {
 public:
  // Adds d(loss)/d(input_i) into grad_inputs[i]; entries are null for inputs
  // that do not require a gradient.
  using BackwardFn =
      std::function<void(std::span<const T> grad_output, std::span<std::vector<T>*> grad_inputs)>;

  struct Node {
    std::string op;
    std::vector<Tensor<T>> inputs;
    Tensor<T> output;
    BackwardFn backward;
  };

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;
  Tape(Tape&&) noexcept = default;
  Tape& operator=(Tape&&) noexcept = default;

  // Appends a node when any input requires a gradient and flags the output.
  Tensor<T> push(std::string op, std::vector<Tensor<T>> inputs, Tensor<T> output,
                 BackwardFn fn) {
    bool any = false;
    for (const auto& in : inputs) any = any || in.requires_grad();
    if (!any) return output;
    output.set_requires_grad(true);
    produced_.insert(output.id());
    nodes_.push_back(Node{std::move(op), std::move(inputs), output, std::move(fn)});
    return output;
  }

  std::size_t size() const { return nodes_.size(); }
  const std::vector<Node>& nodes() const { return nodes_; }
  bool produced(const Tensor<T>& t) const { return produced_.contains(t.id()); }

  void clear() {
    nodes_.clear();
    produced_.clear();
  }

  // Reverse-mode sweep from a scalar loss. Every requires_grad leaf consumed on
  // the tape gets a freshly summed gradient via set_grad(); the returned map
  // holds the same leaf gradients (and intermediates when keep_intermediate).
  GradMap<T> backward(const Tensor<T>& loss, bool keep_intermediate = false) {
    check(loss.defined() && loss.numel() == 1, ErrorCode::kShapeMismatch,
          "backward: loss must be a scalar, got shape " +
              (loss.defined() ? shape_str(loss.shape()) : std::string("<undefined>")));
    check(loss.requires_grad() && produced(loss), ErrorCode::kState,
          "backward: loss was not produced on this tape");

    GradMap<T> grads;
    grads[loss.id()] = std::vector<T>{T(1)};
    std::unordered_map<std::uint64_t, Tensor<T>> leaves;

    for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) {
      Node& node = *it;
      auto found = grads.find(node.output.id());
      std::vector<T> gout;
      if (found != grads.end()) {
        gout = std::move(found->second);
        if (keep_intermediate && node.output.id() != loss.id())
          found->second = gout;
        else
          grads.erase(found);
      }

      std::vector<std::vector<T>*> gin(node.inputs.size(), nullptr);
      for (std::size_t i = 0; i < node.inputs.size(); ++i) {
        const auto& in = node.inputs[i];
        if (!in.requires_grad()) continue;
        if (!produced(in)) leaves.emplace(in.id(), in);
        auto& slot = grads[in.id()];
        if (slot.empty()) slot.assign(static_cast<std::size_t>(in.numel()), T(0));
        gin[i] = &slot;
      }
      if (gout.empty()) continue;
      node.backward(std::span<const T>(gout), std::span<std::vector<T>*>(gin));
    }

    GradMap<T> out;
    for (auto& [id, leaf] : leaves) {
      auto& g = grads[id];
      leaf.set_grad(g);
      out[id] = std::move(g);
    }
    if (keep_intermediate)
      for (auto& [id, g] : grads)
        if (!out.contains(id)) out[id] = std::move(g);
    return out;
  }

 private:
  std::vector<Node> nodes_;
  std::unordered_set<std::uint64_t> produced_;
};

// Routes an op result through the tape when one is supplied.
template <typename T>
Tensor<T> record_node(Tape<T>* tape, std::string op, std::vector<Tensor<T>> inputs,
                      Tensor<T> output, typename Tape<T>::BackwardFn fn) {
  if (tape == nullptr) return output;
  return tape->push(std::move(op), std::move(inputs), std::move(output), std::move(fn));
}

}  // namespace fergrad
