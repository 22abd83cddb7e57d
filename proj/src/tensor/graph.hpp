/*
 * Copyright 2026 The sae-strokes Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *    http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <cstdint>
#include <functional>
#include <unordered_map>
#include <vector>

#include "tensor/tensor.hpp"

namespace sae::ad {

class Graph;

// Handle to a node of a Graph. Cheap to copy; valid while the graph lives.
class Var {
 public:
  Var() = default;
  Var(Graph* g, std::uint32_t id) : graph_(g), id_(id) {}

  Graph& graph() const { return *graph_; }
  std::uint32_t id() const noexcept { return id_; }
  bool valid() const noexcept { return graph_ != nullptr; }

  const Tensor& value() const;
  const Shape& shape() const { return value().shape(); }
  std::size_t dim(std::size_t i) const { return value().dim(i); }

 private:
  Graph* graph_ = nullptr;
  std::uint32_t id_ = 0;
};

// Tape of operations recorded in execution order, which is a topological
// order. backward() walks the tape once in reverse.
class Graph {
 public:
  // Receives the output gradient; accumulates into parent gradients through
  // Graph::grad_slot.
  using BackwardFn = std::function<void(Graph&, const Tensor& grad_out)>;

  explicit Graph(bool grad_enabled = true) : grad_enabled_(grad_enabled) {}
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  Var constant(Tensor value);
  // Leaf with its own gradient slot, readable through grad() after backward.
  Var input(Tensor value, bool requires_grad = true);
  // Leaf bound to a model parameter; gradients accumulate into Parameter::grad
  // when the parameter is trainable. Repeated calls return the same node.
  Var param(Parameter& p);

  Var record(Tensor value, std::vector<Var> parents, BackwardFn fn);

  void backward(Var loss);

  const Tensor& value(Var v) const { return nodes_[v.id()].value; }
  const Tensor& value(std::uint32_t id) const { return nodes_[id].value; }
  bool needs_grad(Var v) const { return nodes_[v.id()].needs_grad; }
  // Gradient accumulator for v, zero-initialised on first use; nullptr when v
  // does not require a gradient.
  Tensor* grad_slot(Var v);
  const Tensor& grad(Var v) const;

  bool grad_enabled() const noexcept { return grad_enabled_; }
  std::size_t node_count() const noexcept { return nodes_.size(); }

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    std::vector<std::uint32_t> parents;
    BackwardFn backward;
    Parameter* param = nullptr;
    bool needs_grad = false;
  };

  bool grad_enabled_;
  bool backward_done_ = false;
  std::vector<Node> nodes_;
  std::unordered_map<const Parameter*, std::uint32_t> param_nodes_;
};

inline const Tensor& Var::value() const { return graph_->value(*this); }

// ---- elementwise and structural ops ----
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var scale(Var a, double s);
// a [n x d] + b [d] broadcast over rows.
Var add_row(Var a, Var b);
Var reshape(Var a, Shape shape);
Var transpose(Var a);
Var slice_cols(Var a, std::size_t start, std::size_t len);
Var concat_cols(const std::vector<Var>& parts);
Var slice_rows(Var a, std::size_t start, std::size_t len);
Var concat_rows(const std::vector<Var>& parts);
// x[index] along the leading axis, dropping that axis.
Var take(Var a, std::size_t index);
// Stacks equally shaped tensors along a new leading axis.
Var stack(const std::vector<Var>& parts);
Var sum(Var a);
Var mean(Var a);

// ---- dense algebra ----
Var matmul(Var a, Var b);
Var linear(Var x, Var weight, Var bias);

// ---- activations and normalisation ----
Var relu(Var a);
Var gelu(Var a);
Var softmax_rows(Var a, bool causal = false);
Var layer_norm(Var x, Var gamma, Var beta, double eps = 1e-5);

// ---- convolution ----
// input [C x H x W] or [N x C x H x W]; kernels [F x C x kh x kw].
Var conv2d(Var input, Var kernels, std::size_t stride, std::size_t padding);
// Adds b[F] to every spatial position of channel F.
Var add_channel_bias(Var input, Var bias);

struct BatchNormBuffers {
  Parameter* running_mean = nullptr;
  Parameter* running_var = nullptr;
  double momentum = 0.1;
};
// Per-channel normalisation of [C x H x W] or [N x C x H x W]. In training mode
// batch statistics are used and the running buffers are updated in place.
Var batch_norm(Var input, Var gamma, Var beta, BatchNormBuffers buffers, bool training,
               double eps = 1e-5);

// ---- losses ----
Var mse_loss(Var pred, Var target);
// Sum over rows of -log softmax(logits)[row, target]. Rows whose target is
// negative are skipped.
Var softmax_cross_entropy(Var logits, const std::vector<int>& targets);

}  // namespace sae::ad
