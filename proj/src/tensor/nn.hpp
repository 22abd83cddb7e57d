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
#include <random>
#include <string>

#include "tensor/graph.hpp"

namespace sae::ad {

using Rng = std::mt19937_64;

Tensor uniform_tensor(Shape shape, double bound, Rng& rng);
Tensor normal_tensor(Shape shape, double stddev, Rng& rng);

// Affine map x [n x in] -> [n x out] with weight stored [in x out].
struct Linear {
  Parameter* weight = nullptr;
  Parameter* bias = nullptr;

  Linear() = default;
  Linear(ParameterStore& store, const std::string& prefix, std::size_t in, std::size_t out, Rng& rng,
         bool zero_init = false);
  Var operator()(Graph& g, Var x) const;
};

struct LayerNorm {
  Parameter* gamma = nullptr;
  Parameter* beta = nullptr;

  LayerNorm() = default;
  LayerNorm(ParameterStore& store, const std::string& prefix, std::size_t width);
  Var operator()(Graph& g, Var x) const;
};

struct AttentionParams {
  Linear query, key, value, out;
};

// Scaled dot-product attention split over `heads`, followed by the output
// projection. `memory` supplies keys and values (pass `queries` itself for
// self-attention); `causal` restricts query i to keys 0..i.
Var multi_head_attention(Graph& g, Var queries, Var memory, std::size_t heads,
                         const AttentionParams& params, bool causal = false);

struct MultiHeadAttention {
  AttentionParams params;
  std::size_t heads = 1;

  MultiHeadAttention() = default;
  MultiHeadAttention(ParameterStore& store, const std::string& prefix, std::size_t width,
                     std::size_t heads, Rng& rng);
  Var operator()(Graph& g, Var x, Var memory, bool causal = false) const {
    return multi_head_attention(g, x, memory, heads, params, causal);
  }
};

struct FeedForward {
  Linear fc1, fc2;

  FeedForward() = default;
  FeedForward(ParameterStore& store, const std::string& prefix, std::size_t width,
              std::size_t hidden, Rng& rng);
  Var operator()(Graph& g, Var x) const;
};

// Pre-norm transformer block: x + SA(LN(x)) [+ CA(LN(x), memory)] + FFN(LN(x)).
struct TransformerBlock {
  LayerNorm norm_self, norm_cross, norm_ffn;
  MultiHeadAttention self_attn, cross_attn;
  FeedForward ffn;
  bool causal = false;
  bool has_cross = false;

  TransformerBlock() = default;
  TransformerBlock(ParameterStore& store, const std::string& prefix, std::size_t width,
                   std::size_t heads, std::size_t hidden, Rng& rng, bool causal = false,
                   bool cross_attention = false);
  Var operator()(Graph& g, Var x, Var memory = {}) const;
};

struct Conv2d {
  Parameter* kernels = nullptr;
  Parameter* bias = nullptr;
  std::size_t stride = 1;
  std::size_t padding = 0;

  Conv2d() = default;
  Conv2d(ParameterStore& store, const std::string& prefix, std::size_t in_ch, std::size_t out_ch,
         std::size_t kernel, std::size_t stride, std::size_t padding, Rng& rng, bool with_bias);
  Var operator()(Graph& g, Var x) const;
};

struct BatchNorm2d {
  Parameter* gamma = nullptr;
  Parameter* beta = nullptr;
  Parameter* running_mean = nullptr;
  Parameter* running_var = nullptr;

  BatchNorm2d() = default;
  BatchNorm2d(ParameterStore& store, const std::string& prefix, std::size_t channels);
  Var operator()(Graph& g, Var x, bool training) const;
};

}  // namespace sae::ad
