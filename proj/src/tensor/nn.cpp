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

#include "tensor/nn.hpp"

#include <cmath>

#include "common/error.hpp"

namespace sae::ad {

Tensor uniform_tensor(Shape shape, double bound, Rng& rng) {
  Tensor t(std::move(shape));
  std::uniform_real_distribution<double> dist(-bound, bound);
  for (auto& v : t.data()) v = dist(rng);
  return t;
}

Tensor normal_tensor(Shape shape, double stddev, Rng& rng) {
  Tensor t(std::move(shape));
  std::normal_distribution<double> dist(0.0, stddev);
  for (auto& v : t.data()) v = dist(rng);
  return t;
}

Linear::Linear(ParameterStore& store, const std::string& prefix, std::size_t in, std::size_t out,
               Rng& rng, bool zero_init) {
  const double bound = std::sqrt(6.0 / static_cast<double>(in + out));
  weight = &store.add(prefix + ".weight", zero_init ? Tensor({in, out}) : uniform_tensor({in, out}, bound, rng));
  bias = &store.add(prefix + ".bias", Tensor({out}));
}

Var Linear::operator()(Graph& g, Var x) const {
  return linear(x, g.param(*weight), g.param(*bias));
}

LayerNorm::LayerNorm(ParameterStore& store, const std::string& prefix, std::size_t width) {
  gamma = &store.add(prefix + ".gamma", Tensor({width}, 1.0));
  beta = &store.add(prefix + ".beta", Tensor({width}));
}

Var LayerNorm::operator()(Graph& g, Var x) const {
  return layer_norm(x, g.param(*gamma), g.param(*beta));
}

Var multi_head_attention(Graph& g, Var queries, Var memory, std::size_t heads,
                         const AttentionParams& params, bool causal) {
  const std::size_t width = queries.dim(1);
  require(heads > 0 && width % heads == 0, ErrorKind::Config,
          "attention width " + std::to_string(width) + " is not divisible by " +
              std::to_string(heads) + " heads");
  require(memory.dim(1) == width, ErrorKind::Dimension, "attention memory width mismatch");
  const std::size_t head_dim = width / heads;
  const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(head_dim));
  Var q = params.query(g, queries);
  Var k = params.key(g, memory);
  Var v = params.value(g, memory);
  std::vector<Var> outs;
  outs.reserve(heads);
  for (std::size_t h = 0; h < heads; ++h) {
    Var qh = heads == 1 ? q : slice_cols(q, h * head_dim, head_dim);
    Var kh = heads == 1 ? k : slice_cols(k, h * head_dim, head_dim);
    Var vh = heads == 1 ? v : slice_cols(v, h * head_dim, head_dim);
    Var scores = scale(matmul(qh, transpose(kh)), inv_sqrt);
    outs.push_back(matmul(softmax_rows(scores, causal), vh));
  }
  Var merged = heads == 1 ? outs.front() : concat_cols(outs);
  return params.out(g, merged);
}

MultiHeadAttention::MultiHeadAttention(ParameterStore& store, const std::string& prefix,
                                       std::size_t width, std::size_t n_heads, Rng& rng)
    : heads(n_heads) {
  require(n_heads > 0 && width % n_heads == 0, ErrorKind::Config,
          "attention width " + std::to_string(width) + " is not divisible by " +
              std::to_string(n_heads) + " heads");
  params.query = Linear(store, prefix + ".query", width, width, rng);
  params.key = Linear(store, prefix + ".key", width, width, rng);
  params.value = Linear(store, prefix + ".value", width, width, rng);
  params.out = Linear(store, prefix + ".out", width, width, rng);
}

FeedForward::FeedForward(ParameterStore& store, const std::string& prefix, std::size_t width,
                         std::size_t hidden, Rng& rng)
    : fc1(store, prefix + ".fc1", width, hidden, rng), fc2(store, prefix + ".fc2", hidden, width, rng) {}

Var FeedForward::operator()(Graph& g, Var x) const { return fc2(g, gelu(fc1(g, x))); }

TransformerBlock::TransformerBlock(ParameterStore& store, const std::string& prefix,
                                   std::size_t width, std::size_t heads, std::size_t hidden,
                                   Rng& rng, bool causal_mask, bool cross_attention)
    : causal(causal_mask), has_cross(cross_attention) {
  norm_self = LayerNorm(store, prefix + ".norm_self", width);
  self_attn = MultiHeadAttention(store, prefix + ".self_attn", width, heads, rng);
  if (has_cross) {
    norm_cross = LayerNorm(store, prefix + ".norm_cross", width);
    cross_attn = MultiHeadAttention(store, prefix + ".cross_attn", width, heads, rng);
  }
  norm_ffn = LayerNorm(store, prefix + ".norm_ffn", width);
  ffn = FeedForward(store, prefix + ".ffn", width, hidden, rng);
}

Var TransformerBlock::operator()(Graph& g, Var x, Var memory) const {
  Var h = norm_self(g, x);
  x = add(x, self_attn(g, h, h, causal));
  if (has_cross) {
    require(memory.valid(), ErrorKind::Usage, "cross-attention block needs a memory sequence");
    x = add(x, cross_attn(g, norm_cross(g, x), memory));
  }
  return add(x, ffn(g, norm_ffn(g, x)));
}

Conv2d::Conv2d(ParameterStore& store, const std::string& prefix, std::size_t in_ch,
               std::size_t out_ch, std::size_t kernel, std::size_t stride_, std::size_t padding_,
               Rng& rng, bool with_bias)
    : stride(stride_), padding(padding_) {
  const double fan_in = static_cast<double>(in_ch * kernel * kernel);
  kernels = &store.add(prefix + ".kernels",
                       uniform_tensor({out_ch, in_ch, kernel, kernel}, std::sqrt(6.0 / fan_in), rng));
  if (with_bias) bias = &store.add(prefix + ".bias", Tensor({out_ch}));
}

Var Conv2d::operator()(Graph& g, Var x) const {
  Var y = conv2d(x, g.param(*kernels), stride, padding);
  return bias != nullptr ? add_channel_bias(y, g.param(*bias)) : y;
}

BatchNorm2d::BatchNorm2d(ParameterStore& store, const std::string& prefix, std::size_t channels) {
  gamma = &store.add(prefix + ".gamma", Tensor({channels}, 1.0));
  beta = &store.add(prefix + ".beta", Tensor({channels}));
  running_mean = &store.add(prefix + ".running_mean", Tensor({channels}), true);
  running_var = &store.add(prefix + ".running_var", Tensor({channels}, 1.0), true);
}

Var BatchNorm2d::operator()(Graph& g, Var x, bool training) const {
  BatchNormBuffers buffers{running_mean, running_var, 0.1};
  return batch_norm(x, g.param(*gamma), g.param(*beta), buffers, training);
}

}  // namespace sae::ad
