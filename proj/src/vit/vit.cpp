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

#include "vit/vit.hpp"

#include "common/error.hpp"

namespace sae::vit {

using ad::Graph;
using ad::Tensor;
using ad::Var;
using strokes::Image;

void ViTConfig::validate() const {
  require(grid_rows > 0 && grid_cols > 0, ErrorKind::Config, "patch grid must be non-empty");
  require(image_size % grid_rows == 0 && image_size % grid_cols == 0, ErrorKind::Config,
          "image size " + std::to_string(image_size) + " is not divisible by the " + std::to_string(grid_rows) +
              "x" + std::to_string(grid_cols) + " patch grid");
  require(frame_size > 0 && width > 0 && ffn_hidden > 0, ErrorKind::Config, "sizes must be positive");
  require(heads > 0 && width % heads == 0, ErrorKind::Config,
          "width " + std::to_string(width) + " is not divisible by " + std::to_string(heads) + " heads");
  require(pad_len > 0 && tokens() >= pad_len, ErrorKind::Config,
          std::to_string(tokens()) + " tokens cannot hold " + std::to_string(pad_len) + " frames");
  require(encoder_depth > 0 && decoder_depth > 0, ErrorKind::Config, "depths must be positive");
}

ViTConfig ViTConfig::full() { return {}; }

ViTConfig ViTConfig::desk() {
  ViTConfig c;
  c.image_size = 54;
  c.grid_rows = c.grid_cols = 3;
  c.frame_size = 14;
  c.width = 64;
  c.heads = 4;
  c.ffn_hidden = 128;
  c.pad_len = 8;
  return c;
}

Tensor patchify(const Image& image, const ViTConfig& cfg) {
  require(image.height == cfg.image_size && image.width == cfg.image_size, ErrorKind::Dimension,
          "patchify: image is " + std::to_string(image.height) + "x" + std::to_string(image.width) +
              ", expected " + std::to_string(cfg.image_size));
  const std::size_t ph = cfg.patch_height(), pw = cfg.patch_width();
  Tensor out({cfg.tokens(), ph * pw});
  for (std::size_t gr = 0; gr < cfg.grid_rows; ++gr)
    for (std::size_t gc = 0; gc < cfg.grid_cols; ++gc) {
      double* dst = out.ptr() + (gr * cfg.grid_cols + gc) * ph * pw;
      for (std::size_t y = 0; y < ph; ++y)
        for (std::size_t x = 0; x < pw; ++x) dst[y * pw + x] = image.at(gr * ph + y, gc * pw + x);
    }
  return out;
}

Image unpatchify(const Tensor& tokens, const ViTConfig& cfg) {
  const std::size_t ph = cfg.patch_height(), pw = cfg.patch_width();
  require(tokens.rank() == 2 && tokens.dim(0) == cfg.tokens() && tokens.dim(1) == ph * pw, ErrorKind::Dimension,
          "unpatchify: token shape " + ad::shape_str(tokens.shape()) + " does not match the config");
  Image img(cfg.image_size, cfg.image_size);
  for (std::size_t gr = 0; gr < cfg.grid_rows; ++gr)
    for (std::size_t gc = 0; gc < cfg.grid_cols; ++gc) {
      const double* src = tokens.ptr() + (gr * cfg.grid_cols + gc) * ph * pw;
      for (std::size_t y = 0; y < ph; ++y)
        for (std::size_t x = 0; x < pw; ++x) img.at(gr * ph + y, gc * pw + x) = src[y * pw + x];
    }
  return img;
}

ViTModel::ViTModel(const ViTConfig& cfg, std::uint64_t seed) : cfg_(cfg) {
  cfg_.validate();
  ad::Rng rng(seed);
  proj_ = ad::Linear(store_, "vit.proj", cfg_.patch_dim(), cfg_.width, rng);
  pos_ = &store_.add("vit.pos", ad::normal_tensor({cfg_.tokens(), cfg_.width}, 0.02, rng));
  for (std::size_t i = 0; i < cfg_.encoder_depth; ++i)
    encoder_.emplace_back(store_, "vit.encoder.block" + std::to_string(i + 1), cfg_.width, cfg_.heads,
                          cfg_.ffn_hidden, rng);
  for (std::size_t i = 0; i < cfg_.decoder_depth; ++i)
    decoder_.emplace_back(store_, "vit.decoder.block" + std::to_string(i + 1), cfg_.width, cfg_.heads,
                          cfg_.ffn_hidden, rng);
  final_norm_ = ad::LayerNorm(store_, "vit.decoder.norm", cfg_.width);
  head_ = ad::Linear(store_, "vit.head", cfg_.width, cfg_.frame_dim(), rng, cfg_.zero_init_head);
}

Var ViTModel::encode(Graph& g, Var tokens) const {
  require(tokens.value().rank() == 2 && tokens.dim(0) == cfg_.tokens() && tokens.dim(1) == cfg_.patch_dim(),
          ErrorKind::Dimension, "encode: token shape " + ad::shape_str(tokens.shape()) + " does not match the config");
  Var x = add(proj_(g, tokens), g.param(*pos_));
  for (const auto& block : encoder_) x = block(g, x);
  return x;
}

Var ViTModel::decode(Graph& g, Var y, std::vector<Var>* block_outputs) const {
  require(y.value().rank() == 2 && y.dim(0) == cfg_.tokens() && y.dim(1) == cfg_.width, ErrorKind::Dimension,
          "decode: input shape " + ad::shape_str(y.shape()) + " does not match the config");
  Var x = add(y, g.param(*pos_));
  for (const auto& block : decoder_) {
    x = block(g, x);
    if (block_outputs != nullptr) block_outputs->push_back(x);
  }
  return head_(g, final_norm_(g, x));
}

Var ViTModel::forward(Graph& g, const Image& image, std::vector<Var>* block_outputs) const {
  return decode(g, encode(g, g.constant(patchify(image, cfg_))), block_outputs);
}

Tensor target_matrix(const std::vector<Image>& targets, const ViTConfig& cfg) {
  require(targets.size() <= cfg.pad_len, ErrorKind::Dimension,
          std::to_string(targets.size()) + " target frames exceed pad length " + std::to_string(cfg.pad_len));
  return models::frames_tensor(targets, cfg.tokens(), cfg.frame_size, cfg.frame_size);
}

namespace {

Var batch_loss(Graph& g, const ViTModel& model, const std::vector<models::Example>& batch) {
  require(!batch.empty(), ErrorKind::Usage, "empty batch");
  std::vector<Var> losses;
  losses.reserve(batch.size());
  for (const auto& ex : batch) {
    Var pred = model.forward(g, ex.input);
    losses.push_back(mse_loss(pred, g.constant(target_matrix(ex.targets, model.config()))));
  }
  return scale(sum(stack(losses)), 1.0 / static_cast<double>(batch.size()));
}

}  // namespace

double pretrain_step(ViTModel& model, ad::AdamW& optim, const std::vector<models::Example>& batch, double lr) {
  Graph g;
  model.params().zero_grad();
  Var loss = batch_loss(g, model, batch);
  const double value = loss.value()[0];
  models::check_loss(value, "vit pretrain step");
  g.backward(loss);
  optim.step(model.params(), lr);
  return value;
}

double evaluate_loss(const ViTModel& model, const std::vector<models::Example>& batch) {
  Graph g(false);
  return batch_loss(g, model, batch).value()[0];
}

std::vector<Image> reconstruct(const ViTModel& model, const Image& image) {
  Graph g(false);
  const Tensor out = model.forward(g, image).value();
  const auto& cfg = model.config();
  std::vector<Image> frames;
  for (std::size_t t = 0; t < cfg.pad_len; ++t) frames.push_back(models::row_image(out, t, cfg.frame_size, cfg.frame_size, true));
  return frames;
}

}  // namespace sae::vit
