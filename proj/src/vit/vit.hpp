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
#include <vector>

#include "models/common.hpp"
#include "tensor/nn.hpp"
#include "tensor/optim.hpp"

namespace sae::vit {

struct ViTConfig {
  std::size_t image_size = 140;
  std::size_t grid_rows = 5;
  std::size_t grid_cols = 5;
  std::size_t frame_size = 28;  // target frames are frame_size x frame_size
  std::size_t width = 256;
  std::size_t heads = 4;
  std::size_t ffn_hidden = 1024;
  std::size_t encoder_depth = 4;
  std::size_t decoder_depth = 4;
  std::size_t pad_len = 24;
  bool zero_init_head = false;

  std::size_t tokens() const { return grid_rows * grid_cols; }
  std::size_t patch_height() const { return image_size / grid_rows; }
  std::size_t patch_width() const { return image_size / grid_cols; }
  std::size_t patch_dim() const { return patch_height() * patch_width(); }
  std::size_t frame_dim() const { return frame_size * frame_size; }

  // Throws a config error on inconsistent sizes.
  void validate() const;

  // 140 px input, 5x5 patches, width 256, 24 frames of 28 px.
  static ViTConfig full();
  // 54 px input, 3x3 patches, width 64, 8 frames of 14 px.
  static ViTConfig desk();
};

// Non-overlapping patches in row-major grid order, each flattened row-major:
// [tokens x patch_dim].
ad::Tensor patchify(const strokes::Image& image, const ViTConfig& cfg);
strokes::Image unpatchify(const ad::Tensor& tokens, const ViTConfig& cfg);

class ViTModel {
 public:
  ViTModel(const ViTConfig& cfg, std::uint64_t seed);
  ViTModel(const ViTModel&) = delete;
  ViTModel& operator=(const ViTModel&) = delete;

  const ViTConfig& config() const { return cfg_; }
  ad::ParameterStore& params() { return store_; }
  const ad::ParameterStore& params() const { return store_; }

  // tokens [n x patch_dim] -> y [n x width].
  ad::Var encode(ad::Graph& g, ad::Var tokens) const;
  // y [n x width] -> frames [n x frame_dim]. When `block_outputs` is given it
  // receives the token sequence after each decoder block.
  ad::Var decode(ad::Graph& g, ad::Var y, std::vector<ad::Var>* block_outputs = nullptr) const;
  // Patchify, encode and decode one image.
  ad::Var forward(ad::Graph& g, const strokes::Image& image, std::vector<ad::Var>* block_outputs = nullptr) const;

 private:
  ViTConfig cfg_;
  ad::ParameterStore store_;
  ad::Linear proj_;
  ad::Parameter* pos_ = nullptr;
  std::vector<ad::TransformerBlock> encoder_;
  std::vector<ad::TransformerBlock> decoder_;
  ad::LayerNorm final_norm_;
  ad::Linear head_;
};

// [tokens x frame_dim] target matrix: the given frames, then blank rows.
ad::Tensor target_matrix(const std::vector<strokes::Image>& targets, const ViTConfig& cfg);

// Mean pixel MSE over the batch (every token, blank slots included) followed
// by one AdamW update at `lr`. Returns the pre-update loss.
double pretrain_step(ViTModel& model, ad::AdamW& optim, const std::vector<models::Example>& batch, double lr);

// Loss of the batch without updating anything.
double evaluate_loss(const ViTModel& model, const std::vector<models::Example>& batch);

// Predicted frames 1..pad_len, clamped to [0, 1].
std::vector<strokes::Image> reconstruct(const ViTModel& model, const strokes::Image& image);

}  // namespace sae::vit
