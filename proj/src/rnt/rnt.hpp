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

namespace sae::rnt {

// Output head: pixel frames for reconstruction or symbol logits for
// recognition.
enum class HeadKind { Pixels, Symbols };

// Recognition vocabulary.
inline constexpr int kPad = 0;
inline constexpr int kBos = 6;
inline constexpr int kEos = 7;
inline constexpr std::size_t kVocab = 8;

struct RntConfig {
  std::size_t input_size = 28;  // square input images and target frames
  std::size_t width = 256;
  std::size_t heads = 4;
  std::size_t ffn_hidden = 1024;
  std::size_t pad_len = 24;
  HeadKind head = HeadKind::Pixels;

  std::size_t grid() const { return input_size / 2; }
  std::size_t tokens() const { return grid() * grid(); }
  std::size_t frame_dim() const { return input_size * input_size; }
  // Decoder steps: pad_len frames, or pad_len symbols plus EOS.
  std::size_t max_steps() const { return head == HeadKind::Pixels ? pad_len : pad_len + 1; }

  void validate() const;

  static RntConfig full();
  // 20 px input, width 32, 8 frames.
  static RntConfig desk();
};

class RntModel {
 public:
  RntModel(const RntConfig& cfg, std::uint64_t seed);
  RntModel(const RntModel&) = delete;
  RntModel& operator=(const RntModel&) = delete;

  const RntConfig& config() const { return cfg_; }
  ad::ParameterStore& params() { return store_; }
  const ad::ParameterStore& params() const { return store_; }

  // Residual conv stack over [N x 1 x H x W] -> [N x width x H/2 x W/2].
  // Batch norm uses batch statistics when `training` is set and the block is
  // trainable; frozen blocks always use their running statistics.
  ad::Var encoder_features(ad::Graph& g, ad::Var images, bool training) const;
  // Item i of a feature batch as patch tokens [H/2*W/2 x width].
  ad::Var patch_tokens(ad::Var features, std::size_t i) const;
  // Label word vectors [N x width] from a feature batch.
  ad::Var label_vectors(ad::Graph& g, ad::Var features) const;

  ad::Var encode_image(ad::Graph& g, const strokes::Image& image, bool training = false) const;
  ad::Var embed_label(ad::Graph& g, const strokes::Image& frame, bool training = false) const;

  // Decoder over step inputs [S x width] attending to patch tokens. Returns the
  // head output [S x frame_dim] or [S x kVocab].
  ad::Var decode(ad::Graph& g, ad::Var steps, ad::Var patches) const;
  // Symbol embeddings [S x width] for a symbol sequence (Symbols head only).
  ad::Var symbol_inputs(ad::Graph& g, const std::vector<int>& symbols) const;

 private:
  struct ResBlock {
    ad::Conv2d conv1, conv2, shortcut;
    ad::BatchNorm2d bn1, bn2, bn_short;
    bool has_shortcut = false;
  };

  ad::Var run_block(ad::Graph& g, const ResBlock& b, ad::Var x, bool training) const;

  RntConfig cfg_;
  ad::ParameterStore store_;
  ad::Conv2d stem_;
  ad::BatchNorm2d stem_bn_;
  std::vector<ResBlock> blocks_;  // encoder blocks 2..4
  ad::Linear embed_fc_;
  ad::Parameter* symbols_ = nullptr;
  ad::Parameter* mem_pos_ = nullptr;
  ad::Parameter* step_pos_ = nullptr;
  ad::TransformerBlock decoder_;
  ad::LayerNorm final_norm_;
  ad::Linear head_;
};

// Teacher-forced step inputs: blank, then frames 1..pad_len-1 (padded).
std::vector<strokes::Image> shifted_inputs(const std::vector<strokes::Image>& targets, const RntConfig& cfg);

// Teacher-forced prediction [pad_len x frame_dim] for one image and its target
// frames (at most pad_len).
ad::Var decode_teacher_forced(ad::Graph& g, const RntModel& model, const strokes::Image& image,
                              const std::vector<strokes::Image>& targets, bool training = false);

// Feeds back its own clamped predictions; returns pad_len frames in [0, 1].
std::vector<strokes::Image> decode_autoregressive(const RntModel& model, const strokes::Image& image);

// Teacher-forced pixel MSE averaged over the batch plus one AdamW update.
double pretrain_step(RntModel& model, ad::AdamW& optim, const std::vector<models::Example>& batch, double lr);
double evaluate_loss(const RntModel& model, const std::vector<models::Example>& batch);

}  // namespace sae::rnt
