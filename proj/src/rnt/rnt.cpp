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

#include "rnt/rnt.hpp"

#include <algorithm>

#include "common/error.hpp"

namespace sae::rnt {

using ad::Graph;
using ad::Tensor;
using ad::Var;
using strokes::Image;

void RntConfig::validate() const {
  require(input_size >= 8 && input_size % 2 == 0, ErrorKind::Config,
          "input size must be even and at least 8, got " + std::to_string(input_size));
  require(width > 0 && ffn_hidden > 0 && pad_len > 0, ErrorKind::Config, "sizes must be positive");
  require(heads > 0 && width % heads == 0, ErrorKind::Config,
          "width " + std::to_string(width) + " is not divisible by " + std::to_string(heads) + " heads");
}

RntConfig RntConfig::full() { return {}; }

RntConfig RntConfig::desk() {
  RntConfig c;
  c.input_size = 20;
  c.width = 32;
  c.heads = 4;
  c.ffn_hidden = 64;
  c.pad_len = 8;
  return c;
}

RntModel::RntModel(const RntConfig& cfg, std::uint64_t seed) : cfg_(cfg) {
  cfg_.validate();
  ad::Rng rng(seed);
  const std::size_t w = cfg_.width;
  stem_ = ad::Conv2d(store_, "rnt.encoder.block1.conv", 1, w, 3, 1, 1, rng, false);
  stem_bn_ = ad::BatchNorm2d(store_, "rnt.encoder.block1.bn", w);
  for (int b = 2; b <= 4; ++b) {
    const std::string p = "rnt.encoder.block" + std::to_string(b);
    ResBlock blk;
    const std::size_t stride = b == 2 ? 2 : 1;
    blk.conv1 = ad::Conv2d(store_, p + ".conv1", w, w, 3, stride, 1, rng, false);
    blk.bn1 = ad::BatchNorm2d(store_, p + ".bn1", w);
    blk.conv2 = ad::Conv2d(store_, p + ".conv2", w, w, 3, 1, 1, rng, false);
    blk.bn2 = ad::BatchNorm2d(store_, p + ".bn2", w);
    if (stride != 1) {
      blk.has_shortcut = true;
      blk.shortcut = ad::Conv2d(store_, p + ".shortcut", w, w, 1, stride, 0, rng, false);
      blk.bn_short = ad::BatchNorm2d(store_, p + ".bn_short", w);
    }
    blocks_.push_back(blk);
  }
  if (cfg_.head == HeadKind::Pixels) {
    embed_fc_ = ad::Linear(store_, "rnt.embed.fc", w * cfg_.tokens(), w, rng);
  } else {
    symbols_ = &store_.add("rnt.symbols.table", ad::normal_tensor({kVocab, w}, 0.02, rng));
  }
  // One spare step row so pixel and symbol decoders share shapes.
  step_pos_ = &store_.add("rnt.decoder.step_pos", ad::normal_tensor({cfg_.pad_len + 1, w}, 0.02, rng));
  mem_pos_ = &store_.add("rnt.decoder.mem_pos", ad::normal_tensor({cfg_.tokens(), w}, 0.02, rng));
  decoder_ = ad::TransformerBlock(store_, "rnt.decoder.block1", w, cfg_.heads, cfg_.ffn_hidden, rng, true, true);
  final_norm_ = ad::LayerNorm(store_, "rnt.decoder.norm", w);
  const std::size_t out = cfg_.head == HeadKind::Pixels ? cfg_.frame_dim() : kVocab;
  head_ = ad::Linear(store_, "rnt.head", w, out, rng);
}

Var RntModel::run_block(Graph& g, const ResBlock& b, Var x, bool training) const {
  const bool t = training && b.bn1.gamma->trainable;
  Var h = relu(b.bn1(g, b.conv1(g, x), t));
  h = b.bn2(g, b.conv2(g, h), t);
  Var skip = b.has_shortcut ? b.bn_short(g, b.shortcut(g, x), t) : x;
  return relu(add(h, skip));
}

Var RntModel::encoder_features(Graph& g, Var images, bool training) const {
  const auto& s = images.shape();
  require(s.size() == 4 && s[1] == 1 && s[2] == cfg_.input_size && s[3] == cfg_.input_size, ErrorKind::Dimension,
          "rnt encoder expects [N x 1 x " + std::to_string(cfg_.input_size) + " x " + std::to_string(cfg_.input_size) +
              "], got " + ad::shape_str(s));
  Var x = relu(stem_bn_(g, stem_(g, images), training && stem_bn_.gamma->trainable));
  for (const auto& b : blocks_) x = run_block(g, b, x, training);
  return x;
}

Var RntModel::patch_tokens(Var features, std::size_t i) const {
  Var f = take(features, i);
  return transpose(reshape(f, {cfg_.width, cfg_.tokens()}));
}

Var RntModel::label_vectors(Graph& g, Var features) const {
  require(cfg_.head == HeadKind::Pixels, ErrorKind::Usage, "label embedding needs the pixel-head model");
  return embed_fc_(g, reshape(features, {features.dim(0), cfg_.width * cfg_.tokens()}));
}

namespace {

Tensor image_batch(const std::vector<const Image*>& images, std::size_t size) {
  Tensor t({images.size(), 1, size, size});
  for (std::size_t i = 0; i < images.size(); ++i) {
    const Image& img = *images[i];
    require(img.height == size && img.width == size, ErrorKind::Dimension,
            "image is " + std::to_string(img.height) + "x" + std::to_string(img.width) + ", expected " +
                std::to_string(size));
    std::copy(img.pixels.begin(), img.pixels.end(), t.ptr() + i * size * size);
  }
  return t;
}

}  // namespace

Var RntModel::encode_image(Graph& g, const Image& image, bool training) const {
  Var f = encoder_features(g, g.constant(image_batch({&image}, cfg_.input_size)), training);
  return patch_tokens(f, 0);
}

Var RntModel::embed_label(Graph& g, const Image& frame, bool training) const {
  Var f = encoder_features(g, g.constant(image_batch({&frame}, cfg_.input_size)), training);
  return label_vectors(g, f);
}

Var RntModel::decode(Graph& g, Var steps, Var patches) const {
  require(steps.dim(0) <= cfg_.pad_len + 1 && steps.dim(1) == cfg_.width, ErrorKind::Dimension,
          "decoder step input " + ad::shape_str(steps.shape()) + " does not match the config");
  Var x = add(steps, slice_rows(g.param(*step_pos_), 0, steps.dim(0)));
  Var mem = add(patches, g.param(*mem_pos_));
  x = decoder_(g, x, mem);
  return head_(g, final_norm_(g, x));
}

Var RntModel::symbol_inputs(Graph& g, const std::vector<int>& symbols) const {
  require(cfg_.head == HeadKind::Symbols, ErrorKind::Usage, "symbol inputs need the recognition model");
  Tensor onehot({symbols.size(), kVocab});
  for (std::size_t i = 0; i < symbols.size(); ++i) {
    require(symbols[i] >= 0 && symbols[i] < static_cast<int>(kVocab), ErrorKind::Data,
            "symbol " + std::to_string(symbols[i]) + " outside the vocabulary");
    onehot.at(i, static_cast<std::size_t>(symbols[i])) = 1.0;
  }
  return matmul(g.constant(std::move(onehot)), g.param(*symbols_));
}

std::vector<Image> shifted_inputs(const std::vector<Image>& targets, const RntConfig& cfg) {
  require(targets.size() <= cfg.pad_len, ErrorKind::Dimension,
          std::to_string(targets.size()) + " target frames exceed pad length " + std::to_string(cfg.pad_len));
  std::vector<Image> in;
  in.emplace_back(cfg.input_size, cfg.input_size);
  for (std::size_t t = 0; t + 1 < cfg.pad_len; ++t)
    in.push_back(t < targets.size() ? targets[t] : Image(cfg.input_size, cfg.input_size));
  return in;
}

namespace {

// Encodes every image and teacher-forced input of the batch in one pass and
// returns per-example predictions [pad_len x frame_dim].
std::vector<Var> batch_predictions(Graph& g, const RntModel& model, const std::vector<models::Example>& batch,
                                   bool training) {
  const auto& cfg = model.config();
  require(cfg.head == HeadKind::Pixels, ErrorKind::Usage, "reconstruction needs the pixel-head model");
  std::vector<std::vector<Image>> inputs;
  std::vector<const Image*> all;
  for (const auto& ex : batch) inputs.push_back(shifted_inputs(ex.targets, cfg));
  for (std::size_t b = 0; b < batch.size(); ++b) {
    all.push_back(&batch[b].input);
    for (const auto& f : inputs[b]) all.push_back(&f);
  }
  Var features = model.encoder_features(g, g.constant(image_batch(all, cfg.input_size)), training);
  Var labels = model.label_vectors(g, features);
  const std::size_t stride = 1 + cfg.pad_len;
  std::vector<Var> preds;
  for (std::size_t b = 0; b < batch.size(); ++b) {
    Var patches = model.patch_tokens(features, b * stride);
    Var steps = slice_rows(labels, b * stride + 1, cfg.pad_len);
    preds.push_back(model.decode(g, steps, patches));
  }
  return preds;
}

Var batch_loss(Graph& g, const RntModel& model, const std::vector<models::Example>& batch, bool training) {
  require(!batch.empty(), ErrorKind::Usage, "empty batch");
  const auto& cfg = model.config();
  auto preds = batch_predictions(g, model, batch, training);
  std::vector<Var> losses;
  for (std::size_t b = 0; b < batch.size(); ++b) {
    Tensor target = models::frames_tensor(batch[b].targets, cfg.pad_len, cfg.input_size, cfg.input_size);
    losses.push_back(mse_loss(preds[b], g.constant(std::move(target))));
  }
  return scale(sum(stack(losses)), 1.0 / static_cast<double>(batch.size()));
}

}  // namespace

Var decode_teacher_forced(Graph& g, const RntModel& model, const Image& image, const std::vector<Image>& targets,
                          bool training) {
  return batch_predictions(g, model, {models::Example{image, targets}}, training).front();
}

std::vector<Image> decode_autoregressive(const RntModel& model, const Image& image) {
  const auto& cfg = model.config();
  std::vector<Image> fed;
  for (std::size_t t = 0; t < cfg.pad_len; ++t) {
    Graph g(false);
    const Tensor out = decode_teacher_forced(g, model, image, fed, false).value();
    fed.push_back(models::row_image(out, t, cfg.input_size, cfg.input_size, true));
  }
  return fed;
}

double pretrain_step(RntModel& model, ad::AdamW& optim, const std::vector<models::Example>& batch, double lr) {
  Graph g;
  model.params().zero_grad();
  Var loss = batch_loss(g, model, batch, true);
  const double value = loss.value()[0];
  models::check_loss(value, "rnt pretrain step");
  g.backward(loss);
  optim.step(model.params(), lr);
  return value;
}

double evaluate_loss(const RntModel& model, const std::vector<models::Example>& batch) {
  Graph g(false);
  return batch_loss(g, model, batch, false).value()[0];
}

}  // namespace sae::rnt
