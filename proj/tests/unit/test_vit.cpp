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

#include <algorithm>
#include <numeric>

#include "doctest.h"
#include "support/errors.hpp"
#include "support/gradcheck.hpp"
#include "vit/vit.hpp"

using namespace sae;
using strokes::Image;
using testing::thrown_by;

namespace {

vit::ViTConfig tiny(std::size_t grid_rows = 2, std::size_t grid_cols = 2) {
  vit::ViTConfig c;
  c.image_size = 8;
  c.grid_rows = grid_rows;
  c.grid_cols = grid_cols;
  c.frame_size = 3;
  c.width = 8;
  c.heads = 2;
  c.ffn_hidden = 12;
  c.encoder_depth = 1;
  c.decoder_depth = 1;
  c.pad_len = grid_rows * grid_cols;
  return c;
}

Image random_image(std::size_t n, std::mt19937_64& rng) {
  Image img(n, n);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (auto& v : img.pixels) v = u(rng);
  return img;
}

}  // namespace

TEST_CASE("patchify splits the image row-major") {
  const auto cfg = tiny();
  std::mt19937_64 rng(1);
  const Image img = random_image(8, rng);
  const auto t = vit::patchify(img, cfg);
  REQUIRE(t.shape() == ad::Shape{4, 16});
  for (std::size_t y = 0; y < 4; ++y)
    for (std::size_t x = 0; x < 4; ++x) {
      CHECK(t[0 * 16 + y * 4 + x] == img.at(y, x));
      CHECK(t[1 * 16 + y * 4 + x] == img.at(y, x + 4));
      CHECK(t[2 * 16 + y * 4 + x] == img.at(y + 4, x));
    }
  CHECK(vit::unpatchify(t, cfg).pixels == img.pixels);
  CHECK(thrown_by([&] { vit::patchify(Image(9, 9), cfg); }).kind == ErrorKind::Dimension);
}

TEST_CASE("config validation") {
  CHECK_NOTHROW(vit::ViTConfig::full().validate());
  CHECK_NOTHROW(vit::ViTConfig::desk().validate());
  auto c = tiny();
  c.pad_len = 5;
  CHECK(thrown_by([&] { c.validate(); }).kind == ErrorKind::Config);
  c = tiny();
  c.image_size = 9;
  CHECK(thrown_by([&] { c.validate(); }).kind == ErrorKind::Config);
  c = tiny();
  c.heads = 3;
  CHECK(thrown_by([&] { c.validate(); }).kind == ErrorKind::Config);
  const auto p = vit::ViTConfig::full();
  CHECK(p.tokens() == 25);
  CHECK(p.patch_dim() == 28 * 28);
  CHECK(p.pad_len == 24);
}

TEST_CASE("forward shapes and zero head") {
  auto cfg = tiny();
  cfg.zero_init_head = true;
  vit::ViTModel model(cfg, 3);
  std::mt19937_64 rng(2);
  ad::Graph g(false);
  std::vector<ad::Var> blocks;
  const auto out = model.forward(g, random_image(8, rng), &blocks);
  CHECK(out.shape() == ad::Shape{4, 9});
  CHECK(blocks.size() == cfg.decoder_depth);
  CHECK(blocks[0].shape() == ad::Shape{4, 8});
  for (double v : out.value().data()) CHECK(v == 0.0);
}

TEST_CASE("without position embeddings the model is permutation equivariant") {
  const auto cfg = tiny();
  vit::ViTModel model(cfg, 4);
  auto& pos = model.params().get("vit.pos");
  std::fill(pos.value.data().begin(), pos.value.data().end(), 0.0);
  std::mt19937_64 rng(3);
  const auto tokens = testing::random_tensor({4, 16}, rng);
  const std::vector<std::size_t> perm{2, 0, 3, 1};
  ad::Tensor permuted({4, 16});
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t k = 0; k < 16; ++k) permuted[i * 16 + k] = tokens[perm[i] * 16 + k];
  ad::Graph g(false);
  const auto a = model.decode(g, model.encode(g, g.constant(tokens))).value();
  const auto b = model.decode(g, model.encode(g, g.constant(permuted))).value();
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t k = 0; k < 9; ++k) CHECK(b[i * 9 + k] == doctest::Approx(a[perm[i] * 9 + k]).epsilon(1e-12));
}

TEST_CASE("whole-model gradients match central differences") {
  const auto cfg = tiny(1, 2);
  vit::ViTModel model(cfg, 5);
  std::mt19937_64 rng(6);
  const Image img = random_image(8, rng);
  std::vector<Image> targets{random_image(3, rng)};
  const auto target = vit::target_matrix(targets, cfg);
  std::vector<ad::Parameter*> params;
  model.params().for_each([&](ad::Parameter& p) {
    if (!p.buffer) params.push_back(&p);
  });
  std::vector<ad::Tensor> inputs;
  const auto rep = testing::check_gradients(inputs, params, [&](ad::Graph& g, const std::vector<ad::Var>&) {
    return ad::mse_loss(model.forward(g, img), g.constant(target));
  });
  CHECK(rep.checked > 100);
  CHECK(rep.max_rel_err < 1e-4);
}

TEST_CASE("target matrix pads with blank rows") {
  const auto cfg = tiny();
  std::vector<Image> frames{Image(3, 3, 1.0)};
  const auto t = vit::target_matrix(frames, cfg);
  CHECK(t.shape() == ad::Shape{4, 9});
  CHECK(std::accumulate(t.data().begin(), t.data().end(), 0.0) == 9.0);
  frames.assign(5, Image(3, 3));
  CHECK(thrown_by([&] { vit::target_matrix(frames, cfg); }).kind == ErrorKind::Dimension);
}

TEST_CASE("a single example can be memorised") {
  auto cfg = tiny();
  cfg.width = 16;
  cfg.ffn_hidden = 32;
  vit::ViTModel model(cfg, 7);
  std::mt19937_64 rng(8);
  models::Example ex{random_image(8, rng), {}};
  for (int i = 0; i < 3; ++i) {
    Image f(3, 3);
    f.pixels[static_cast<std::size_t>(i * 4)] = 1.0;
    ex.targets.push_back(f);
  }
  ad::AdamW optim;
  const double first = vit::evaluate_loss(model, {ex});
  double last = first;
  for (int step = 0; step < 400; ++step) last = vit::pretrain_step(model, optim, {ex}, 3e-3);
  CHECK(last < 0.01 * first);
  const auto frames = vit::reconstruct(model, ex.input);
  REQUIRE(frames.size() == cfg.pad_len);
  for (const auto& f : frames)
    for (double v : f.pixels) CHECK((v >= 0.0 && v <= 1.0));
  auto padded = ex.targets;
  padded.resize(cfg.pad_len, Image(3, 3));
  CHECK(models::frames_mse(frames, padded) < 0.01);
}

TEST_CASE("pretrain step returns the loss before the update") {
  const auto cfg = tiny();
  vit::ViTModel model(cfg, 9);
  std::mt19937_64 rng(10);
  std::vector<models::Example> batch{{random_image(8, rng), {random_image(3, rng)}},
                                     {random_image(8, rng), {random_image(3, rng), random_image(3, rng)}}};
  const double before = vit::evaluate_loss(model, batch);
  ad::AdamW optim;
  CHECK(vit::pretrain_step(model, optim, batch, 1e-3) == before);
  CHECK(vit::evaluate_loss(model, batch) < before);
}
