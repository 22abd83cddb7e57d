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

#include "doctest.h"
#include "pipeline/config.hpp"
#include "support/errors.hpp"

using namespace sae;
using pipeline::RunConfig;
using testing::thrown_by;

TEST_CASE("training defaults") {
  const RunConfig c;
  CHECK(c.batch_size == 32);
  CHECK(c.epochs == 200);
  CHECK(c.lr_max == 1e-4);
  CHECK(c.weight_decay == 0.05);
  CHECK(c.beta1 == 0.9);
  CHECK(c.beta2 == 0.999);
  CHECK(c.pad_len == 24);
  CHECK(c.vit_image == 140);
  CHECK(c.vit_grid == 5);
  CHECK(c.vit_width == 256);
  CHECK(c.rnt_input == 28);
  CHECK(c.rnt_width == 256);
  CHECK(c.n_seen == 45);
  CHECK(c.seed == 7);
  CHECK_NOTHROW(c.validate());
  CHECK(c.adamw().weight_decay == 0.05);
  CHECK(c.adamw().eps == 1e-8);
}

TEST_CASE("data form defaults per architecture") {
  RunConfig c;
  CHECK(c.data_form() == strokes::Form::Cumulative);
  c.set("arch", "rnt");
  CHECK(c.data_form() == strokes::Form::Incremental);
  c.set("form", "A");
  CHECK(c.data_form() == strokes::Form::Cumulative);
  CHECK(thrown_by([&] { c.set("form", "C"); }).kind == ErrorKind::Config);
  CHECK(thrown_by([&] { c.set("arch", "cnn"); }).kind == ErrorKind::Config);
}

TEST_CASE("scale presets") {
  RunConfig c;
  c.set("vit_width", "32");
  c.set("scale", "desk");
  CHECK(c.vit_image == 54);
  CHECK(c.vit_width == 64);
  CHECK(c.pad_len == 8);
  CHECK(c.rnt_input == 20);
  CHECK_NOTHROW(c.validate());
  CHECK(c.vit_config().tokens() == 9);
  CHECK(c.recognizer_lr == 1e-3);
  c.set("scale", "full");
  CHECK(c.vit_width == 256);
  CHECK(c.recognizer_lr == 1e-4);
  CHECK(c.jitter_sigma == 16.0);
  CHECK(thrown_by([&] { c.set("scale", "huge"); }).kind == ErrorKind::Config);
  CHECK(pipeline::desk_config().scale == "desk");
}

TEST_CASE("serialisation round trip") {
  RunConfig c = pipeline::desk_config();
  c.set("arch", "rnt");
  c.set("lr_max", "0.00123");
  c.set("crop", "false");
  c.set("rnt_width", "48");
  c.set("source", "/data/chars.json");
  const RunConfig back = RunConfig::parse(c.serialize());
  CHECK(back.serialize() == c.serialize());
  for (const auto& k : RunConfig::keys()) CHECK(back.get(k) == c.get(k));
  CHECK(back.lr_max == 0.00123);
  CHECK_FALSE(back.crop);
  CHECK(back.rnt_width == 48);
}

TEST_CASE("parse errors name their origin") {
  RunConfig c;
  auto t = thrown_by([&] { c.apply_text("# comment\nepochs = 3\nbogus = 1\n", "run.cfg"); });
  CHECK(t.kind == ErrorKind::Config);
  CHECK(t.message.find("run.cfg:3") != std::string::npos);
  CHECK(c.epochs == 3);
  CHECK(thrown_by([&] { c.apply_text("epochs\n", "x"); }).message.find("x:1") != std::string::npos);
  CHECK(thrown_by([&] { c.set("epochs", "-1"); }).kind == ErrorKind::Config);
  CHECK(thrown_by([&] { c.set("lr_max", "fast"); }).kind == ErrorKind::Config);
  CHECK(thrown_by([&] { c.set("crop", "maybe"); }).kind == ErrorKind::Config);
  CHECK(thrown_by([&] { c.load_file("/nonexistent/run.cfg"); }).kind == ErrorKind::Io);
}

TEST_CASE("validation") {
  auto bad = [](const char* key, const char* value) {
    RunConfig c;
    c.set(key, value);
    return thrown_by([&] { c.validate(); }).kind == ErrorKind::Config;
  };
  CHECK(bad("epochs", "0"));
  CHECK(bad("pad_len", "25"));
  CHECK(bad("lr_min", "1"));
  CHECK(bad("beta1", "1"));
  CHECK(bad("crop_scale_lo", "0"));
  CHECK(bad("vit_grid", "6"));
  CHECK(bad("rnt_input", "27"));
  CHECK(bad("n_radicals", "1"));
}
