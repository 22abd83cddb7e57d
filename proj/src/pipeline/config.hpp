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
#include <filesystem>
#include <string>
#include <vector>

#include "rnt/rnt.hpp"
#include "strokes/strokes.hpp"
#include "tensor/optim.hpp"
#include "vit/vit.hpp"

namespace sae::pipeline {

enum class Arch { Vit, Rnt };
Arch parse_arch(const std::string& s);
const char* arch_name(Arch a);

// Every knob of a run. Model sizes follow `scale` (full or desk) unless
// overridden.
struct RunConfig {
  std::string scale = "full";
  Arch arch = Arch::Vit;
  std::string form;  // empty: A for vit, B for rnt

  // data
  std::size_t n_radicals = 12;
  std::size_t n_chars = 60;
  std::size_t n_seen = 45;
  std::uint64_t seed = 7;
  std::string source;  // stroke-JSON file; empty selects the synthetic alphabet

  // optimisation
  std::size_t epochs = 200;
  std::size_t batch_size = 32;
  double lr_max = 1e-4;
  double lr_min = 0.0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double weight_decay = 0.05;
  bool crop = true;
  double crop_scale_lo = 0.8;
  double crop_scale_hi = 1.0;
  bool prefix_samples = true;

  // vit
  std::size_t vit_image = 140;
  std::size_t vit_grid = 5;
  std::size_t vit_frame = 28;
  std::size_t vit_width = 256;
  std::size_t vit_heads = 4;
  std::size_t vit_ffn = 1024;
  std::size_t vit_depth = 4;

  // rnt
  std::size_t rnt_input = 28;
  std::size_t rnt_width = 256;
  std::size_t rnt_heads = 4;
  std::size_t rnt_ffn = 1024;

  std::size_t pad_len = 24;

  // zero-shot
  double jitter_sigma = 16.0;
  std::size_t recognizer_epochs = 60;
  double recognizer_lr = 1e-4;
  std::size_t finetune_epochs = 30;
  double finetune_lr = 1e-4;
  std::size_t baseline_trials = 200000;

  // Sets one key from text; unknown keys and bad values are config errors.
  // Setting `scale` resets every size to that preset.
  void set(const std::string& key, const std::string& value);
  std::string get(const std::string& key) const;
  static const std::vector<std::string>& keys();
  // key=value lines; '#' starts a comment.
  void load_file(const std::filesystem::path& path);
  void apply_text(const std::string& text, const std::string& origin);
  std::string serialize() const;
  static RunConfig parse(const std::string& text);
  void validate() const;

  strokes::Form data_form() const;
  vit::ViTConfig vit_config() const;
  rnt::RntConfig rnt_config(rnt::HeadKind head = rnt::HeadKind::Pixels) const;
  ad::AdamWHyper adamw() const;
  strokes::CropParams crop_params() const;
};

RunConfig desk_config();

}  // namespace sae::pipeline
