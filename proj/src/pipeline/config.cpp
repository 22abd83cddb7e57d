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

#include "pipeline/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "common/error.hpp"

namespace sae::pipeline {

Arch parse_arch(const std::string& s) {
  if (s == "vit") return Arch::Vit;
  if (s == "rnt") return Arch::Rnt;
  fail(ErrorKind::Config, "unknown architecture '" + s + "' (expected vit or rnt)");
}

const char* arch_name(Arch a) { return a == Arch::Vit ? "vit" : "rnt"; }

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::size_t to_size(const std::string& key, const std::string& v) {
  std::size_t out = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  require(ec == std::errc() && p == v.data() + v.size(), ErrorKind::Config,
          key + ": expected a non-negative integer, got '" + v + "'");
  return out;
}

double to_double(const std::string& key, const std::string& v) {
  double out = 0.0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  require(ec == std::errc() && p == v.data() + v.size(), ErrorKind::Config,
          key + ": expected a number, got '" + v + "'");
  return out;
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "1" || v == "true" || v == "yes" || v == "on") return true;
  if (v == "0" || v == "false" || v == "no" || v == "off") return false;
  fail(ErrorKind::Config, key + ": expected a boolean, got '" + v + "'");
}

std::string fmt(double v) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, p);
}

struct Field {
  std::function<std::string(const RunConfig&)> get;
  std::function<void(RunConfig&, const std::string&, const std::string&)> set;
};

template <typename T>
Field size_field(T RunConfig::*m) {
  return {[m](const RunConfig& c) { return std::to_string(c.*m); },
          [m](RunConfig& c, const std::string& k, const std::string& v) { c.*m = static_cast<T>(to_size(k, v)); }};
}

Field double_field(double RunConfig::*m) {
  return {[m](const RunConfig& c) { return fmt(c.*m); },
          [m](RunConfig& c, const std::string& k, const std::string& v) { c.*m = to_double(k, v); }};
}

Field bool_field(bool RunConfig::*m) {
  return {[m](const RunConfig& c) { return std::string(c.*m ? "true" : "false"); },
          [m](RunConfig& c, const std::string& k, const std::string& v) { c.*m = to_bool(k, v); }};
}

Field string_field(std::string RunConfig::*m) {
  return {[m](const RunConfig& c) { return c.*m; },
          [m](RunConfig& c, const std::string&, const std::string& v) { c.*m = v; }};
}

void apply_scale(RunConfig& c, const std::string& scale) {
  if (scale == "full") {
    c.vit_image = 140, c.vit_grid = 5, c.vit_frame = 28, c.vit_width = 256, c.vit_heads = 4, c.vit_ffn = 1024;
    c.vit_depth = 4, c.rnt_input = 28, c.rnt_width = 256, c.rnt_heads = 4, c.rnt_ffn = 1024, c.pad_len = 24;
    c.jitter_sigma = 16.0, c.recognizer_epochs = 60, c.recognizer_lr = 1e-4;
    c.finetune_epochs = 30, c.finetune_lr = 1e-4;
  } else if (scale == "desk") {
    c.vit_image = 54, c.vit_grid = 3, c.vit_frame = 14, c.vit_width = 64, c.vit_heads = 4, c.vit_ffn = 128;
    c.vit_depth = 4, c.rnt_input = 20, c.rnt_width = 32, c.rnt_heads = 4, c.rnt_ffn = 64, c.pad_len = 8;
    c.jitter_sigma = 32.0, c.recognizer_epochs = 1000, c.recognizer_lr = 1e-3;
    c.finetune_epochs = 500, c.finetune_lr = 1e-3;
  } else {
    fail(ErrorKind::Config, "unknown scale '" + scale + "' (expected full or desk)");
  }
  c.scale = scale;
}

// Ordered so that serialize() writes `scale` first and a parse of the output
// restores every override.
const std::vector<std::pair<std::string, Field>>& fields() {
  static const std::vector<std::pair<std::string, Field>> table = {
      {"scale", {[](const RunConfig& c) { return c.scale; },
                 [](RunConfig& c, const std::string&, const std::string& v) { apply_scale(c, v); }}},
      {"arch", {[](const RunConfig& c) { return std::string(arch_name(c.arch)); },
                [](RunConfig& c, const std::string&, const std::string& v) { c.arch = parse_arch(v); }}},
      {"form", {[](const RunConfig& c) { return c.form; },
                [](RunConfig& c, const std::string&, const std::string& v) {
                  if (!v.empty()) strokes::parse_form(v);
                  c.form = v;
                }}},
      {"n_radicals", size_field(&RunConfig::n_radicals)},
      {"n_chars", size_field(&RunConfig::n_chars)},
      {"n_seen", size_field(&RunConfig::n_seen)},
      {"seed", size_field(&RunConfig::seed)},
      {"source", string_field(&RunConfig::source)},
      {"epochs", size_field(&RunConfig::epochs)},
      {"batch_size", size_field(&RunConfig::batch_size)},
      {"lr_max", double_field(&RunConfig::lr_max)},
      {"lr_min", double_field(&RunConfig::lr_min)},
      {"beta1", double_field(&RunConfig::beta1)},
      {"beta2", double_field(&RunConfig::beta2)},
      {"weight_decay", double_field(&RunConfig::weight_decay)},
      {"crop", bool_field(&RunConfig::crop)},
      {"crop_scale_lo", double_field(&RunConfig::crop_scale_lo)},
      {"crop_scale_hi", double_field(&RunConfig::crop_scale_hi)},
      {"prefix_samples", bool_field(&RunConfig::prefix_samples)},
      {"vit_image", size_field(&RunConfig::vit_image)},
      {"vit_grid", size_field(&RunConfig::vit_grid)},
      {"vit_frame", size_field(&RunConfig::vit_frame)},
      {"vit_width", size_field(&RunConfig::vit_width)},
      {"vit_heads", size_field(&RunConfig::vit_heads)},
      {"vit_ffn", size_field(&RunConfig::vit_ffn)},
      {"vit_depth", size_field(&RunConfig::vit_depth)},
      {"rnt_input", size_field(&RunConfig::rnt_input)},
      {"rnt_width", size_field(&RunConfig::rnt_width)},
      {"rnt_heads", size_field(&RunConfig::rnt_heads)},
      {"rnt_ffn", size_field(&RunConfig::rnt_ffn)},
      {"pad_len", size_field(&RunConfig::pad_len)},
      {"jitter_sigma", double_field(&RunConfig::jitter_sigma)},
      {"recognizer_epochs", size_field(&RunConfig::recognizer_epochs)},
      {"recognizer_lr", double_field(&RunConfig::recognizer_lr)},
      {"finetune_epochs", size_field(&RunConfig::finetune_epochs)},
      {"finetune_lr", double_field(&RunConfig::finetune_lr)},
      {"baseline_trials", size_field(&RunConfig::baseline_trials)},
  };
  return table;
}

const Field& field(const std::string& key) {
  for (const auto& [k, f] : fields())
    if (k == key) return f;
  fail(ErrorKind::Config, "unknown configuration key '" + key + "'");
}

}  // namespace

void RunConfig::set(const std::string& key, const std::string& value) { field(key).set(*this, key, trim(value)); }

std::string RunConfig::get(const std::string& key) const { return field(key).get(*this); }

const std::vector<std::string>& RunConfig::keys() {
  static const std::vector<std::string> k = [] {
    std::vector<std::string> out;
    for (const auto& [name, f] : fields()) out.push_back(name);
    return out;
  }();
  return k;
}

void RunConfig::apply_text(const std::string& text, const std::string& origin) {
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    require(eq != std::string::npos, ErrorKind::Config,
            origin + ":" + std::to_string(line_no) + ": expected key=value, got '" + line + "'");
    try {
      set(trim(line.substr(0, eq)), line.substr(eq + 1));
    } catch (const Error& e) {
      fail(e.kind(), origin + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
}

void RunConfig::load_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  require(in.good(), ErrorKind::Io, "cannot open config file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  apply_text(ss.str(), path.string());
}

std::string RunConfig::serialize() const {
  std::string out;
  for (const auto& [k, f] : fields()) out += k + "=" + f.get(*this) + "\n";
  return out;
}

RunConfig RunConfig::parse(const std::string& text) {
  RunConfig c;
  c.apply_text(text, "config");
  return c;
}

void RunConfig::validate() const {
  require(n_radicals >= 2 && n_chars >= n_radicals, ErrorKind::Config, "need n_chars >= n_radicals >= 2");
  require(n_seen > 0, ErrorKind::Config, "n_seen must be positive");
  require(epochs > 0 && batch_size > 0, ErrorKind::Config, "epochs and batch_size must be positive");
  require(lr_max >= 0.0 && lr_min >= 0.0 && lr_min <= lr_max, ErrorKind::Config, "need 0 <= lr_min <= lr_max");
  require(recognizer_lr >= 0.0 && finetune_lr >= 0.0, ErrorKind::Config, "recogniser learning rates must be non-negative");
  require(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0, ErrorKind::Config, "betas must lie in [0, 1)");
  require(weight_decay >= 0.0, ErrorKind::Config, "weight_decay must be non-negative");
  require(crop_scale_lo > 0.0 && crop_scale_lo <= crop_scale_hi && crop_scale_hi <= 1.0, ErrorKind::Config,
          "crop scale range must satisfy 0 < lo <= hi <= 1");
  require(pad_len >= 1 && pad_len <= strokes::kMaxStrokes, ErrorKind::Config, "pad_len must lie in 1..24");
  require(jitter_sigma >= 0.0, ErrorKind::Config, "jitter_sigma must be non-negative");
  require(baseline_trials > 0, ErrorKind::Config, "baseline_trials must be positive");
  vit_config().validate();
  rnt_config().validate();
}

strokes::Form RunConfig::data_form() const {
  if (!form.empty()) return strokes::parse_form(form);
  return arch == Arch::Vit ? strokes::Form::Cumulative : strokes::Form::Incremental;
}

vit::ViTConfig RunConfig::vit_config() const {
  vit::ViTConfig c;
  c.image_size = vit_image;
  c.grid_rows = c.grid_cols = vit_grid;
  c.frame_size = vit_frame;
  c.width = vit_width;
  c.heads = vit_heads;
  c.ffn_hidden = vit_ffn;
  c.encoder_depth = c.decoder_depth = vit_depth;
  c.pad_len = pad_len;
  return c;
}

rnt::RntConfig RunConfig::rnt_config(rnt::HeadKind head) const {
  rnt::RntConfig c;
  c.input_size = rnt_input;
  c.width = rnt_width;
  c.heads = rnt_heads;
  c.ffn_hidden = rnt_ffn;
  c.pad_len = pad_len;
  c.head = head;
  return c;
}

ad::AdamWHyper RunConfig::adamw() const {
  ad::AdamWHyper h;
  h.beta1 = beta1;
  h.beta2 = beta2;
  h.weight_decay = weight_decay;
  return h;
}

strokes::CropParams RunConfig::crop_params() const {
  strokes::CropParams p;
  p.scale_lo = crop_scale_lo;
  p.scale_hi = crop_scale_hi;
  return p;
}

RunConfig desk_config() {
  RunConfig c;
  c.set("scale", "desk");
  return c;
}

}  // namespace sae::pipeline
