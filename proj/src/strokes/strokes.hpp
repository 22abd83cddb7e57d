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

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace sae::strokes {

// GB18030 basic stroke categories.
enum class StrokeClass : int {
  Horizontal = 1,
  Vertical = 2,
  LeftFalling = 3,
  RightFalling = 4,
  Turning = 5,
};

StrokeClass stroke_class_from_code(int code);
inline int code(StrokeClass c) { return static_cast<int>(c); }

inline constexpr double kGlyphBox = 1024.0;
inline constexpr std::size_t kMaxStrokes = 24;

struct Point {
  double x = 0.0;
  double y = 0.0;
  bool operator==(const Point&) const = default;
};

struct Stroke {
  StrokeClass cls = StrokeClass::Horizontal;
  std::vector<Point> points;  // glyph box coordinates, y down
  bool operator==(const Stroke&) const = default;
};

struct CharacterSpec {
  std::string label;
  std::vector<Stroke> strokes;
  // Component radicals, when known (synthetic alphabets record them).
  std::vector<std::string> radicals;
  std::string layout;

  std::size_t stroke_count() const { return strokes.size(); }
  bool operator==(const CharacterSpec&) const = default;
};

// Throws a parse error when the stroke count, class codes or points violate
// the character invariants. `context` prefixes the message.
void validate(const CharacterSpec& spec, const std::string& context = {});

// Concatenated class digits in writing order, e.g. "25135451".
std::string encode_strokes(const CharacterSpec& spec);

// ---- stroke-JSON ingestion ----

// Accepts either a JSON array of records or one record per line. Records are
//   {"label": str, "strokes": [{"class": 1..5, "points": [[x, y], ...]}, ...]}
// with optional "radicals" (array of str) and "layout" (str). Output is
// sorted by label.
std::vector<CharacterSpec> parse_stroke_json(const std::string& text);
std::vector<CharacterSpec> load_stroke_file(const std::filesystem::path& path);
std::string to_stroke_json(const std::vector<CharacterSpec>& specs);
void save_stroke_file(const std::filesystem::path& path, const std::vector<CharacterSpec>& specs);

// ---- synthetic alphabet ----

struct RadicalProgram {
  std::string name;
  std::vector<Stroke> strokes;  // unit-box coordinates
  bool can_enclose = false;
};

const std::vector<RadicalProgram>& radical_library();

// Two-radical compositions in left-right, top-bottom and enclosing layouts.
std::vector<CharacterSpec> synthetic_alphabet(std::size_t n_radicals, std::size_t n_chars,
                                              std::uint64_t seed);
// A radical drawn alone as a character, filling the glyph box.
CharacterSpec radical_character(const RadicalProgram& radical);

// ---- raster images and sequences ----

struct Image {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<double> pixels;

  Image() = default;
  Image(std::size_t h, std::size_t w, double fill = 0.0) : height(h), width(w), pixels(h * w, fill) {}
  double& at(std::size_t y, std::size_t x) { return pixels[y * width + x]; }
  double at(std::size_t y, std::size_t x) const { return pixels[y * width + x]; }
  bool blank() const;
  bool operator==(const Image&) const = default;
};

Image pixel_max(const Image& a, const Image& b);

enum class Form { Cumulative, Incremental };  // dataset forms A and B
Form parse_form(const std::string& s);
const char* form_name(Form f);

struct StrokeImageSequence {
  Form form = Form::Cumulative;
  std::vector<Image> frames;
  std::size_t stroke_count = 0;
  std::size_t pad_len = kMaxStrokes;
  std::string label;

  bool is_padding(std::size_t t) const { return t >= stroke_count; }
};

struct RasterOptions {
  std::size_t size = 28;
  double stroke_width = 0.0;  // pixels; 0 selects 6% of the raster size (at least 1)

  double effective_width() const;
};

Image render_stroke(const Stroke& stroke, const RasterOptions& opt, std::size_t stroke_index = 0);
Image render_full(const CharacterSpec& spec, const RasterOptions& opt);
StrokeImageSequence rasterize(const CharacterSpec& spec, const RasterOptions& opt, Form form);
StrokeImageSequence pad_sequence(StrokeImageSequence seq, std::size_t pad_len = kMaxStrokes);

// ---- prefix samples ----

struct PrefixSample {
  Image input;
  std::vector<Image> targets;  // frames 1..k followed by blanks up to pad_len
  std::size_t k = 0;
};

// Input is cumulative frame k; targets are frames 1..k of the same sequence.
std::vector<PrefixSample> make_prefix_samples(const StrokeImageSequence& seq, std::size_t pad_len);
// As above with inputs drawn from `inputs` (cumulative, any resolution) and
// targets from `targets` (either form) of the same character.
std::vector<PrefixSample> make_prefix_samples(const StrokeImageSequence& inputs,
                                              const StrokeImageSequence& targets,
                                              std::size_t pad_len);

// ---- augmentation ----

// Crop window in fractions of the image extent.
struct CropRect {
  double x0 = 0.0, y0 = 0.0, w = 1.0, h = 1.0;
};

struct CropParams {
  double scale_lo = 0.8, scale_hi = 1.0;
  double ratio_lo = 3.0 / 4.0, ratio_hi = 4.0 / 3.0;
};

CropRect sample_crop(std::mt19937_64& rng, const CropParams& params = {});
Image apply_crop(const Image& img, const CropRect& rect);

struct CroppedSample {
  Image input;
  std::vector<Image> targets;
  CropRect rect;
};

// One window sampled and applied to the input and every target frame.
CroppedSample random_resized_crop(const Image& input, const std::vector<Image>& targets,
                                  std::mt19937_64& rng, const CropParams& params = {});

// Writer-style variation: Gaussian noise of `sigma` glyph units on every
// polyline point, clamped to the glyph box.
CharacterSpec jitter(const CharacterSpec& spec, double sigma, std::mt19937_64& rng);

// ---- class split ----

struct DatasetSplit {
  std::size_t n_seen = 0;
  std::vector<std::size_t> train;  // class indices
  std::vector<std::size_t> test;
};

// Train on the first n_seen classes, test on the last n_test classes.
// n_test = 0 selects min(1000, total - n_seen).
DatasetSplit split_classes(std::size_t total, std::size_t n_seen, std::size_t n_test = 0);

// ---- PGM export ----

void write_pgm(const std::filesystem::path& path, const Image& img);
Image read_pgm(const std::filesystem::path& path);
// Grid of rows of frames separated by 1-pixel gray gutters. Missing cells are
// left blank.
Image tile_rows(const std::vector<std::vector<Image>>& rows);

}  // namespace sae::strokes
