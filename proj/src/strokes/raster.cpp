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
#include <cmath>
#include <fstream>

#include "common/error.hpp"
#include "strokes/strokes.hpp"

namespace sae::strokes {

bool Image::blank() const {
  return std::all_of(pixels.begin(), pixels.end(), [](double v) { return v == 0.0; });
}

Image pixel_max(const Image& a, const Image& b) {
  require(a.height == b.height && a.width == b.width, ErrorKind::Dimension, "pixel_max: size mismatch");
  Image out = a;
  for (std::size_t i = 0; i < out.pixels.size(); ++i) out.pixels[i] = std::max(a.pixels[i], b.pixels[i]);
  return out;
}

Form parse_form(const std::string& s) {
  if (s == "A" || s == "a" || s == "cumulative") return Form::Cumulative;
  if (s == "B" || s == "b" || s == "incremental") return Form::Incremental;
  fail(ErrorKind::Config, "unknown data form '" + s + "' (expected A or B)");
}

const char* form_name(Form f) { return f == Form::Cumulative ? "A" : "B"; }

double RasterOptions::effective_width() const {
  return stroke_width > 0.0 ? stroke_width : std::max(1.0, 0.06 * static_cast<double>(size));
}

namespace {

double segment_distance_sq(double px, double py, const Point& a, const Point& b) {
  const double dx = b.x - a.x, dy = b.y - a.y;
  const double len_sq = dx * dx + dy * dy;
  double t = len_sq > 0.0 ? ((px - a.x) * dx + (py - a.y) * dy) / len_sq : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  const double cx = a.x + t * dx - px, cy = a.y + t * dy - py;
  return cx * cx + cy * cy;
}

}  // namespace

Image render_stroke(const Stroke& stroke, const RasterOptions& opt, std::size_t stroke_index) {
  require(opt.size >= 8, ErrorKind::Range, "raster size must be at least 8 pixels");
  const double width = opt.effective_width();
  require(width >= 1.0, ErrorKind::Range, "stroke width must be at least 1 pixel");
  const bool degenerate = std::all_of(stroke.points.begin(), stroke.points.end(),
                                      [&](const Point& p) { return p == stroke.points.front(); });
  require(stroke.points.size() >= 2 && !degenerate, ErrorKind::Render,
          "stroke " + std::to_string(stroke_index) + " is degenerate (all points coincide)");

  const double s = static_cast<double>(opt.size) / kGlyphBox;
  std::vector<Point> pts;
  for (const auto& p : stroke.points) pts.push_back({p.x * s, p.y * s});
  const double r = width / 2.0;
  const double r_sq = r * r;
  Image img(opt.size, opt.size);
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
    const Point& a = pts[i];
    const Point& b = pts[i + 1];
    const auto lo = [&](double v) {
      return static_cast<std::size_t>(std::clamp(std::floor(v - r - 0.5), 0.0, static_cast<double>(opt.size - 1)));
    };
    const auto hi = [&](double v) {
      return static_cast<std::size_t>(std::clamp(std::ceil(v + r + 0.5), 0.0, static_cast<double>(opt.size - 1)));
    };
    for (std::size_t y = lo(std::min(a.y, b.y)); y <= hi(std::max(a.y, b.y)); ++y) {
      for (std::size_t x = lo(std::min(a.x, b.x)); x <= hi(std::max(a.x, b.x)); ++x) {
        if (segment_distance_sq(x + 0.5, y + 0.5, a, b) <= r_sq) img.at(y, x) = 1.0;
      }
    }
  }
  return img;
}

Image render_full(const CharacterSpec& spec, const RasterOptions& opt) {
  Image out(opt.size, opt.size);
  for (std::size_t i = 0; i < spec.strokes.size(); ++i) out = pixel_max(out, render_stroke(spec.strokes[i], opt, i));
  return out;
}

StrokeImageSequence rasterize(const CharacterSpec& spec, const RasterOptions& opt, Form form) {
  validate(spec);
  StrokeImageSequence seq;
  seq.form = form;
  seq.stroke_count = spec.strokes.size();
  seq.label = spec.label;
  Image acc(opt.size, opt.size);
  for (std::size_t i = 0; i < spec.strokes.size(); ++i) {
    Image stroke = render_stroke(spec.strokes[i], opt, i);
    if (form == Form::Cumulative) {
      acc = pixel_max(acc, stroke);
      seq.frames.push_back(acc);
    } else {
      seq.frames.push_back(std::move(stroke));
    }
  }
  return seq;
}

StrokeImageSequence pad_sequence(StrokeImageSequence seq, std::size_t pad_len) {
  require(seq.frames.size() <= pad_len, ErrorKind::Range,
          "sequence of " + std::to_string(seq.frames.size()) + " frames exceeds pad length " +
              std::to_string(pad_len));
  require(!seq.frames.empty(), ErrorKind::Range, "cannot pad an empty sequence");
  const std::size_t h = seq.frames.front().height, w = seq.frames.front().width;
  while (seq.frames.size() < pad_len) seq.frames.emplace_back(h, w);
  seq.pad_len = pad_len;
  return seq;
}

std::vector<PrefixSample> make_prefix_samples(const StrokeImageSequence& seq, std::size_t pad_len) {
  return make_prefix_samples(seq, seq, pad_len);
}

std::vector<PrefixSample> make_prefix_samples(const StrokeImageSequence& inputs,
                                              const StrokeImageSequence& targets, std::size_t pad_len) {
  require(inputs.form == Form::Cumulative, ErrorKind::Usage,
          "prefix samples need cumulative (form A) input frames");
  const std::size_t m = inputs.stroke_count;
  require(targets.stroke_count == m, ErrorKind::Usage, "prefix samples: input and target stroke counts differ");
  require(m <= pad_len, ErrorKind::Range, "prefix samples: stroke count exceeds pad length");
  require(inputs.frames.size() >= m && targets.frames.size() >= m, ErrorKind::Usage,
          "prefix samples: sequence has fewer frames than strokes");
  std::vector<PrefixSample> out;
  const std::size_t th = targets.frames.front().height, tw = targets.frames.front().width;
  for (std::size_t k = 1; k <= m; ++k) {
    PrefixSample s;
    s.k = k;
    s.input = inputs.frames[k - 1];
    for (std::size_t t = 0; t < k; ++t) s.targets.push_back(targets.frames[t]);
    while (s.targets.size() < pad_len) s.targets.emplace_back(th, tw);
    out.push_back(std::move(s));
  }
  return out;
}

void write_pgm(const std::filesystem::path& path, const Image& img) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  require(out.good(), ErrorKind::Io, "cannot write " + path.string());
  out << "P5\n" << img.width << ' ' << img.height << "\n255\n";
  std::vector<unsigned char> bytes(img.pixels.size());
  for (std::size_t i = 0; i < bytes.size(); ++i) {
    const double v = std::clamp(img.pixels[i], 0.0, 1.0);
    bytes[i] = static_cast<unsigned char>(std::lround(v * 255.0));
  }
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  require(out.good(), ErrorKind::Io, "write failed for " + path.string());
}

Image read_pgm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), ErrorKind::Io, "cannot open " + path.string());
  std::string magic;
  std::size_t w = 0, h = 0;
  int maxval = 0;
  in >> magic >> w >> h >> maxval;
  require(magic == "P5" && maxval == 255 && w > 0 && h > 0, ErrorKind::Io, path.string() + ": unsupported PGM header");
  in.get();
  std::vector<unsigned char> bytes(w * h);
  in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  require(static_cast<std::size_t>(in.gcount()) == bytes.size(), ErrorKind::Io, path.string() + ": truncated PGM");
  Image img(h, w);
  for (std::size_t i = 0; i < bytes.size(); ++i) img.pixels[i] = bytes[i] / 255.0;
  return img;
}

Image tile_rows(const std::vector<std::vector<Image>>& rows) {
  std::size_t cell_h = 0, cell_w = 0, cols = 0;
  for (const auto& r : rows) {
    cols = std::max(cols, r.size());
    for (const auto& img : r) {
      cell_h = std::max(cell_h, img.height);
      cell_w = std::max(cell_w, img.width);
    }
  }
  require(cols > 0 && cell_h > 0, ErrorKind::Range, "tile_rows: nothing to tile");
  const std::size_t out_h = rows.size() * cell_h + (rows.size() + 1);
  const std::size_t out_w = cols * cell_w + (cols + 1);
  Image out(out_h, out_w, 0.5);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      const std::size_t oy = 1 + r * (cell_h + 1), ox = 1 + c * (cell_w + 1);
      for (std::size_t y = 0; y < cell_h; ++y)
        for (std::size_t x = 0; x < cell_w; ++x) out.at(oy + y, ox + x) = 0.0;
      if (c >= rows[r].size()) continue;
      const Image& img = rows[r][c];
      for (std::size_t y = 0; y < img.height; ++y)
        for (std::size_t x = 0; x < img.width; ++x) out.at(oy + y, ox + x) = img.at(y, x);
    }
  }
  return out;
}

}  // namespace sae::strokes
