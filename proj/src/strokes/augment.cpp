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

#include "common/error.hpp"
#include "strokes/strokes.hpp"

namespace sae::strokes {

CropRect sample_crop(std::mt19937_64& rng, const CropParams& params) {
  require(params.scale_lo > 0.0 && params.scale_lo <= params.scale_hi && params.scale_hi <= 1.0, ErrorKind::Config,
          "crop scale range must satisfy 0 < lo <= hi <= 1");
  require(params.ratio_lo > 0.0 && params.ratio_lo <= params.ratio_hi, ErrorKind::Config,
          "crop ratio range must satisfy 0 < lo <= hi");
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double log_lo = std::log(params.ratio_lo), log_hi = std::log(params.ratio_hi);
  for (int attempt = 0; attempt < 10; ++attempt) {
    const double area = params.scale_lo + (params.scale_hi - params.scale_lo) * unit(rng);
    const double ratio = std::exp(log_lo + (log_hi - log_lo) * unit(rng));
    const double w = std::sqrt(area * ratio);
    const double h = std::sqrt(area / ratio);
    if (w > 1.0 || h > 1.0) continue;
    const double x0 = (1.0 - w) * unit(rng);
    const double y0 = (1.0 - h) * unit(rng);
    return {x0, y0, w, h};
  }
  // Center crop fallback: largest window with an admissible ratio and area.
  const double ratio = std::clamp(1.0, params.ratio_lo, params.ratio_hi);
  double w = std::sqrt(params.scale_hi * ratio), h = std::sqrt(params.scale_hi / ratio);
  if (w > 1.0) {
    h /= w;
    w = 1.0;
  }
  if (h > 1.0) {
    w /= h;
    h = 1.0;
  }
  return {(1.0 - w) / 2.0, (1.0 - h) / 2.0, w, h};
}

Image apply_crop(const Image& img, const CropRect& rect) {
  require(img.height > 0 && img.width > 0, ErrorKind::Dimension, "apply_crop: empty image");
  Image out(img.height, img.width);
  const double H = static_cast<double>(img.height), W = static_cast<double>(img.width);
  for (std::size_t y = 0; y < img.height; ++y) {
    // Output pixel centre mapped into source pixel coordinates.
    const double sy = (rect.y0 + rect.h * (y + 0.5) / H) * H - 0.5;
    const double cy = std::clamp(sy, 0.0, H - 1.0);
    const auto y0 = static_cast<std::size_t>(std::floor(cy));
    const std::size_t y1 = std::min(y0 + 1, img.height - 1);
    const double fy = cy - y0;
    for (std::size_t x = 0; x < img.width; ++x) {
      const double sx = (rect.x0 + rect.w * (x + 0.5) / W) * W - 0.5;
      const double cx = std::clamp(sx, 0.0, W - 1.0);
      const auto x0 = static_cast<std::size_t>(std::floor(cx));
      const std::size_t x1 = std::min(x0 + 1, img.width - 1);
      const double fx = cx - x0;
      const double top = img.at(y0, x0) + fx * (img.at(y0, x1) - img.at(y0, x0));
      const double bot = img.at(y1, x0) + fx * (img.at(y1, x1) - img.at(y1, x0));
      out.at(y, x) = top + fy * (bot - top);
    }
  }
  return out;
}

CroppedSample random_resized_crop(const Image& input, const std::vector<Image>& targets, std::mt19937_64& rng,
                                  const CropParams& params) {
  CroppedSample s;
  s.rect = sample_crop(rng, params);
  s.input = apply_crop(input, s.rect);
  s.targets.reserve(targets.size());
  for (const auto& t : targets) s.targets.push_back(t.blank() ? t : apply_crop(t, s.rect));
  return s;
}

CharacterSpec jitter(const CharacterSpec& spec, double sigma, std::mt19937_64& rng) {
  require(sigma >= 0.0, ErrorKind::Config, "jitter sigma must be non-negative");
  CharacterSpec out = spec;
  if (sigma == 0.0) return out;
  std::normal_distribution<double> noise(0.0, sigma);
  for (auto& s : out.strokes) {
    for (auto& p : s.points) {
      p.x = std::clamp(p.x + noise(rng), 0.0, kGlyphBox);
      p.y = std::clamp(p.y + noise(rng), 0.0, kGlyphBox);
    }
  }
  return out;
}

DatasetSplit split_classes(std::size_t total, std::size_t n_seen, std::size_t n_test) {
  require(n_seen < total, ErrorKind::Config,
          "n_seen (" + std::to_string(n_seen) + ") must be below the class count (" + std::to_string(total) + ")");
  require(n_seen > 0, ErrorKind::Config, "n_seen must be positive");
  if (n_test == 0) n_test = std::min<std::size_t>(1000, total - n_seen);
  require(n_test <= total - n_seen, ErrorKind::Config, "test classes would overlap the seen classes");
  DatasetSplit split;
  split.n_seen = n_seen;
  for (std::size_t i = 0; i < n_seen; ++i) split.train.push_back(i);
  for (std::size_t i = total - n_test; i < total; ++i) split.test.push_back(i);
  return split;
}

}  // namespace sae::strokes
