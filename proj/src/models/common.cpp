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

#include "models/common.hpp"

#include <algorithm>
#include <cmath>

#include "common/error.hpp"

namespace sae::models {

ad::Tensor image_tensor(const strokes::Image& img, bool flat) {
  ad::Shape shape = flat ? ad::Shape{img.height * img.width} : ad::Shape{1, img.height, img.width};
  return ad::Tensor(std::move(shape), img.pixels);
}

ad::Tensor frames_tensor(const std::vector<strokes::Image>& frames, std::size_t rows, std::size_t height,
                         std::size_t width) {
  require(frames.size() <= rows, ErrorKind::Dimension,
          std::to_string(frames.size()) + " frames exceed the " + std::to_string(rows) + " output slots");
  ad::Tensor t({rows, height * width});
  for (std::size_t r = 0; r < frames.size(); ++r) {
    const auto& f = frames[r];
    require(f.height == height && f.width == width, ErrorKind::Dimension,
            "frame " + std::to_string(r) + " is " + std::to_string(f.height) + "x" + std::to_string(f.width) +
                ", expected " + std::to_string(height) + "x" + std::to_string(width));
    std::copy(f.pixels.begin(), f.pixels.end(), t.ptr() + r * height * width);
  }
  return t;
}

strokes::Image row_image(const ad::Tensor& t, std::size_t row, std::size_t height, std::size_t width, bool clamp) {
  strokes::Image img(height, width);
  const double* src = t.ptr() + row * height * width;
  for (std::size_t i = 0; i < img.pixels.size(); ++i) img.pixels[i] = clamp ? std::clamp(src[i], 0.0, 1.0) : src[i];
  return img;
}

double blank_mse(const std::vector<strokes::Image>& targets) {
  double s = 0.0;
  std::size_t n = 0;
  for (const auto& f : targets) {
    for (double v : f.pixels) s += v * v;
    n += f.pixels.size();
  }
  require(n > 0, ErrorKind::Dimension, "blank_mse: no pixels");
  return s / static_cast<double>(n);
}

double frames_mse(const std::vector<strokes::Image>& pred, const std::vector<strokes::Image>& targets) {
  require(pred.size() == targets.size(), ErrorKind::Dimension, "frames_mse: frame count mismatch");
  double s = 0.0;
  std::size_t n = 0;
  for (std::size_t t = 0; t < pred.size(); ++t) {
    require(pred[t].pixels.size() == targets[t].pixels.size(), ErrorKind::Dimension, "frames_mse: size mismatch");
    for (std::size_t i = 0; i < pred[t].pixels.size(); ++i) {
      const double d = pred[t].pixels[i] - targets[t].pixels[i];
      s += d * d;
    }
    n += pred[t].pixels.size();
  }
  require(n > 0, ErrorKind::Dimension, "frames_mse: no pixels");
  return s / static_cast<double>(n);
}

double cosine_similarity(std::span<const double> a, std::span<const double> b) {
  require(a.size() == b.size(), ErrorKind::Dimension,
          "cosine: lengths differ (" + std::to_string(a.size()) + " vs " + std::to_string(b.size()) + ")");
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  require(na > 0.0 && nb > 0.0, ErrorKind::Numeric, "cosine of a zero-norm vector");
  return std::clamp(dot / std::sqrt(na * nb), -1.0, 1.0);
}

void check_loss(double loss, const char* context) {
  require(std::isfinite(loss), ErrorKind::Numeric,
          std::string(context) + ": non-finite loss " + std::to_string(loss));
}

}  // namespace sae::models
