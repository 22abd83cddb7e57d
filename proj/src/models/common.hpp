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

#include <span>
#include <vector>

#include "strokes/strokes.hpp"
#include "tensor/graph.hpp"

namespace sae::models {

// One training pair: an input image and its target frame sequence.
struct Example {
  strokes::Image input;
  std::vector<strokes::Image> targets;
};

// [1 x H x W] or, with flat = true, [H*W].
ad::Tensor image_tensor(const strokes::Image& img, bool flat = false);
// Row-major [n x H*W] from n frames of equal size; missing rows up to `rows`
// are zero.
ad::Tensor frames_tensor(const std::vector<strokes::Image>& frames, std::size_t rows,
                         std::size_t height, std::size_t width);
strokes::Image row_image(const ad::Tensor& t, std::size_t row, std::size_t height, std::size_t width,
                         bool clamp);

// Mean squared error of each predicted frame against all-zero frames.
double blank_mse(const std::vector<strokes::Image>& targets);
double frames_mse(const std::vector<strokes::Image>& pred, const std::vector<strokes::Image>& targets);

// Cosine of the angle between a and b; a zero-norm operand is a numeric
// error.
double cosine_similarity(std::span<const double> a, std::span<const double> b);

// Throws a numeric error carrying `context` when the loss is NaN or infinite.
void check_loss(double loss, const char* context);

}  // namespace sae::models
