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
#include <map>
#include <string>

#include "tensor/tensor.hpp"

namespace sae::ad {

struct AdamWHyper {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.05;
};

struct Moments {
  Tensor first;
  Tensor second;
};

// One AdamW update of a single array. `step` is the 1-based step index used
// for bias correction. Weight decay is applied to the parameter before the
// Adam increment (decoupled decay).
void adamw_step(Tensor& param, const Tensor& grad, Moments& moments, std::uint64_t step,
                double lr, const AdamWHyper& hyper);

class AdamW {
 public:
  explicit AdamW(AdamWHyper hyper = {}) : hyper_(hyper) {}

  // Updates every trainable, non-buffer parameter from its accumulated grad.
  void step(ParameterStore& store, double lr);

  std::uint64_t steps() const noexcept { return step_; }
  const AdamWHyper& hyper() const noexcept { return hyper_; }
  const std::map<std::string, Moments>& moments() const noexcept { return moments_; }

  // Used when restoring from a checkpoint.
  void restore(std::uint64_t step, std::map<std::string, Moments> moments) {
    step_ = step;
    moments_ = std::move(moments);
  }

 private:
  AdamWHyper hyper_;
  std::uint64_t step_ = 0;
  std::map<std::string, Moments> moments_;
};

// Cosine annealing: lr_min + (lr_max - lr_min) * (1 + cos(pi * t / T)) / 2.
double cosine_lr(double t_cur, double t_total, double lr_max, double lr_min);

}  // namespace sae::ad
