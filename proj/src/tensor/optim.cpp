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

#include "tensor/optim.hpp"

#include <cmath>
#include <numbers>

#include "common/error.hpp"

namespace sae::ad {

void adamw_step(Tensor& param, const Tensor& grad, Moments& moments, std::uint64_t step,
                double lr, const AdamWHyper& hyper) {
  require(param.same_shape(grad), ErrorKind::Dimension,
          "adamw: gradient shape " + shape_str(grad.shape()) + " vs parameter " +
              shape_str(param.shape()));
  require(lr >= 0.0, ErrorKind::Range, "adamw: negative learning rate");
  require(step >= 1, ErrorKind::Range, "adamw: step index is 1-based");
  grad.check_finite("adamw gradient");
  if (moments.first.shape() != param.shape()) {
    moments.first = Tensor(param.shape());
    moments.second = Tensor(param.shape());
  }
  const double bc1 = 1.0 - std::pow(hyper.beta1, static_cast<double>(step));
  const double bc2 = 1.0 - std::pow(hyper.beta2, static_cast<double>(step));
  const double decay = 1.0 - lr * hyper.weight_decay;
  auto p = param.data();
  auto g = grad.data();
  auto m = moments.first.data();
  auto v = moments.second.data();
  for (std::size_t i = 0; i < p.size(); ++i) {
    m[i] = hyper.beta1 * m[i] + (1.0 - hyper.beta1) * g[i];
    v[i] = hyper.beta2 * v[i] + (1.0 - hyper.beta2) * g[i] * g[i];
    const double m_hat = m[i] / bc1;
    const double v_hat = v[i] / bc2;
    p[i] = p[i] * decay - lr * m_hat / (std::sqrt(v_hat) + hyper.eps);
  }
}

void AdamW::step(ParameterStore& store, double lr) {
  ++step_;
  store.for_each([&](Parameter& p) {
    if (p.buffer || !p.trainable) return;
    adamw_step(p.value, p.grad, moments_[p.name], step_, lr, hyper_);
  });
}

double cosine_lr(double t_cur, double t_total, double lr_max, double lr_min) {
  require(t_total > 0.0, ErrorKind::Range, "cosine_lr: total epochs must be positive");
  require(t_cur >= 0.0 && t_cur <= t_total, ErrorKind::Range,
          "cosine_lr: epoch " + std::to_string(t_cur) + " outside [0, " + std::to_string(t_total) + "]");
  return lr_min + 0.5 * (lr_max - lr_min) * (1.0 + std::cos(std::numbers::pi * t_cur / t_total));
}

}  // namespace sae::ad
