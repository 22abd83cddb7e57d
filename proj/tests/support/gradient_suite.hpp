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

#include <string>
#include <vector>

#include "support/gradcheck.hpp"

namespace sae::testing {

struct GradCase {
  std::string name;
  std::function<GradReport(std::mt19937_64&)> run;
};

// Keeps values away from the ReLU kink so central differences stay smooth.
inline Tensor away_from_zero(Tensor t) {
  for (auto& v : t.data()) {
    if (std::abs(v) < 0.05) v = v < 0 ? -0.05 : 0.05;
  }
  return t;
}

inline std::vector<GradCase> gradient_cases() {
  using namespace sae::ad;
  std::vector<GradCase> cases;
  auto unary = [&](std::string name, std::function<Shape(std::mt19937_64&)> shape,
                   std::function<Var(Var)> op) {
    cases.push_back({name, [shape, op](std::mt19937_64& rng) {
                       std::vector<Tensor> in{random_tensor(shape(rng), rng)};
                       const auto seed = rng();
                       return check_gradients(in, {}, [&](Graph&, const std::vector<Var>& v) {
                         return project(op(v[0]), seed);
                       });
                     }});
  };
  auto dims = [](std::mt19937_64& rng, std::size_t lo, std::size_t hi) {
    return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
  };

  cases.push_back({"add/sub/mul", [=](std::mt19937_64& rng) {
                     const Shape s{dims(rng, 1, 4), dims(rng, 1, 4)};
                     std::vector<Tensor> in{random_tensor(s, rng), random_tensor(s, rng), random_tensor(s, rng)};
                     const auto seed = rng();
                     return check_gradients(in, {}, [&](Graph&, const std::vector<Var>& v) {
                       return project(sub(mul(add(v[0], v[1]), v[2]), v[1]), seed);
                     });
                   }});
  unary("scale", [=](auto& r) { return Shape{dims(r, 1, 5)}; }, [](Var a) { return scale(a, -1.7); });
  cases.push_back({"add_row", [=](std::mt19937_64& rng) {
                     const std::size_t n = dims(rng, 1, 4), d = dims(rng, 1, 5);
                     std::vector<Tensor> in{random_tensor({n, d}, rng), random_tensor({d}, rng)};
                     const auto seed = rng();
                     return check_gradients(in, {}, [&](Graph&, const std::vector<Var>& v) {
                       return project(add_row(v[0], v[1]), seed);
                     });
                   }});
  unary("reshape", [](auto&) { return Shape{2, 6}; }, [](Var a) { return reshape(a, {3, 4}); });
  unary("transpose", [=](auto& r) { return Shape{dims(r, 1, 4), dims(r, 1, 4)}; }, [](Var a) { return transpose(a); });
  unary("slice/concat cols", [](auto&) { return Shape{3, 6}; }, [](Var a) {
    return concat_cols({slice_cols(a, 4, 2), slice_cols(a, 0, 3)});
  });
  unary("slice/concat rows", [](auto&) { return Shape{5, 2, 2}; }, [](Var a) {
    return concat_rows({slice_rows(a, 3, 2), slice_rows(a, 0, 2)});
  });
  unary("take/stack", [](auto&) { return Shape{3, 2, 2}; }, [](Var a) {
    return stack({take(a, 2), take(a, 0)});
  });
  unary("sum/mean", [=](auto& r) { return Shape{dims(r, 1, 4), 3}; }, [](Var a) {
    return add(scale(sum(a), 0.3), mean(mul(a, a)));
  });
  cases.push_back({"matmul", [=](std::mt19937_64& rng) {
                     const std::size_t m = dims(rng, 1, 4), k = dims(rng, 1, 4), n = dims(rng, 1, 4);
                     std::vector<Tensor> in{random_tensor({m, k}, rng), random_tensor({k, n}, rng)};
                     const auto seed = rng();
                     return check_gradients(in, {}, [&](Graph&, const std::vector<Var>& v) {
                       return project(matmul(v[0], v[1]), seed);
                     });
                   }});
  cases.push_back({"linear", [=](std::mt19937_64& rng) {
                     const std::size_t n = dims(rng, 1, 3), i = dims(rng, 1, 4), o = dims(rng, 1, 4);
                     std::vector<Tensor> in{random_tensor({n, i}, rng), random_tensor({i, o}, rng),
                                            random_tensor({o}, rng)};
                     const auto seed = rng();
                     return check_gradients(in, {}, [&](Graph&, const std::vector<Var>& v) {
                       return project(linear(v[0], v[1], v[2]), seed);
                     });
                   }});
  cases.push_back({"relu", [=](std::mt19937_64& rng) {
                     std::vector<Tensor> in{away_from_zero(random_tensor({dims(rng, 1, 4), 4}, rng))};
                     const auto seed = rng();
                     return check_gradients(in, {}, [&](Graph&, const std::vector<Var>& v) {
                       return project(relu(v[0]), seed);
                     });
                   }});
  unary("gelu", [=](auto& r) { return Shape{dims(r, 1, 4), 3}; }, [](Var a) { return gelu(scale(a, 3.0)); });
  unary("softmax_rows", [=](auto& r) { return Shape{dims(r, 1, 4), dims(r, 2, 5)}; }, [](Var a) {
    return softmax_rows(scale(a, 2.0));
  });
  unary("softmax_rows causal", [=](auto& r) {
    const std::size_t n = dims(r, 2, 5);
    return Shape{n, n};
  }, [](Var a) { return softmax_rows(scale(a, 2.0), true); });
  cases.push_back({"layer_norm", [=](std::mt19937_64& rng) {
                     const std::size_t n = dims(rng, 1, 3), d = dims(rng, 2, 6);
                     std::vector<Tensor> in{random_tensor({n, d}, rng, -2, 2), random_tensor({d}, rng),
                                            random_tensor({d}, rng)};
                     const auto seed = rng();
                     return check_gradients(in, {}, [&](Graph&, const std::vector<Var>& v) {
                       return project(layer_norm(v[0], v[1], v[2]), seed);
                     });
                   }});
  cases.push_back({"conv2d", [=](std::mt19937_64& rng) {
                     const std::size_t c = dims(rng, 1, 2), f = dims(rng, 1, 3);
                     const std::size_t h = dims(rng, 3, 6), w = dims(rng, 3, 6);
                     const std::size_t stride = dims(rng, 1, 2), pad = dims(rng, 0, 1);
                     const bool batched = rng() % 2 == 0;
                     Shape xs = batched ? Shape{2, c, h, w} : Shape{c, h, w};
                     std::vector<Tensor> in{random_tensor(xs, rng), random_tensor({f, c, 3, 3}, rng),
                                            random_tensor({f}, rng)};
                     const auto seed = rng();
                     return check_gradients(in, {}, [&](Graph&, const std::vector<Var>& v) {
                       return project(add_channel_bias(conv2d(v[0], v[1], stride, pad), v[2]), seed);
                     });
                   }});
  for (bool training : {true, false}) {
    cases.push_back({training ? "batch_norm training" : "batch_norm inference", [=](std::mt19937_64& rng) {
                       ParameterStore store;
                       auto& rm = store.add("rm", random_tensor({2}, rng), true);
                       auto& rv = store.add("rv", random_tensor({2}, rng, 0.5, 2.0), true);
                       std::vector<Tensor> in{random_tensor({2, 2, 3, 3}, rng, -2, 2), random_tensor({2}, rng),
                                              random_tensor({2}, rng)};
                       const auto seed = rng();
                       return check_gradients(in, {}, [&](Graph&, const std::vector<Var>& v) {
                         return project(batch_norm(v[0], v[1], v[2], {&rm, &rv, 0.1}, training), seed);
                       });
                     }});
  }
  cases.push_back({"mse_loss", [=](std::mt19937_64& rng) {
                     const Shape s{dims(rng, 1, 4), 3};
                     std::vector<Tensor> in{random_tensor(s, rng), random_tensor(s, rng)};
                     return check_gradients(in, {}, [&](Graph&, const std::vector<Var>& v) {
                       return mse_loss(v[0], v[1]);
                     });
                   }});
  cases.push_back({"softmax_cross_entropy", [=](std::mt19937_64& rng) {
                     const std::size_t n = dims(rng, 1, 4), k = dims(rng, 2, 6);
                     std::vector<int> t(n);
                     for (auto& x : t) x = static_cast<int>(rng() % k);
                     t[0] = -1;
                     std::vector<Tensor> in{random_tensor({n, k}, rng, -3, 3)};
                     return check_gradients(in, {}, [&](Graph&, const std::vector<Var>& v) {
                       return softmax_cross_entropy(v[0], t);
                     });
                   }});
  for (int variant = 0; variant < 3; ++variant) {
    static const char* names[] = {"attention self", "attention causal", "attention cross"};
    cases.push_back({names[variant], [=](std::mt19937_64& rng) {
                       ParameterStore store;
                       const std::size_t heads = dims(rng, 1, 2);
                       MultiHeadAttention mha(store, "mha", 4, heads, rng);
                       const std::size_t n = dims(rng, 1, 4), m = dims(rng, 1, 4);
                       std::vector<Tensor> in{random_tensor({n, 4}, rng), random_tensor({m, 4}, rng)};
                       const auto seed = rng();
                       return check_gradients(in, all_params(store), [&](Graph& g, const std::vector<Var>& v) {
                         Var mem = variant == 2 ? v[1] : v[0];
                         return project(mha(g, v[0], mem, variant == 1), seed);
                       });
                     }});
  }
  cases.push_back({"transformer block", [=](std::mt19937_64& rng) {
                     ParameterStore store;
                     TransformerBlock block(store, "blk", 4, 2, 6, rng, true, true);
                     std::vector<Tensor> in{random_tensor({3, 4}, rng), random_tensor({2, 4}, rng)};
                     const auto seed = rng();
                     return check_gradients(in, all_params(store), [&](Graph& g, const std::vector<Var>& v) {
                       return project(block(g, v[0], v[1]), seed);
                     });
                   }});
  return cases;
}

}  // namespace sae::testing
