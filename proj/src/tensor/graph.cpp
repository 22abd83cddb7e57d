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

#include "tensor/graph.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <numbers>

#include "common/error.hpp"

namespace sae::ad {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatMap = Eigen::Map<RowMat>;
using ConstMatMap = Eigen::Map<const RowMat>;

// ---------------------------------------------------------------------------
// Graph

Var Graph::constant(Tensor value) {
  Node n;
  n.value = std::move(value);
  nodes_.push_back(std::move(n));
  return Var(this, static_cast<std::uint32_t>(nodes_.size() - 1));
}

Var Graph::input(Tensor value, bool requires_grad) {
  Node n;
  n.value = std::move(value);
  n.needs_grad = grad_enabled_ && requires_grad;
  nodes_.push_back(std::move(n));
  return Var(this, static_cast<std::uint32_t>(nodes_.size() - 1));
}

Var Graph::param(Parameter& p) {
  if (auto it = param_nodes_.find(&p); it != param_nodes_.end()) return Var(this, it->second);
  Node n;
  n.value = p.value;
  n.param = &p;
  n.needs_grad = grad_enabled_ && p.trainable;
  nodes_.push_back(std::move(n));
  const auto id = static_cast<std::uint32_t>(nodes_.size() - 1);
  param_nodes_.emplace(&p, id);
  return Var(this, id);
}

Var Graph::record(Tensor value, std::vector<Var> parents, BackwardFn fn) {
  Node n;
  n.value = std::move(value);
  if (grad_enabled_) {
    for (const auto& p : parents) {
      if (nodes_[p.id()].needs_grad) {
        n.needs_grad = true;
        break;
      }
    }
    if (n.needs_grad) {
      n.parents.reserve(parents.size());
      for (const auto& p : parents) n.parents.push_back(p.id());
      n.backward = std::move(fn);
    }
  }
  nodes_.push_back(std::move(n));
  return Var(this, static_cast<std::uint32_t>(nodes_.size() - 1));
}

Tensor* Graph::grad_slot(Var v) {
  Node& n = nodes_[v.id()];
  if (!n.needs_grad) return nullptr;
  if (n.param != nullptr) {
    if (n.param->grad.shape() != n.param->value.shape()) n.param->zero_grad();
    return &n.param->grad;
  }
  if (n.grad.empty()) n.grad = Tensor(n.value.shape());
  return &n.grad;
}

const Tensor& Graph::grad(Var v) const {
  const Node& n = nodes_[v.id()];
  if (n.param != nullptr) return n.param->grad;
  require(!n.grad.empty(), ErrorKind::Usage, "node has no gradient");
  return n.grad;
}

void Graph::backward(Var loss) {
  require(grad_enabled_, ErrorKind::Usage, "backward on a graph built without gradients");
  require(!backward_done_, ErrorKind::Usage, "backward may only run once per graph");
  require(value(loss).size() == 1, ErrorKind::Usage,
          "backward root must be scalar, got shape " + shape_str(value(loss).shape()));
  backward_done_ = true;
  Tensor* seed = grad_slot(loss);
  if (seed == nullptr) return;
  (*seed)[0] += 1.0;
  for (std::int64_t id = loss.id(); id >= 0; --id) {
    Node& n = nodes_[static_cast<std::size_t>(id)];
    if (!n.backward || n.grad.empty()) continue;
    n.backward(*this, n.grad);
  }
}

// ---------------------------------------------------------------------------
// helpers

namespace {

void accumulate(Tensor* slot, const Tensor& g) {
  if (slot == nullptr) return;
  auto dst = slot->data();
  auto src = g.data();
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
}

void check_same(const Var& a, const Var& b, const char* op) {
  require(a.shape() == b.shape(), ErrorKind::Dimension,
          std::string(op) + ": shape mismatch " + shape_str(a.shape()) + " vs " +
              shape_str(b.shape()));
}

void check_rank2(const Var& a, const char* op) {
  require(a.value().rank() == 2, ErrorKind::Dimension,
          std::string(op) + ": expected a matrix, got " + shape_str(a.shape()));
}

Graph& graph_of(std::initializer_list<Var> vs) {
  Graph* g = nullptr;
  for (const auto& v : vs) {
    require(v.valid(), ErrorKind::Usage, "operation on an unbound variable");
    if (g == nullptr) g = &v.graph();
    require(g == &v.graph(), ErrorKind::Usage, "operands belong to different graphs");
  }
  return *g;
}

template <typename F>
Tensor map_unary(const Tensor& a, F f) {
  Tensor out(a.shape());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = f(a[i]);
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// elementwise and structural

Var add(Var a, Var b) {
  Graph& g = graph_of({a, b});
  check_same(a, b, "add");
  Tensor out = a.value();
  auto od = out.data();
  auto bd = b.value().data();
  for (std::size_t i = 0; i < od.size(); ++i) od[i] += bd[i];
  return g.record(std::move(out), {a, b}, [a, b](Graph& gr, const Tensor& go) {
    accumulate(gr.grad_slot(a), go);
    accumulate(gr.grad_slot(b), go);
  });
}

Var sub(Var a, Var b) {
  Graph& g = graph_of({a, b});
  check_same(a, b, "sub");
  Tensor out = a.value();
  auto od = out.data();
  auto bd = b.value().data();
  for (std::size_t i = 0; i < od.size(); ++i) od[i] -= bd[i];
  return g.record(std::move(out), {a, b}, [a, b](Graph& gr, const Tensor& go) {
    accumulate(gr.grad_slot(a), go);
    if (Tensor* gb = gr.grad_slot(b)) {
      for (std::size_t i = 0; i < go.size(); ++i) (*gb)[i] -= go[i];
    }
  });
}

Var mul(Var a, Var b) {
  Graph& g = graph_of({a, b});
  check_same(a, b, "mul");
  Tensor out = a.value();
  auto od = out.data();
  auto bd = b.value().data();
  for (std::size_t i = 0; i < od.size(); ++i) od[i] *= bd[i];
  return g.record(std::move(out), {a, b}, [a, b](Graph& gr, const Tensor& go) {
    const Tensor& av = gr.value(a);
    const Tensor& bv = gr.value(b);
    if (Tensor* ga = gr.grad_slot(a)) {
      for (std::size_t i = 0; i < go.size(); ++i) (*ga)[i] += go[i] * bv[i];
    }
    if (Tensor* gb = gr.grad_slot(b)) {
      for (std::size_t i = 0; i < go.size(); ++i) (*gb)[i] += go[i] * av[i];
    }
  });
}

Var scale(Var a, double s) {
  Graph& g = graph_of({a});
  Tensor out = map_unary(a.value(), [s](double x) { return x * s; });
  return g.record(std::move(out), {a}, [a, s](Graph& gr, const Tensor& go) {
    if (Tensor* ga = gr.grad_slot(a)) {
      for (std::size_t i = 0; i < go.size(); ++i) (*ga)[i] += go[i] * s;
    }
  });
}

Var add_row(Var a, Var b) {
  Graph& g = graph_of({a, b});
  check_rank2(a, "add_row");
  const std::size_t rows = a.dim(0), cols = a.dim(1);
  require(b.value().size() == cols, ErrorKind::Dimension,
          "add_row: bias of size " + std::to_string(b.value().size()) + " for " +
              std::to_string(cols) + " columns");
  Tensor out = a.value();
  const Tensor& bv = b.value();
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) out.at(r, c) += bv[c];
  }
  return g.record(std::move(out), {a, b}, [a, b, rows, cols](Graph& gr, const Tensor& go) {
    accumulate(gr.grad_slot(a), go);
    if (Tensor* gb = gr.grad_slot(b)) {
      for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < cols; ++c) (*gb)[c] += go.at(r, c);
      }
    }
  });
}

Var reshape(Var a, Shape shape) {
  Graph& g = graph_of({a});
  Tensor out = a.value().reshaped(std::move(shape));
  return g.record(std::move(out), {a}, [a](Graph& gr, const Tensor& go) {
    if (Tensor* ga = gr.grad_slot(a)) {
      for (std::size_t i = 0; i < go.size(); ++i) (*ga)[i] += go[i];
    }
  });
}

Var transpose(Var a) {
  Graph& g = graph_of({a});
  check_rank2(a, "transpose");
  const std::size_t rows = a.dim(0), cols = a.dim(1);
  Tensor out({cols, rows});
  MatMap(out.ptr(), cols, rows) = ConstMatMap(a.value().ptr(), rows, cols).transpose();
  return g.record(std::move(out), {a}, [a, rows, cols](Graph& gr, const Tensor& go) {
    if (Tensor* ga = gr.grad_slot(a)) {
      MatMap(ga->ptr(), rows, cols) += ConstMatMap(go.ptr(), cols, rows).transpose();
    }
  });
}

Var slice_cols(Var a, std::size_t start, std::size_t len) {
  Graph& g = graph_of({a});
  check_rank2(a, "slice_cols");
  const std::size_t rows = a.dim(0), cols = a.dim(1);
  require(len > 0 && start + len <= cols, ErrorKind::Dimension, "slice_cols: range out of bounds");
  Tensor out({rows, len});
  for (std::size_t r = 0; r < rows; ++r) {
    std::copy_n(a.value().ptr() + r * cols + start, len, out.ptr() + r * len);
  }
  return g.record(std::move(out), {a}, [a, rows, cols, start, len](Graph& gr, const Tensor& go) {
    if (Tensor* ga = gr.grad_slot(a)) {
      for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < len; ++c) (*ga)[r * cols + start + c] += go[r * len + c];
      }
    }
  });
}

Var concat_cols(const std::vector<Var>& parts) {
  require(!parts.empty(), ErrorKind::Dimension, "concat_cols: no inputs");
  Graph& g = parts.front().graph();
  const std::size_t rows = parts.front().dim(0);
  std::size_t cols = 0;
  for (const auto& p : parts) {
    check_rank2(p, "concat_cols");
    require(p.dim(0) == rows, ErrorKind::Dimension, "concat_cols: row count mismatch");
    cols += p.dim(1);
  }
  Tensor out({rows, cols});
  std::size_t offset = 0;
  for (const auto& p : parts) {
    const std::size_t w = p.dim(1);
    for (std::size_t r = 0; r < rows; ++r) {
      std::copy_n(p.value().ptr() + r * w, w, out.ptr() + r * cols + offset);
    }
    offset += w;
  }
  return g.record(std::move(out), parts, [parts, rows, cols](Graph& gr, const Tensor& go) {
    std::size_t off = 0;
    for (const auto& p : parts) {
      const std::size_t w = gr.value(p).dim(1);
      if (Tensor* gp = gr.grad_slot(p)) {
        for (std::size_t r = 0; r < rows; ++r) {
          for (std::size_t c = 0; c < w; ++c) (*gp)[r * w + c] += go[r * cols + off + c];
        }
      }
      off += w;
    }
  });
}

Var slice_rows(Var a, std::size_t start, std::size_t len) {
  Graph& g = graph_of({a});
  const Shape& s = a.shape();
  require(len > 0 && start + len <= s[0], ErrorKind::Dimension, "slice_rows: range out of bounds");
  const std::size_t row = a.value().size() / s[0];
  Shape os = s;
  os[0] = len;
  Tensor out(os);
  std::copy_n(a.value().ptr() + start * row, len * row, out.ptr());
  return g.record(std::move(out), {a}, [a, start, row](Graph& gr, const Tensor& go) {
    if (Tensor* ga = gr.grad_slot(a)) {
      for (std::size_t i = 0; i < go.size(); ++i) (*ga)[start * row + i] += go[i];
    }
  });
}

Var concat_rows(const std::vector<Var>& parts) {
  require(!parts.empty(), ErrorKind::Dimension, "concat_rows: no inputs");
  Graph& g = parts.front().graph();
  Shape tail(parts.front().shape().begin() + 1, parts.front().shape().end());
  std::size_t rows = 0;
  for (const auto& p : parts) {
    Shape t(p.shape().begin() + 1, p.shape().end());
    require(t == tail, ErrorKind::Dimension, "concat_rows: trailing shape mismatch");
    rows += p.dim(0);
  }
  Shape os = parts.front().shape();
  os[0] = rows;
  Tensor out(os);
  std::size_t offset = 0;
  for (const auto& p : parts) {
    std::copy_n(p.value().ptr(), p.value().size(), out.ptr() + offset);
    offset += p.value().size();
  }
  return g.record(std::move(out), parts, [parts](Graph& gr, const Tensor& go) {
    std::size_t off = 0;
    for (const auto& p : parts) {
      const std::size_t n = gr.value(p).size();
      if (Tensor* gp = gr.grad_slot(p)) {
        for (std::size_t i = 0; i < n; ++i) (*gp)[i] += go[off + i];
      }
      off += n;
    }
  });
}

Var take(Var a, std::size_t index) {
  Graph& g = graph_of({a});
  const Shape& s = a.shape();
  require(index < s[0], ErrorKind::Dimension, "take: index out of range");
  Shape os = s.size() > 1 ? Shape(s.begin() + 1, s.end()) : Shape{1};
  const std::size_t n = shape_size(os);
  Tensor out(os);
  std::copy_n(a.value().ptr() + index * n, n, out.ptr());
  return g.record(std::move(out), {a}, [a, index, n](Graph& gr, const Tensor& go) {
    if (Tensor* ga = gr.grad_slot(a)) {
      for (std::size_t i = 0; i < n; ++i) (*ga)[index * n + i] += go[i];
    }
  });
}

Var stack(const std::vector<Var>& parts) {
  require(!parts.empty(), ErrorKind::Dimension, "stack: no inputs");
  Graph& g = parts.front().graph();
  const Shape inner = parts.front().shape();
  for (const auto& p : parts) {
    require(p.shape() == inner, ErrorKind::Dimension, "stack: shape mismatch");
  }
  Shape os{parts.size()};
  os.insert(os.end(), inner.begin(), inner.end());
  const std::size_t n = shape_size(inner);
  Tensor out(os);
  for (std::size_t i = 0; i < parts.size(); ++i) {
    std::copy_n(parts[i].value().ptr(), n, out.ptr() + i * n);
  }
  return g.record(std::move(out), parts, [parts, n](Graph& gr, const Tensor& go) {
    for (std::size_t i = 0; i < parts.size(); ++i) {
      if (Tensor* gp = gr.grad_slot(parts[i])) {
        for (std::size_t j = 0; j < n; ++j) (*gp)[j] += go[i * n + j];
      }
    }
  });
}

Var sum(Var a) {
  Graph& g = graph_of({a});
  double s = 0.0;
  for (double v : a.value().data()) s += v;
  return g.record(Tensor::scalar(s), {a}, [a](Graph& gr, const Tensor& go) {
    if (Tensor* ga = gr.grad_slot(a)) {
      for (auto& v : ga->data()) v += go[0];
    }
  });
}

Var mean(Var a) {
  return scale(sum(a), 1.0 / static_cast<double>(a.value().size()));
}

// ---------------------------------------------------------------------------
// dense algebra

Var matmul(Var a, Var b) {
  Graph& g = graph_of({a, b});
  check_rank2(a, "matmul");
  check_rank2(b, "matmul");
  const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
  require(b.dim(0) == k, ErrorKind::Dimension,
          "matmul: inner extents differ, " + shape_str(a.shape()) + " x " + shape_str(b.shape()));
  Tensor out({m, n});
  MatMap(out.ptr(), m, n).noalias() =
      ConstMatMap(a.value().ptr(), m, k) * ConstMatMap(b.value().ptr(), k, n);
  return g.record(std::move(out), {a, b}, [a, b, m, k, n](Graph& gr, const Tensor& go) {
    ConstMatMap gom(go.ptr(), m, n);
    if (Tensor* ga = gr.grad_slot(a)) {
      MatMap(ga->ptr(), m, k).noalias() += gom * ConstMatMap(gr.value(b).ptr(), k, n).transpose();
    }
    if (Tensor* gb = gr.grad_slot(b)) {
      MatMap(gb->ptr(), k, n).noalias() += ConstMatMap(gr.value(a).ptr(), m, k).transpose() * gom;
    }
  });
}

Var linear(Var x, Var weight, Var bias) { return add_row(matmul(x, weight), bias); }

// ---------------------------------------------------------------------------
// activations and normalisation

Var relu(Var a) {
  Graph& g = graph_of({a});
  Tensor out = map_unary(a.value(), [](double x) { return x > 0.0 ? x : 0.0; });
  return g.record(std::move(out), {a}, [a](Graph& gr, const Tensor& go) {
    if (Tensor* ga = gr.grad_slot(a)) {
      const Tensor& av = gr.value(a);
      for (std::size_t i = 0; i < go.size(); ++i) {
        if (av[i] > 0.0) (*ga)[i] += go[i];
      }
    }
  });
}

Var gelu(Var a) {
  Graph& g = graph_of({a});
  constexpr double inv_sqrt2 = 0.70710678118654752440;
  Tensor out = map_unary(a.value(), [](double x) { return 0.5 * x * (1.0 + std::erf(x * inv_sqrt2)); });
  return g.record(std::move(out), {a}, [a](Graph& gr, const Tensor& go) {
    if (Tensor* ga = gr.grad_slot(a)) {
      const Tensor& av = gr.value(a);
      const double inv_sqrt_2pi = 0.5 * std::numbers::inv_sqrtpi * std::numbers::sqrt2;
      for (std::size_t i = 0; i < go.size(); ++i) {
        const double x = av[i];
        const double cdf = 0.5 * (1.0 + std::erf(x * inv_sqrt2));
        const double pdf = inv_sqrt_2pi * std::exp(-0.5 * x * x);
        (*ga)[i] += go[i] * (cdf + x * pdf);
      }
    }
  });
}

Var softmax_rows(Var a, bool causal) {
  Graph& g = graph_of({a});
  check_rank2(a, "softmax_rows");
  const std::size_t rows = a.dim(0), cols = a.dim(1);
  Tensor out({rows, cols});
  const Tensor& av = a.value();
  for (std::size_t r = 0; r < rows; ++r) {
    const std::size_t limit = causal ? std::min(cols, r + 1) : cols;
    double mx = av.at(r, 0);
    for (std::size_t c = 1; c < limit; ++c) mx = std::max(mx, av.at(r, c));
    double z = 0.0;
    for (std::size_t c = 0; c < limit; ++c) {
      const double e = std::exp(av.at(r, c) - mx);
      out.at(r, c) = e;
      z += e;
    }
    for (std::size_t c = 0; c < limit; ++c) out.at(r, c) /= z;
  }
  const std::uint32_t self = static_cast<std::uint32_t>(g.node_count());
  return g.record(std::move(out), {a}, [a, rows, cols, self](Graph& gr, const Tensor& go) {
    if (Tensor* ga = gr.grad_slot(a)) {
      const Tensor& y = gr.value(self);
      for (std::size_t r = 0; r < rows; ++r) {
        double dot = 0.0;
        for (std::size_t c = 0; c < cols; ++c) dot += go.at(r, c) * y.at(r, c);
        for (std::size_t c = 0; c < cols; ++c) ga->at(r, c) += y.at(r, c) * (go.at(r, c) - dot);
      }
    }
  });
}

Var layer_norm(Var x, Var gamma, Var beta, double eps) {
  Graph& g = graph_of({x, gamma, beta});
  check_rank2(x, "layer_norm");
  const std::size_t rows = x.dim(0), d = x.dim(1);
  require(gamma.value().size() == d && beta.value().size() == d, ErrorKind::Dimension,
          "layer_norm: affine parameters must have " + std::to_string(d) + " entries");
  const Tensor& xv = x.value();
  const Tensor& gv = gamma.value();
  const Tensor& bv = beta.value();
  Tensor out({rows, d});
  Tensor xhat({rows, d});
  std::vector<double> inv_std(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    double mu = 0.0;
    for (std::size_t c = 0; c < d; ++c) mu += xv.at(r, c);
    mu /= static_cast<double>(d);
    double var = 0.0;
    for (std::size_t c = 0; c < d; ++c) {
      const double t = xv.at(r, c) - mu;
      var += t * t;
    }
    var /= static_cast<double>(d);
    inv_std[r] = 1.0 / std::sqrt(var + eps);
    for (std::size_t c = 0; c < d; ++c) {
      xhat.at(r, c) = (xv.at(r, c) - mu) * inv_std[r];
      out.at(r, c) = xhat.at(r, c) * gv[c] + bv[c];
    }
  }
  return g.record(std::move(out), {x, gamma, beta},
                  [x, gamma, beta, rows, d, xhat = std::move(xhat), inv_std = std::move(inv_std)](
                      Graph& gr, const Tensor& go) {
                    const Tensor& gv = gr.value(gamma);
                    if (Tensor* gg = gr.grad_slot(gamma)) {
                      for (std::size_t r = 0; r < rows; ++r)
                        for (std::size_t c = 0; c < d; ++c) (*gg)[c] += go.at(r, c) * xhat.at(r, c);
                    }
                    if (Tensor* gb = gr.grad_slot(beta)) {
                      for (std::size_t r = 0; r < rows; ++r)
                        for (std::size_t c = 0; c < d; ++c) (*gb)[c] += go.at(r, c);
                    }
                    if (Tensor* gx = gr.grad_slot(x)) {
                      const double inv_d = 1.0 / static_cast<double>(d);
                      for (std::size_t r = 0; r < rows; ++r) {
                        double m1 = 0.0, m2 = 0.0;
                        for (std::size_t c = 0; c < d; ++c) {
                          const double dxh = go.at(r, c) * gv[c];
                          m1 += dxh;
                          m2 += dxh * xhat.at(r, c);
                        }
                        m1 *= inv_d;
                        m2 *= inv_d;
                        for (std::size_t c = 0; c < d; ++c) {
                          const double dxh = go.at(r, c) * gv[c];
                          gx->at(r, c) += inv_std[r] * (dxh - m1 - xhat.at(r, c) * m2);
                        }
                      }
                    }
                  });
}

// ---------------------------------------------------------------------------
// convolution

namespace {

struct ConvGeom {
  std::size_t n, c, h, w, f, kh, kw, stride, pad, oh, ow;
};

// Column matrix rows are `ld` apart so several images can sit side by side.
void im2col(const double* img, const ConvGeom& s, double* cols, std::size_t ld) {
  for (std::size_t ch = 0; ch < s.c; ++ch) {
    for (std::size_t ky = 0; ky < s.kh; ++ky) {
      for (std::size_t kx = 0; kx < s.kw; ++kx) {
        double* row = cols + ((ch * s.kh + ky) * s.kw + kx) * ld;
        for (std::size_t oy = 0; oy < s.oh; ++oy) {
          const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(oy * s.stride + ky) -
                                    static_cast<std::ptrdiff_t>(s.pad);
          for (std::size_t ox = 0; ox < s.ow; ++ox) {
            const std::ptrdiff_t ix = static_cast<std::ptrdiff_t>(ox * s.stride + kx) -
                                      static_cast<std::ptrdiff_t>(s.pad);
            const bool inside = iy >= 0 && ix >= 0 && iy < static_cast<std::ptrdiff_t>(s.h) &&
                                ix < static_cast<std::ptrdiff_t>(s.w);
            row[oy * s.ow + ox] = inside ? img[(ch * s.h + iy) * s.w + ix] : 0.0;
          }
        }
      }
    }
  }
}

void col2im_add(const double* cols, const ConvGeom& s, double* img, std::size_t ld) {
  for (std::size_t ch = 0; ch < s.c; ++ch) {
    for (std::size_t ky = 0; ky < s.kh; ++ky) {
      for (std::size_t kx = 0; kx < s.kw; ++kx) {
        const double* row = cols + ((ch * s.kh + ky) * s.kw + kx) * ld;
        for (std::size_t oy = 0; oy < s.oh; ++oy) {
          const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(oy * s.stride + ky) -
                                    static_cast<std::ptrdiff_t>(s.pad);
          if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(s.h)) continue;
          for (std::size_t ox = 0; ox < s.ow; ++ox) {
            const std::ptrdiff_t ix = static_cast<std::ptrdiff_t>(ox * s.stride + kx) -
                                      static_cast<std::ptrdiff_t>(s.pad);
            if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(s.w)) continue;
            img[(ch * s.h + iy) * s.w + ix] += row[oy * s.ow + ox];
          }
        }
      }
    }
  }
}

// Splits [C,H,W] / [N,C,H,W] into (n, c, h, w).
void image_dims(const Shape& s, const char* op, std::size_t& n, std::size_t& c, std::size_t& h,
                std::size_t& w) {
  if (s.size() == 3) {
    n = 1;
    c = s[0];
    h = s[1];
    w = s[2];
  } else if (s.size() == 4) {
    n = s[0];
    c = s[1];
    h = s[2];
    w = s[3];
  } else {
    fail(ErrorKind::Dimension, std::string(op) + ": expected [C,H,W] or [N,C,H,W], got " + shape_str(s));
  }
}

}  // namespace

Var conv2d(Var input, Var kernels, std::size_t stride, std::size_t padding) {
  Graph& g = graph_of({input, kernels});
  ConvGeom s{};
  image_dims(input.shape(), "conv2d", s.n, s.c, s.h, s.w);
  const Shape& ks = kernels.shape();
  require(ks.size() == 4 && ks[1] == s.c, ErrorKind::Dimension,
          "conv2d: kernels " + shape_str(ks) + " do not match input " + shape_str(input.shape()));
  require(stride > 0, ErrorKind::Dimension, "conv2d: stride must be positive");
  s.f = ks[0];
  s.kh = ks[2];
  s.kw = ks[3];
  s.stride = stride;
  s.pad = padding;
  const std::size_t ph = s.h + 2 * padding, pw = s.w + 2 * padding;
  require(s.kh <= ph && s.kw <= pw, ErrorKind::Dimension,
          "conv2d: kernel larger than padded input, output extent would be non-positive");
  s.oh = (ph - s.kh) / stride + 1;
  s.ow = (pw - s.kw) / stride + 1;

  const std::size_t ckk = s.c * s.kh * s.kw;
  const std::size_t plane = s.oh * s.ow;
  Shape os = input.shape().size() == 3 ? Shape{s.f, s.oh, s.ow} : Shape{s.n, s.f, s.oh, s.ow};
  Tensor out(os);
  // Images are processed in chunks so each GEMM is wide.
  const std::size_t chunk = std::max<std::size_t>(1, 4096 / plane);
  std::vector<double> cols(ckk * plane * std::min(chunk, s.n));
  std::vector<double> prod(s.f * plane * std::min(chunk, s.n));
  ConstMatMap kmat(kernels.value().ptr(), s.f, ckk);
  for (std::size_t i0 = 0; i0 < s.n; i0 += chunk) {
    const std::size_t k = std::min(chunk, s.n - i0), ld = k * plane;
    for (std::size_t j = 0; j < k; ++j)
      im2col(input.value().ptr() + (i0 + j) * s.c * s.h * s.w, s, cols.data() + j * plane, ld);
    MatMap(prod.data(), s.f, ld).noalias() = kmat * ConstMatMap(cols.data(), ckk, ld);
    for (std::size_t j = 0; j < k; ++j)
      for (std::size_t f = 0; f < s.f; ++f)
        std::copy_n(prod.data() + f * ld + j * plane, plane, out.ptr() + ((i0 + j) * s.f + f) * plane);
  }
  return g.record(std::move(out), {input, kernels}, [input, kernels, s, chunk](Graph& gr, const Tensor& go) {
    Tensor* gi = gr.grad_slot(input);
    Tensor* gk = gr.grad_slot(kernels);
    const std::size_t ckk = s.c * s.kh * s.kw;
    const std::size_t plane = s.oh * s.ow;
    std::vector<double> cols(ckk * plane * std::min(chunk, s.n));
    std::vector<double> gchunk(s.f * plane * std::min(chunk, s.n));
    ConstMatMap kmat(gr.value(kernels).ptr(), s.f, ckk);
    for (std::size_t i0 = 0; i0 < s.n; i0 += chunk) {
      const std::size_t k = std::min(chunk, s.n - i0), ld = k * plane;
      for (std::size_t j = 0; j < k; ++j)
        for (std::size_t f = 0; f < s.f; ++f)
          std::copy_n(go.ptr() + ((i0 + j) * s.f + f) * plane, plane, gchunk.data() + f * ld + j * plane);
      ConstMatMap gom(gchunk.data(), s.f, ld);
      if (gk != nullptr) {
        for (std::size_t j = 0; j < k; ++j)
          im2col(gr.value(input).ptr() + (i0 + j) * s.c * s.h * s.w, s, cols.data() + j * plane, ld);
        MatMap(gk->ptr(), s.f, ckk).noalias() += gom * ConstMatMap(cols.data(), ckk, ld).transpose();
      }
      if (gi != nullptr) {
        MatMap(cols.data(), ckk, ld).noalias() = kmat.transpose() * gom;
        for (std::size_t j = 0; j < k; ++j)
          col2im_add(cols.data() + j * plane, s, gi->ptr() + (i0 + j) * s.c * s.h * s.w, ld);
      }
    }
  });
}

Var add_channel_bias(Var input, Var bias) {
  Graph& g = graph_of({input, bias});
  std::size_t n, c, h, w;
  image_dims(input.shape(), "add_channel_bias", n, c, h, w);
  require(bias.value().size() == c, ErrorKind::Dimension, "add_channel_bias: bias size mismatch");
  Tensor out = input.value();
  const std::size_t plane = h * w;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t ch = 0; ch < c; ++ch) {
      double* p = out.ptr() + (i * c + ch) * plane;
      const double b = bias.value()[ch];
      for (std::size_t k = 0; k < plane; ++k) p[k] += b;
    }
  return g.record(std::move(out), {input, bias}, [input, bias, n, c, plane](Graph& gr, const Tensor& go) {
    accumulate(gr.grad_slot(input), go);
    if (Tensor* gb = gr.grad_slot(bias)) {
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t ch = 0; ch < c; ++ch) {
          const double* p = go.ptr() + (i * c + ch) * plane;
          double s = 0.0;
          for (std::size_t k = 0; k < plane; ++k) s += p[k];
          (*gb)[ch] += s;
        }
    }
  });
}

Var batch_norm(Var input, Var gamma, Var beta, BatchNormBuffers buffers, bool training, double eps) {
  Graph& g = graph_of({input, gamma, beta});
  std::size_t n, c, h, w;
  image_dims(input.shape(), "batch_norm", n, c, h, w);
  require(gamma.value().size() == c && beta.value().size() == c, ErrorKind::Dimension,
          "batch_norm: affine parameters must have one entry per channel");
  const std::size_t plane = h * w;
  const std::size_t count = n * plane;
  const Tensor& xv = input.value();
  std::vector<double> mu(c), inv_std(c);
  if (training) {
    for (std::size_t ch = 0; ch < c; ++ch) {
      double s = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        const double* p = xv.ptr() + (i * c + ch) * plane;
        for (std::size_t k = 0; k < plane; ++k) s += p[k];
      }
      mu[ch] = s / static_cast<double>(count);
      double v = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        const double* p = xv.ptr() + (i * c + ch) * plane;
        for (std::size_t k = 0; k < plane; ++k) v += (p[k] - mu[ch]) * (p[k] - mu[ch]);
      }
      const double var = v / static_cast<double>(count);
      inv_std[ch] = 1.0 / std::sqrt(var + eps);
      if (buffers.running_mean != nullptr && buffers.running_var != nullptr) {
        const double unbiased = count > 1 ? v / static_cast<double>(count - 1) : var;
        double& rm = buffers.running_mean->value[ch];
        double& rv = buffers.running_var->value[ch];
        rm = (1.0 - buffers.momentum) * rm + buffers.momentum * mu[ch];
        rv = (1.0 - buffers.momentum) * rv + buffers.momentum * unbiased;
      }
    }
  } else {
    require(buffers.running_mean != nullptr && buffers.running_var != nullptr, ErrorKind::Usage,
            "batch_norm: inference mode needs running statistics");
    for (std::size_t ch = 0; ch < c; ++ch) {
      mu[ch] = buffers.running_mean->value[ch];
      inv_std[ch] = 1.0 / std::sqrt(buffers.running_var->value[ch] + eps);
    }
  }
  Tensor xhat(input.shape());
  Tensor out(input.shape());
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t ch = 0; ch < c; ++ch) {
      const std::size_t off = (i * c + ch) * plane;
      const double gm = gamma.value()[ch], bt = beta.value()[ch];
      for (std::size_t k = 0; k < plane; ++k) {
        xhat[off + k] = (xv[off + k] - mu[ch]) * inv_std[ch];
        out[off + k] = xhat[off + k] * gm + bt;
      }
    }
  return g.record(
      std::move(out), {input, gamma, beta},
      [input, gamma, beta, n, c, plane, count, training, xhat = std::move(xhat),
       inv_std = std::move(inv_std)](Graph& gr, const Tensor& go) {
        std::vector<double> sum_g(c, 0.0), sum_gx(c, 0.0);
        for (std::size_t i = 0; i < n; ++i)
          for (std::size_t ch = 0; ch < c; ++ch) {
            const std::size_t off = (i * c + ch) * plane;
            for (std::size_t k = 0; k < plane; ++k) {
              sum_g[ch] += go[off + k];
              sum_gx[ch] += go[off + k] * xhat[off + k];
            }
          }
        if (Tensor* gg = gr.grad_slot(gamma)) {
          for (std::size_t ch = 0; ch < c; ++ch) (*gg)[ch] += sum_gx[ch];
        }
        if (Tensor* gb = gr.grad_slot(beta)) {
          for (std::size_t ch = 0; ch < c; ++ch) (*gb)[ch] += sum_g[ch];
        }
        if (Tensor* gi = gr.grad_slot(input)) {
          const Tensor& gv = gr.value(gamma);
          const double inv_n = 1.0 / static_cast<double>(count);
          for (std::size_t i = 0; i < n; ++i)
            for (std::size_t ch = 0; ch < c; ++ch) {
              const std::size_t off = (i * c + ch) * plane;
              const double scale_c = gv[ch] * inv_std[ch];
              for (std::size_t k = 0; k < plane; ++k) {
                if (training) {
                  (*gi)[off + k] += scale_c * (go[off + k] - sum_g[ch] * inv_n -
                                               xhat[off + k] * sum_gx[ch] * inv_n);
                } else {
                  (*gi)[off + k] += scale_c * go[off + k];
                }
              }
            }
        }
      });
}

// ---------------------------------------------------------------------------
// losses

Var mse_loss(Var pred, Var target) {
  Graph& g = graph_of({pred, target});
  check_same(pred, target, "mse_loss");
  const Tensor& p = pred.value();
  const Tensor& t = target.value();
  double s = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double d = p[i] - t[i];
    s += d * d;
  }
  const double inv_n = 1.0 / static_cast<double>(p.size());
  return g.record(Tensor::scalar(s * inv_n), {pred, target}, [pred, target, inv_n](Graph& gr, const Tensor& go) {
    const Tensor& p = gr.value(pred);
    const Tensor& t = gr.value(target);
    Tensor* gp = gr.grad_slot(pred);
    Tensor* gt = gr.grad_slot(target);
    for (std::size_t i = 0; i < p.size(); ++i) {
      const double d = 2.0 * (p[i] - t[i]) * inv_n * go[0];
      if (gp) (*gp)[i] += d;
      if (gt) (*gt)[i] -= d;
    }
  });
}

Var softmax_cross_entropy(Var logits, const std::vector<int>& targets) {
  Graph& g = graph_of({logits});
  check_rank2(logits, "softmax_cross_entropy");
  const std::size_t rows = logits.dim(0), k = logits.dim(1);
  require(targets.size() == rows, ErrorKind::Dimension,
          "softmax_cross_entropy: " + std::to_string(targets.size()) + " targets for " +
              std::to_string(rows) + " rows");
  const Tensor& lv = logits.value();
  Tensor probs({rows, k});
  double loss = 0.0;
  for (std::size_t r = 0; r < rows; ++r) {
    const int t = targets[r];
    require(t < static_cast<int>(k), ErrorKind::Data,
            "softmax_cross_entropy: target " + std::to_string(t) + " at step " + std::to_string(r) +
                " outside " + std::to_string(k) + " classes");
    double mx = lv.at(r, 0);
    for (std::size_t c = 1; c < k; ++c) mx = std::max(mx, lv.at(r, c));
    double z = 0.0;
    for (std::size_t c = 0; c < k; ++c) {
      probs.at(r, c) = std::exp(lv.at(r, c) - mx);
      z += probs.at(r, c);
    }
    for (std::size_t c = 0; c < k; ++c) probs.at(r, c) /= z;
    if (t >= 0) loss += -(lv.at(r, static_cast<std::size_t>(t)) - mx - std::log(z));
  }
  return g.record(Tensor::scalar(loss), {logits},
                  [logits, targets, rows, k, probs = std::move(probs)](Graph& gr, const Tensor& go) {
                    if (Tensor* gl = gr.grad_slot(logits)) {
                      for (std::size_t r = 0; r < rows; ++r) {
                        if (targets[r] < 0) continue;
                        for (std::size_t c = 0; c < k; ++c) {
                          const double onehot = static_cast<int>(c) == targets[r] ? 1.0 : 0.0;
                          gl->at(r, c) += go[0] * (probs.at(r, c) - onehot);
                        }
                      }
                    }
                  });
}

}  // namespace sae::ad
