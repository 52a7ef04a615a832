// Copyright 2026 The ATENT Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "atent/autodiff.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <string>
#include <utility>

namespace atent {

namespace {

using RowMatrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatrixView = Eigen::Map<RowMatrix>;
using ConstMatrixView = Eigen::Map<const RowMatrix>;

ConstMatrixView as_matrix(std::span<const double> data, std::size_t rows,
                          std::size_t cols) {
  return ConstMatrixView(data.data(), static_cast<Eigen::Index>(rows),
                         static_cast<Eigen::Index>(cols));
}

MatrixView as_matrix(std::span<double> data, std::size_t rows,
                     std::size_t cols) {
  return MatrixView(data.data(), static_cast<Eigen::Index>(rows),
                    static_cast<Eigen::Index>(cols));
}

Tape& same_tape(Var a, Var b) {
  if (a.tape == nullptr || a.tape != b.tape) {
    throw Error("operands belong to different tapes");
  }
  return *a.tape;
}

}  // namespace

const Tensor& Var::value() const {
  if (tape == nullptr) throw Error("Var is not attached to a tape");
  return tape->value(*this);
}

void Tape::check_owner(Var v) const {
  if (v.tape != this || v.id >= nodes_.size()) {
    throw Error("Var does not belong to this tape");
  }
}

Var Tape::leaf(Tensor value, bool requires_grad) {
  require_finite(value, "leaf");
  Node node;
  node.value = std::move(value);
  node.requires_grad = requires_grad;
  nodes_.push_back(std::move(node));
  return Var{this, nodes_.size() - 1};
}

const Tensor& Tape::value(Var v) const {
  check_owner(v);
  return nodes_[v.id].value;
}

bool Tape::requires_grad(Var v) const {
  check_owner(v);
  return nodes_[v.id].requires_grad;
}

const Tensor& Tape::grad(Var v) const {
  check_owner(v);
  if (!backward_done_) throw Error("grad() requested before backward()");
  return nodes_[v.id].grad;
}

Var Tape::record(Tensor value, std::vector<std::size_t> operands,
                 BackwardFn backward) {
  if (backward_done_) throw Error("tape is closed: backward() already ran");
  Node node;
  node.value = std::move(value);
  for (std::size_t id : operands) {
    if (nodes_[id].requires_grad) node.requires_grad = true;
  }
  if (node.requires_grad) node.backward = std::move(backward);
  nodes_.push_back(std::move(node));
  return Var{this, nodes_.size() - 1};
}

Tensor& Tape::grad_buffer(std::size_t id) {
  Node& node = nodes_[id];
  if (node.grad.empty()) node.grad = Tensor::zeros(node.value.shape());
  return node.grad;
}

void Tape::backward(Var root) {
  check_owner(root);
  if (backward_done_) throw Error("backward() called twice on one tape");
  if (nodes_[root.id].value.size() != 1) {
    throw ShapeError("backward root must be scalar, got " +
                     shape_string(nodes_[root.id].value.shape()));
  }
  backward_done_ = true;
  grad_buffer(root.id)[0] = 1.0;
  for (std::size_t i = root.id + 1; i-- > 0;) {
    Node& node = nodes_[i];
    if (node.grad.empty() || !node.backward) continue;
    node.backward(*this, node.grad);
  }
  // Every node reports a gradient of its own shape, zero if unreached.
  for (Node& node : nodes_) {
    if (node.grad.empty()) node.grad = Tensor::zeros(node.value.shape());
  }
}

// ---------------------------------------------------------------------------
// Primitives.

Var matmul(Var a, Var b) {
  Tape& tape = same_tape(a, b);
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  if (av.rank() != 2 || bv.rank() != 2 || av.dim(1) != bv.dim(0)) {
    throw ShapeError("matmul shape mismatch " + shape_string(av.shape()) +
                     " x " + shape_string(bv.shape()));
  }
  const std::size_t m = av.dim(0), k = av.dim(1), n = bv.dim(1);
  Tensor out({m, n});
  as_matrix(out.data(), m, n).noalias() =
      as_matrix(av.data(), m, k) * as_matrix(bv.data(), k, n);
  require_finite(out, "matmul");
  const std::size_t ia = a.id, ib = b.id;
  return tape.record(
      std::move(out), {ia, ib},
      [ia, ib, m, k, n](Tape& t, const Tensor& g) {
        const Var va{&t, ia}, vb{&t, ib};
        auto gm = as_matrix(g.data(), m, n);
        if (t.requires_grad(va)) {
          as_matrix(t.grad_buffer(ia).data(), m, k).noalias() +=
              gm * as_matrix(t.value(vb).data(), k, n).transpose();
        }
        if (t.requires_grad(vb)) {
          as_matrix(t.grad_buffer(ib).data(), k, n).noalias() +=
              as_matrix(t.value(va).data(), m, k).transpose() * gm;
        }
      });
}

Var add_bias(Var x, Var bias) {
  Tape& tape = same_tape(x, bias);
  const Tensor& xv = x.value();
  const Tensor& bv = bias.value();
  if (bv.rank() != 1 || (xv.rank() != 2 && xv.rank() != 4) ||
      xv.dim(1) != bv.dim(0)) {
    throw ShapeError("add_bias shape mismatch " + shape_string(xv.shape()) +
                     " + " + shape_string(bv.shape()));
  }
  const std::size_t n = xv.dim(0), c = xv.dim(1);
  const std::size_t inner = xv.size() / (n * c);
  Tensor out = xv;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < c; ++j) {
      double* p = out.data().data() + (i * c + j) * inner;
      for (std::size_t s = 0; s < inner; ++s) p[s] += bv[j];
    }
  }
  require_finite(out, "add_bias");
  const std::size_t ix = x.id, ib = bias.id;
  return tape.record(
      std::move(out), {ix, ib},
      [ix, ib, n, c, inner](Tape& t, const Tensor& g) {
        if (t.requires_grad(Var{&t, ix})) {
          Tensor& gx = t.grad_buffer(ix);
          for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i];
        }
        if (t.requires_grad(Var{&t, ib})) {
          Tensor& gb = t.grad_buffer(ib);
          for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < c; ++j) {
              const double* p = g.data().data() + (i * c + j) * inner;
              double s = 0.0;
              for (std::size_t q = 0; q < inner; ++q) s += p[q];
              gb[j] += s;
            }
          }
        }
      });
}

Var relu(Var x) {
  Tape& tape = *x.tape;
  const Tensor& xv = x.value();
  Tensor out = xv;
  for (double& v : out.data()) v = v > 0.0 ? v : 0.0;
  const std::size_t ix = x.id;
  return tape.record(std::move(out), {ix},
                     [ix](Tape& t, const Tensor& g) {
                       const Tensor& in = t.value(Var{&t, ix});
                       Tensor& gx = t.grad_buffer(ix);
                       for (std::size_t i = 0; i < g.size(); ++i) {
                         if (in[i] > 0.0) gx[i] += g[i];
                       }
                     });
}

namespace {

struct ConvGeometry {
  std::size_t n, c_in, h, w, c_out, kh, kw, stride, pad, oh, ow;
  std::size_t patch() const { return c_in * kh * kw; }
  std::size_t positions() const { return oh * ow; }
};

// cols[patch x positions] for sample `s`.
void im2col(const ConvGeometry& g, const double* image, double* cols) {
  for (std::size_t c = 0; c < g.c_in; ++c) {
    for (std::size_t ki = 0; ki < g.kh; ++ki) {
      for (std::size_t kj = 0; kj < g.kw; ++kj) {
        const std::size_t row = (c * g.kh + ki) * g.kw + kj;
        double* dst = cols + row * g.positions();
        for (std::size_t oi = 0; oi < g.oh; ++oi) {
          const long ii = static_cast<long>(oi * g.stride + ki) -
                          static_cast<long>(g.pad);
          for (std::size_t oj = 0; oj < g.ow; ++oj) {
            const long jj = static_cast<long>(oj * g.stride + kj) -
                            static_cast<long>(g.pad);
            const bool inside = ii >= 0 && jj >= 0 &&
                                ii < static_cast<long>(g.h) &&
                                jj < static_cast<long>(g.w);
            dst[oi * g.ow + oj] =
                inside ? image[(c * g.h + ii) * g.w + jj] : 0.0;
          }
        }
      }
    }
  }
}

void col2im_add(const ConvGeometry& g, const double* cols, double* image) {
  for (std::size_t c = 0; c < g.c_in; ++c) {
    for (std::size_t ki = 0; ki < g.kh; ++ki) {
      for (std::size_t kj = 0; kj < g.kw; ++kj) {
        const std::size_t row = (c * g.kh + ki) * g.kw + kj;
        const double* src = cols + row * g.positions();
        for (std::size_t oi = 0; oi < g.oh; ++oi) {
          const long ii = static_cast<long>(oi * g.stride + ki) -
                          static_cast<long>(g.pad);
          if (ii < 0 || ii >= static_cast<long>(g.h)) continue;
          for (std::size_t oj = 0; oj < g.ow; ++oj) {
            const long jj = static_cast<long>(oj * g.stride + kj) -
                            static_cast<long>(g.pad);
            if (jj < 0 || jj >= static_cast<long>(g.w)) continue;
            image[(c * g.h + ii) * g.w + jj] += src[oi * g.ow + oj];
          }
        }
      }
    }
  }
}

}  // namespace

Var conv2d(Var input, Var kernels, Conv2dOptions options) {
  Tape& tape = same_tape(input, kernels);
  const Tensor& xv = input.value();
  const Tensor& kv = kernels.value();
  const bool batched = xv.rank() == 4;
  if ((xv.rank() != 3 && !batched) || kv.rank() != 4) {
    throw ShapeError("conv2d expects [c x h x w] or [n x c x h x w] input and "
                     "[c_out x c_in x kh x kw] kernels");
  }
  if (options.stride == 0) throw ShapeError("conv2d stride must be positive");
  ConvGeometry g{};
  g.n = batched ? xv.dim(0) : 1;
  g.c_in = xv.dim(batched ? 1 : 0);
  g.h = xv.dim(batched ? 2 : 1);
  g.w = xv.dim(batched ? 3 : 2);
  g.c_out = kv.dim(0);
  g.kh = kv.dim(2);
  g.kw = kv.dim(3);
  g.stride = options.stride;
  g.pad = options.padding;
  if (kv.dim(1) != g.c_in) {
    throw ShapeError("conv2d channel mismatch: input " +
                     shape_string(xv.shape()) + ", kernels " +
                     shape_string(kv.shape()));
  }
  if (g.h + 2 * g.pad < g.kh || g.w + 2 * g.pad < g.kw) {
    throw ShapeError("conv2d output would be empty for input " +
                     shape_string(xv.shape()) + " and kernels " +
                     shape_string(kv.shape()));
  }
  g.oh = (g.h + 2 * g.pad - g.kh) / g.stride + 1;
  g.ow = (g.w + 2 * g.pad - g.kw) / g.stride + 1;

  Shape out_shape = batched ? Shape{g.n, g.c_out, g.oh, g.ow}
                            : Shape{g.c_out, g.oh, g.ow};
  Tensor out(out_shape);
  std::vector<double> cols(g.patch() * g.positions());
  const auto kmat = as_matrix(kv.data(), g.c_out, g.patch());
  const std::size_t in_stride = g.c_in * g.h * g.w;
  const std::size_t out_stride = g.c_out * g.positions();
  for (std::size_t s = 0; s < g.n; ++s) {
    im2col(g, xv.data().data() + s * in_stride, cols.data());
    as_matrix(out.data().subspan(s * out_stride, out_stride), g.c_out,
              g.positions())
        .noalias() = kmat * as_matrix(std::span<const double>(cols), g.patch(),
                                      g.positions());
  }
  require_finite(out, "conv2d");
  const std::size_t ix = input.id, ik = kernels.id;
  return tape.record(
      std::move(out), {ix, ik},
      [ix, ik, g, in_stride, out_stride](Tape& t, const Tensor& grad) {
        const Var vx{&t, ix}, vk{&t, ik};
        const bool want_x = t.requires_grad(vx);
        const bool want_k = t.requires_grad(vk);
        std::vector<double> cols(g.patch() * g.positions());
        const auto kmat = as_matrix(t.value(vk).data(), g.c_out, g.patch());
        for (std::size_t s = 0; s < g.n; ++s) {
          const auto gm = as_matrix(grad.data().subspan(s * out_stride,
                                                        out_stride),
                                    g.c_out, g.positions());
          if (want_k) {
            im2col(g, t.value(vx).data().data() + s * in_stride, cols.data());
            as_matrix(t.grad_buffer(ik).data(), g.c_out, g.patch()).noalias() +=
                gm * as_matrix(std::span<const double>(cols), g.patch(),
                               g.positions())
                         .transpose();
          }
          if (want_x) {
            as_matrix(std::span<double>(cols), g.patch(), g.positions())
                .noalias() = kmat.transpose() * gm;
            col2im_add(g, cols.data(),
                       t.grad_buffer(ix).data().data() + s * in_stride);
          }
        }
      });
}

Var max_pool2d(Var x, std::size_t window) {
  Tape& tape = *x.tape;
  const Tensor& xv = x.value();
  if (xv.rank() != 4) throw ShapeError("max_pool2d expects [n x c x h x w]");
  if (window == 0 || xv.dim(2) < window || xv.dim(3) < window) {
    throw ShapeError("max_pool2d window does not fit " +
                     shape_string(xv.shape()));
  }
  const std::size_t n = xv.dim(0), c = xv.dim(1), h = xv.dim(2),
                    w = xv.dim(3);
  const std::size_t oh = h / window, ow = w / window;
  Tensor out({n, c, oh, ow});
  auto argmax = std::make_shared<std::vector<std::size_t>>(out.size());
  for (std::size_t plane = 0; plane < n * c; ++plane) {
    const double* src = xv.data().data() + plane * h * w;
    for (std::size_t oi = 0; oi < oh; ++oi) {
      for (std::size_t oj = 0; oj < ow; ++oj) {
        std::size_t best = (oi * window) * w + oj * window;
        for (std::size_t di = 0; di < window; ++di) {
          for (std::size_t dj = 0; dj < window; ++dj) {
            const std::size_t idx = (oi * window + di) * w + oj * window + dj;
            if (src[idx] > src[best]) best = idx;
          }
        }
        const std::size_t o = (plane * oh + oi) * ow + oj;
        out[o] = src[best];
        (*argmax)[o] = plane * h * w + best;
      }
    }
  }
  const std::size_t ix = x.id;
  return tape.record(std::move(out), {ix},
                     [ix, argmax](Tape& t, const Tensor& g) {
                       Tensor& gx = t.grad_buffer(ix);
                       for (std::size_t o = 0; o < g.size(); ++o) {
                         gx[(*argmax)[o]] += g[o];
                       }
                     });
}

Var reshape(Var x, Shape shape) {
  Tape& tape = *x.tape;
  Tensor out = x.value().reshaped(std::move(shape));
  const std::size_t ix = x.id;
  return tape.record(std::move(out), {ix}, [ix](Tape& t, const Tensor& g) {
    Tensor& gx = t.grad_buffer(ix);
    for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i];
  });
}

Var flatten(Var x) {
  const Tensor& xv = x.value();
  if (xv.rank() < 1) throw ShapeError("flatten of rank-0 tensor");
  return reshape(x, {xv.dim(0), xv.row_size()});
}

Var add(Var a, Var b) {
  Tape& tape = same_tape(a, b);
  if (a.shape() != b.shape()) {
    throw ShapeError("add shape mismatch " + shape_string(a.shape()) + " + " +
                     shape_string(b.shape()));
  }
  Tensor out = a.value();
  const Tensor& bv = b.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += bv[i];
  require_finite(out, "add");
  const std::size_t ia = a.id, ib = b.id;
  return tape.record(std::move(out), {ia, ib},
                     [ia, ib](Tape& t, const Tensor& g) {
                       for (std::size_t id : {ia, ib}) {
                         if (!t.requires_grad(Var{&t, id})) continue;
                         Tensor& gx = t.grad_buffer(id);
                         for (std::size_t i = 0; i < g.size(); ++i) {
                           gx[i] += g[i];
                         }
                       }
                     });
}

Var scale(Var x, double factor) {
  Tape& tape = *x.tape;
  Tensor out = x.value();
  for (double& v : out.data()) v *= factor;
  require_finite(out, "scale");
  const std::size_t ix = x.id;
  return tape.record(std::move(out), {ix},
                     [ix, factor](Tape& t, const Tensor& g) {
                       Tensor& gx = t.grad_buffer(ix);
                       for (std::size_t i = 0; i < g.size(); ++i) {
                         gx[i] += factor * g[i];
                       }
                     });
}

Var sum(Var x) {
  Tape& tape = *x.tape;
  double s = 0.0;
  for (double v : x.value().data()) s += v;
  Tensor out = Tensor::scalar(s);
  require_finite(out, "sum");
  const std::size_t ix = x.id;
  return tape.record(std::move(out), {ix}, [ix](Tape& t, const Tensor& g) {
    Tensor& gx = t.grad_buffer(ix);
    for (double& v : gx.data()) v += g[0];
  });
}

void require_one_hot(const Tensor& labels) {
  if (labels.rank() != 2) throw Error("labels must be [n x m]");
  const std::size_t m = labels.dim(1);
  for (std::size_t i = 0; i < labels.dim(0); ++i) {
    std::size_t ones = 0;
    for (std::size_t j = 0; j < m; ++j) {
      const double v = labels[i * m + j];
      if (v == 1.0) {
        ++ones;
      } else if (v != 0.0) {
        ones = 2;
        break;
      }
    }
    if (ones != 1) {
      throw Error("label row " + std::to_string(i) + " is not one-hot");
    }
  }
}

namespace {

// log-sum-exp of one row with the max shift.
double row_log_normalizer(const double* z, std::size_t m) {
  double mx = -std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < m; ++j) mx = std::max(mx, z[j]);
  double s = 0.0;
  for (std::size_t j = 0; j < m; ++j) s += std::exp(z[j] - mx);
  return mx + std::log(s);
}

void check_logits_labels(const Tensor& logits, const Tensor& labels) {
  if (logits.rank() != 2 || logits.shape() != labels.shape()) {
    throw ShapeError("cross-entropy shape mismatch: logits " +
                     shape_string(logits.shape()) + ", labels " +
                     shape_string(labels.shape()));
  }
  require_one_hot(labels);
}

}  // namespace

std::vector<double> cross_entropy_rows(const Tensor& logits,
                                       const Tensor& labels) {
  check_logits_labels(logits, labels);
  const std::size_t n = logits.dim(0), m = logits.dim(1);
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double* z = logits.data().data() + i * m;
    const double lse = row_log_normalizer(z, m);
    double loss = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
      const double y = labels[i * m + j];
      if (y != 0.0) loss -= y * (z[j] - lse);
    }
    out[i] = loss;
  }
  return out;
}

Var softmax_cross_entropy(Var logits, const Tensor& labels,
                          Reduction reduction) {
  Tape& tape = *logits.tape;
  const Tensor& zv = logits.value();
  const std::vector<double> rows = cross_entropy_rows(zv, labels);
  const std::size_t n = zv.dim(0), m = zv.dim(1);
  double total = 0.0;
  for (double r : rows) total += r;
  const double factor =
      reduction == Reduction::kMean ? 1.0 / static_cast<double>(n) : 1.0;
  Tensor out = Tensor::scalar(total * factor);
  require_finite(out, "softmax_cross_entropy");
  const std::size_t iz = logits.id;
  return tape.record(
      std::move(out), {iz},
      [iz, labels, n, m, factor](Tape& t, const Tensor& g) {
        const Tensor& z = t.value(Var{&t, iz});
        Tensor& gz = t.grad_buffer(iz);
        const double coeff = g[0] * factor;
        for (std::size_t i = 0; i < n; ++i) {
          const double* zr = z.data().data() + i * m;
          const double lse = row_log_normalizer(zr, m);
          for (std::size_t j = 0; j < m; ++j) {
            const double p = std::exp(zr[j] - lse);
            gz[i * m + j] += coeff * (p - labels[i * m + j]);
          }
        }
      });
}

}  // namespace atent
