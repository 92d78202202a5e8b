// Copyright 2026 The CAMS Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "cams/ops.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "cams/errors.hpp"

namespace cams {

namespace {

using RowMatrix =
    Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatrixMap = Eigen::Map<RowMatrix>;
using ConstMatrixMap = Eigen::Map<const RowMatrix>;
using StridedMap = Eigen::Map<RowMatrix, 0, Eigen::OuterStride<>>;
using ConstStridedMap = Eigen::Map<const RowMatrix, 0, Eigen::OuterStride<>>;

ConstMatrixMap as_matrix(const std::vector<Real>& v, std::size_t rows,
                         std::size_t cols) {
  return ConstMatrixMap(v.data(), static_cast<Eigen::Index>(rows),
                        static_cast<Eigen::Index>(cols));
}

MatrixMap as_matrix(std::vector<Real>& v, std::size_t rows, std::size_t cols) {
  return MatrixMap(v.data(), static_cast<Eigen::Index>(rows),
                   static_cast<Eigen::Index>(cols));
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw DimensionError(std::string(op) + ": shapes " +
                         shape_to_string(a.shape()) + " and " +
                         shape_to_string(b.shape()) + " differ");
  }
}

const std::vector<Real>& value(const detail::Node& n, std::size_t i) {
  return n.inputs[i]->value;
}

std::vector<Real>* grad_of(detail::Node& n, std::size_t i) {
  return n.inputs[i]->grad_buffer();
}

// Elementwise unary op with derivative computed from (input, output).
template <typename F, typename D>
Tensor unary(const char* op, const Tensor& x, F f, D df) {
  const auto in = x.data();
  std::vector<Real> out(in.size());
  for (std::size_t i = 0; i < in.size(); ++i) out[i] = f(in[i]);
  return make_op_result(op, x.shape(), std::move(out), {x},
                        [df](detail::Node& self) {
                          auto* g = grad_of(self, 0);
                          if (!g) return;
                          const auto& xin = value(self, 0);
                          for (std::size_t i = 0; i < xin.size(); ++i) {
                            (*g)[i] += self.grad[i] * df(xin[i], self.value[i]);
                          }
                        });
}

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
  const std::size_t m = a.rows(), k = a.cols();
  const std::size_t k2 = b.rank() == 1 ? b.size() : b.rows();
  const std::size_t n = b.rank() == 1 ? 1 : b.cols();
  if (k != k2) {
    throw DimensionError("matmul: inner dimensions differ for " +
                         shape_to_string(a.shape()) + " and " +
                         shape_to_string(b.shape()));
  }
  std::vector<Real> out(m * n);
  as_matrix(out, m, n).noalias() =
      ConstMatrixMap(a.data().data(), m, k) * ConstMatrixMap(b.data().data(), k, n);
  return make_op_result(
      "matmul", {m, n}, std::move(out), {a, b},
      [m, k, n](detail::Node& self) {
        auto dc = as_matrix(self.grad, m, n);
        if (auto* ga = grad_of(self, 0)) {
          as_matrix(*ga, m, k).noalias() +=
              dc * as_matrix(value(self, 1), k, n).transpose();
        }
        if (auto* gb = grad_of(self, 1)) {
          as_matrix(*gb, k, n).noalias() +=
              as_matrix(value(self, 0), m, k).transpose() * dc;
        }
      });
}

Tensor transpose(const Tensor& x) {
  const std::size_t r = x.rows(), c = x.cols();
  std::vector<Real> out(r * c);
  as_matrix(out, c, r) = ConstMatrixMap(x.data().data(), r, c).transpose();
  return make_op_result("transpose", {c, r}, std::move(out), {x},
                        [r, c](detail::Node& self) {
                          if (auto* g = grad_of(self, 0)) {
                            as_matrix(*g, r, c) +=
                                as_matrix(self.grad, c, r).transpose();
                          }
                        });
}

Tensor add(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "add");
  std::vector<Real> out(a.data().begin(), a.data().end());
  const auto bv = b.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += bv[i];
  return make_op_result("add", a.shape(), std::move(out), {a, b},
                        [](detail::Node& self) {
                          for (std::size_t j = 0; j < 2; ++j) {
                            if (auto* g = grad_of(self, j)) {
                              for (std::size_t i = 0; i < g->size(); ++i)
                                (*g)[i] += self.grad[i];
                            }
                          }
                        });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "sub");
  std::vector<Real> out(a.data().begin(), a.data().end());
  const auto bv = b.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= bv[i];
  return make_op_result("sub", a.shape(), std::move(out), {a, b},
                        [](detail::Node& self) {
                          if (auto* g = grad_of(self, 0)) {
                            for (std::size_t i = 0; i < g->size(); ++i)
                              (*g)[i] += self.grad[i];
                          }
                          if (auto* g = grad_of(self, 1)) {
                            for (std::size_t i = 0; i < g->size(); ++i)
                              (*g)[i] -= self.grad[i];
                          }
                        });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "mul");
  std::vector<Real> out(a.data().begin(), a.data().end());
  const auto bv = b.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= bv[i];
  return make_op_result("mul", a.shape(), std::move(out), {a, b},
                        [](detail::Node& self) {
                          const auto& av = value(self, 0);
                          const auto& bv = value(self, 1);
                          if (auto* g = grad_of(self, 0)) {
                            for (std::size_t i = 0; i < g->size(); ++i)
                              (*g)[i] += self.grad[i] * bv[i];
                          }
                          if (auto* g = grad_of(self, 1)) {
                            for (std::size_t i = 0; i < g->size(); ++i)
                              (*g)[i] += self.grad[i] * av[i];
                          }
                        });
}

Tensor add_row(const Tensor& x, const Tensor& bias) {
  const std::size_t r = x.rows(), c = x.cols();
  if (bias.size() != c) {
    throw DimensionError("add_row: bias " + shape_to_string(bias.shape()) +
                         " does not match columns of " +
                         shape_to_string(x.shape()));
  }
  std::vector<Real> out(x.data().begin(), x.data().end());
  const auto bv = bias.data();
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) out[i * c + j] += bv[j];
  return make_op_result("add_row", x.shape(), std::move(out), {x, bias},
                        [r, c](detail::Node& self) {
                          if (auto* g = grad_of(self, 0)) {
                            for (std::size_t i = 0; i < g->size(); ++i)
                              (*g)[i] += self.grad[i];
                          }
                          if (auto* g = grad_of(self, 1)) {
                            for (std::size_t i = 0; i < r; ++i)
                              for (std::size_t j = 0; j < c; ++j)
                                (*g)[j] += self.grad[i * c + j];
                          }
                        });
}

Tensor scale(const Tensor& x, Real factor) {
  return unary(
      "scale", x, [factor](Real v) { return v * factor; },
      [factor](Real, Real) { return factor; });
}

Tensor scale_by(const Tensor& x, const Tensor& s) {
  if (s.size() != 1) {
    throw DimensionError("scale_by: scale must hold one element, got " +
                         shape_to_string(s.shape()));
  }
  const Real f = s.item();
  std::vector<Real> out(x.data().begin(), x.data().end());
  for (auto& v : out) v *= f;
  return make_op_result("scale_by", x.shape(), std::move(out), {x, s},
                        [](detail::Node& self) {
                          const auto& xv = value(self, 0);
                          const Real f = value(self, 1)[0];
                          if (auto* g = grad_of(self, 0)) {
                            for (std::size_t i = 0; i < g->size(); ++i)
                              (*g)[i] += self.grad[i] * f;
                          }
                          if (auto* g = grad_of(self, 1)) {
                            Real acc = 0;
                            for (std::size_t i = 0; i < xv.size(); ++i)
                              acc += self.grad[i] * xv[i];
                            (*g)[0] += acc;
                          }
                        });
}

Tensor sigmoid(const Tensor& x) {
  return unary(
      "sigmoid", x,
      [](Real v) {
        if (v >= 0) return Real{1} / (Real{1} + std::exp(-v));
        const Real e = std::exp(v);
        return e / (Real{1} + e);
      },
      [](Real, Real y) { return y * (Real{1} - y); });
}

Tensor gelu(const Tensor& x) {
  constexpr Real inv_sqrt2 = Real{1} / std::numbers::sqrt2_v<Real>;
  constexpr Real inv_sqrt_2pi =
      std::numbers::inv_sqrtpi_v<Real> * inv_sqrt2;
  return unary(
      "gelu", x,
      [](Real v) { return Real{0.5} * v * (Real{1} + std::erf(v * inv_sqrt2)); },
      [](Real v, Real) {
        const Real cdf = Real{0.5} * (Real{1} + std::erf(v * inv_sqrt2));
        return cdf + v * inv_sqrt_2pi * std::exp(Real{-0.5} * v * v);
      });
}

Tensor exp(const Tensor& x) {
  return unary(
      "exp", x, [](Real v) { return std::exp(v); },
      [](Real, Real y) { return y; });
}

Tensor log(const Tensor& x) {
  for (Real v : x.data()) {
    if (!(v > 0)) throw ContractError("log: non-positive input");
  }
  return unary(
      "log", x, [](Real v) { return std::log(v); },
      [](Real v, Real) { return Real{1} / v; });
}

Tensor square(const Tensor& x) {
  return unary(
      "square", x, [](Real v) { return v * v; },
      [](Real v, Real) { return Real{2} * v; });
}

Tensor sum(const Tensor& x) {
  Real acc = 0;
  for (Real v : x.data()) acc += v;
  return make_op_result("sum", {1}, {acc}, {x}, [](detail::Node& self) {
    if (auto* g = grad_of(self, 0)) {
      for (auto& v : *g) v += self.grad[0];
    }
  });
}

Tensor mean(const Tensor& x) {
  return scale(sum(x), Real{1} / static_cast<Real>(x.size()));
}

Tensor softmax_rows(const Tensor& x) {
  const std::size_t r = x.rows(), c = x.cols();
  const auto in = x.data();
  std::vector<Real> out(in.size());
  for (std::size_t i = 0; i < r; ++i) {
    const Real* row = in.data() + i * c;
    Real* o = out.data() + i * c;
    const Real mx = *std::max_element(row, row + c);
    Real z = 0;
    for (std::size_t j = 0; j < c; ++j) z += (o[j] = std::exp(row[j] - mx));
    for (std::size_t j = 0; j < c; ++j) o[j] /= z;
  }
  return make_op_result("softmax_rows", x.shape(), std::move(out), {x},
                        [r, c](detail::Node& self) {
                          auto* g = grad_of(self, 0);
                          if (!g) return;
                          for (std::size_t i = 0; i < r; ++i) {
                            const Real* y = self.value.data() + i * c;
                            const Real* dy = self.grad.data() + i * c;
                            Real dot = 0;
                            for (std::size_t j = 0; j < c; ++j) dot += y[j] * dy[j];
                            for (std::size_t j = 0; j < c; ++j)
                              (*g)[i * c + j] += y[j] * (dy[j] - dot);
                          }
                        });
}

Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta,
                  Real eps) {
  const std::size_t r = x.rows(), d = x.cols();
  if (gamma.size() != d || beta.size() != d) {
    throw DimensionError("layer_norm: gamma " + shape_to_string(gamma.shape()) +
                         " / beta " + shape_to_string(beta.shape()) +
                         " do not match last dimension of " +
                         shape_to_string(x.shape()));
  }
  const auto in = x.data();
  const auto gv = gamma.data();
  const auto bv = beta.data();
  std::vector<Real> out(in.size());
  std::vector<Real> xhat(in.size());
  std::vector<Real> inv_std(r);
  for (std::size_t i = 0; i < r; ++i) {
    const Real* row = in.data() + i * d;
    Real mu = 0;
    for (std::size_t j = 0; j < d; ++j) mu += row[j];
    mu /= static_cast<Real>(d);
    Real var = 0;
    for (std::size_t j = 0; j < d; ++j) var += (row[j] - mu) * (row[j] - mu);
    var /= static_cast<Real>(d);
    inv_std[i] = Real{1} / std::sqrt(var + eps);
    for (std::size_t j = 0; j < d; ++j) {
      const Real h = (row[j] - mu) * inv_std[i];
      xhat[i * d + j] = h;
      out[i * d + j] = h * gv[j] + bv[j];
    }
  }
  return make_op_result(
      "layer_norm", x.shape(), std::move(out), {x, gamma, beta},
      [r, d, xhat = std::move(xhat),
       inv_std = std::move(inv_std)](detail::Node& self) {
        const auto& gv = value(self, 1);
        auto* gx = grad_of(self, 0);
        auto* gg = grad_of(self, 1);
        auto* gb = grad_of(self, 2);
        std::vector<Real> dh(d);
        for (std::size_t i = 0; i < r; ++i) {
          const Real* dy = self.grad.data() + i * d;
          const Real* h = xhat.data() + i * d;
          Real mean_dh = 0, mean_dh_h = 0;
          for (std::size_t j = 0; j < d; ++j) {
            dh[j] = dy[j] * gv[j];
            mean_dh += dh[j];
            mean_dh_h += dh[j] * h[j];
            if (gg) (*gg)[j] += dy[j] * h[j];
            if (gb) (*gb)[j] += dy[j];
          }
          if (!gx) continue;
          mean_dh /= static_cast<Real>(d);
          mean_dh_h /= static_cast<Real>(d);
          for (std::size_t j = 0; j < d; ++j) {
            (*gx)[i * d + j] += inv_std[i] * (dh[j] - mean_dh - h[j] * mean_dh_h);
          }
        }
      });
}

Tensor l2_normalize_rows(const Tensor& x) {
  const std::size_t r = x.rows(), c = x.cols();
  const auto in = x.data();
  std::vector<Real> out(in.size());
  std::vector<Real> norms(r);
  for (std::size_t i = 0; i < r; ++i) {
    Real ss = 0;
    for (std::size_t j = 0; j < c; ++j) ss += in[i * c + j] * in[i * c + j];
    norms[i] = std::max(std::sqrt(ss), Real{1e-12});
    for (std::size_t j = 0; j < c; ++j) out[i * c + j] = in[i * c + j] / norms[i];
  }
  return make_op_result("l2_normalize_rows", x.shape(), std::move(out), {x},
                        [r, c, norms = std::move(norms)](detail::Node& self) {
                          auto* g = grad_of(self, 0);
                          if (!g) return;
                          for (std::size_t i = 0; i < r; ++i) {
                            const Real* y = self.value.data() + i * c;
                            const Real* dy = self.grad.data() + i * c;
                            Real dot = 0;
                            for (std::size_t j = 0; j < c; ++j) dot += y[j] * dy[j];
                            for (std::size_t j = 0; j < c; ++j)
                              (*g)[i * c + j] += (dy[j] - y[j] * dot) / norms[i];
                          }
                        });
}

Tensor cross_entropy(const Tensor& probs, const std::vector<std::size_t>& labels,
                     CrossEntropyDiagnostics* diagnostics) {
  const std::size_t b = probs.rows(), c = probs.cols();
  if (labels.size() != b) {
    throw DimensionError("cross_entropy: " + std::to_string(labels.size()) +
                         " labels for " + std::to_string(b) + " rows");
  }
  const auto p = probs.data();
  Real loss = 0;
  std::size_t clamped = 0;
  for (std::size_t i = 0; i < b; ++i) {
    if (labels[i] >= c) {
      throw IndexError("cross_entropy: label " + std::to_string(labels[i]) +
                       " outside " + std::to_string(c) + " classes");
    }
    Real row_sum = 0;
    for (std::size_t j = 0; j < c; ++j) row_sum += p[i * c + j];
    if (std::abs(row_sum - Real{1}) > Real{1e-6}) {
      throw ContractError("cross_entropy: probability row " + std::to_string(i) +
                          " sums to " + std::to_string(row_sum));
    }
    Real pl = p[i * c + labels[i]];
    if (pl < kProbabilityFloor) {
      pl = kProbabilityFloor;
      ++clamped;
    }
    loss -= std::log(pl);
  }
  if (diagnostics) diagnostics->clamped += clamped;
  loss /= static_cast<Real>(b);
  return make_op_result("cross_entropy", {1}, {loss}, {probs},
                        [b, c, labels](detail::Node& self) {
                          auto* g = grad_of(self, 0);
                          if (!g) return;
                          const auto& pv = value(self, 0);
                          const Real inv_b = Real{1} / static_cast<Real>(b);
                          for (std::size_t i = 0; i < b; ++i) {
                            const Real pl = pv[i * c + labels[i]];
                            if (pl < kProbabilityFloor) continue;
                            (*g)[i * c + labels[i]] -= self.grad[0] * inv_b / pl;
                          }
                        });
}

Tensor softmax_cross_entropy(const Tensor& logits,
                             const std::vector<std::size_t>& labels,
                             const std::vector<Real>& weights) {
  const std::size_t b = logits.rows(), c = logits.cols();
  if (labels.size() != b || (!weights.empty() && weights.size() != b)) {
    throw DimensionError("softmax_cross_entropy: label/weight count does not "
                         "match " + std::to_string(b) + " rows");
  }
  const auto z = logits.data();
  std::vector<Real> probs(z.size());
  Real loss = 0;
  for (std::size_t i = 0; i < b; ++i) {
    if (labels[i] >= c) {
      throw IndexError("softmax_cross_entropy: label " +
                       std::to_string(labels[i]) + " outside " +
                       std::to_string(c) + " classes");
    }
    const Real* row = z.data() + i * c;
    const Real mx = *std::max_element(row, row + c);
    Real sum_exp = 0;
    for (std::size_t j = 0; j < c; ++j)
      sum_exp += (probs[i * c + j] = std::exp(row[j] - mx));
    for (std::size_t j = 0; j < c; ++j) probs[i * c + j] /= sum_exp;
    const Real w = weights.empty() ? Real{1} : weights[i];
    loss -= w * (row[labels[i]] - mx - std::log(sum_exp));
  }
  loss /= static_cast<Real>(b);
  return make_op_result(
      "softmax_cross_entropy", {1}, {loss}, {logits},
      [b, c, labels, weights, probs = std::move(probs)](detail::Node& self) {
        auto* g = grad_of(self, 0);
        if (!g) return;
        const Real inv_b = Real{1} / static_cast<Real>(b);
        for (std::size_t i = 0; i < b; ++i) {
          const Real w =
              (weights.empty() ? Real{1} : weights[i]) * inv_b * self.grad[0];
          for (std::size_t j = 0; j < c; ++j) {
            const Real onehot = j == labels[i] ? Real{1} : Real{0};
            (*g)[i * c + j] += w * (probs[i * c + j] - onehot);
          }
        }
      });
}

Tensor gather_rows(const Tensor& x, const std::vector<std::size_t>& rows) {
  const std::size_t r = x.rows(), c = x.cols();
  std::vector<Real> out(rows.size() * c);
  const auto in = x.data();
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] >= r) {
      throw IndexError("gather_rows: row " + std::to_string(rows[i]) +
                       " outside " + shape_to_string(x.shape()));
    }
    std::copy_n(in.data() + rows[i] * c, c, out.data() + i * c);
  }
  if (rows.empty()) throw ContractError("gather_rows: empty row list");
  return make_op_result("gather_rows", {rows.size(), c}, std::move(out), {x},
                        [c, rows](detail::Node& self) {
                          auto* g = grad_of(self, 0);
                          if (!g) return;
                          for (std::size_t i = 0; i < rows.size(); ++i)
                            for (std::size_t j = 0; j < c; ++j)
                              (*g)[rows[i] * c + j] += self.grad[i * c + j];
                        });
}

Tensor slice_rows(const Tensor& x, std::size_t begin, std::size_t count) {
  const std::size_t c = x.cols();
  if (count == 0 || begin + count > x.rows()) {
    throw IndexError("slice_rows: [" + std::to_string(begin) + ", " +
                     std::to_string(begin + count) + ") outside " +
                     shape_to_string(x.shape()));
  }
  const auto in = x.data();
  std::vector<Real> out(in.begin() + static_cast<std::ptrdiff_t>(begin * c),
                        in.begin() + static_cast<std::ptrdiff_t>((begin + count) * c));
  return make_op_result("slice_rows", {count, c}, std::move(out), {x},
                        [begin, c](detail::Node& self) {
                          auto* g = grad_of(self, 0);
                          if (!g) return;
                          for (std::size_t i = 0; i < self.grad.size(); ++i)
                            (*g)[begin * c + i] += self.grad[i];
                        });
}

Tensor concat_rows(const std::vector<Tensor>& parts) {
  if (parts.empty()) throw ContractError("concat_rows: no inputs");
  const std::size_t c = parts.front().cols();
  std::size_t total = 0;
  for (const auto& p : parts) {
    if (p.cols() != c) {
      throw DimensionError("concat_rows: column counts differ (" +
                           shape_to_string(parts.front().shape()) + " vs " +
                           shape_to_string(p.shape()) + ")");
    }
    total += p.rows();
  }
  std::vector<Real> out;
  out.reserve(total * c);
  std::vector<std::size_t> offsets;
  for (const auto& p : parts) {
    offsets.push_back(out.size());
    out.insert(out.end(), p.data().begin(), p.data().end());
  }
  return make_op_result("concat_rows", {total, c}, std::move(out), parts,
                        [offsets = std::move(offsets)](detail::Node& self) {
                          for (std::size_t k = 0; k < self.inputs.size(); ++k) {
                            auto* g = grad_of(self, k);
                            if (!g) continue;
                            for (std::size_t i = 0; i < g->size(); ++i)
                              (*g)[i] += self.grad[offsets[k] + i];
                          }
                        });
}

Tensor group_mean_rows(const Tensor& x, std::size_t group_size) {
  const std::size_t r = x.rows(), c = x.cols();
  if (group_size == 0 || r % group_size != 0) {
    throw DimensionError("group_mean_rows: " + std::to_string(r) +
                         " rows not divisible into groups of " +
                         std::to_string(group_size));
  }
  const std::size_t groups = r / group_size;
  const Real inv = Real{1} / static_cast<Real>(group_size);
  const auto in = x.data();
  std::vector<Real> out(groups * c, Real{0});
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) out[(i / group_size) * c + j] += in[i * c + j];
  for (auto& v : out) v *= inv;
  return make_op_result("group_mean_rows", {groups, c}, std::move(out), {x},
                        [r, c, group_size, inv](detail::Node& self) {
                          auto* g = grad_of(self, 0);
                          if (!g) return;
                          for (std::size_t i = 0; i < r; ++i)
                            for (std::size_t j = 0; j < c; ++j)
                              (*g)[i * c + j] +=
                                  self.grad[(i / group_size) * c + j] * inv;
                        });
}

Tensor dropout(const Tensor& x, Real rate, Rng& rng, bool training) {
  if (rate < 0 || rate >= 1) {
    throw ConfigError("dropout rate must lie in [0, 1), got " +
                      std::to_string(rate));
  }
  if (!training || rate == 0) return x;
  const Real keep_scale = Real{1} / (Real{1} - rate);
  std::vector<Real> mask(x.size());
  for (auto& m : mask) m = rng.bernoulli(rate) ? Real{0} : keep_scale;
  std::vector<Real> out(x.data().begin(), x.data().end());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= mask[i];
  return make_op_result("dropout", x.shape(), std::move(out), {x},
                        [mask = std::move(mask)](detail::Node& self) {
                          auto* g = grad_of(self, 0);
                          if (!g) return;
                          for (std::size_t i = 0; i < g->size(); ++i)
                            (*g)[i] += self.grad[i] * mask[i];
                        });
}

Tensor multi_head_attention(const Tensor& q, const Tensor& k, const Tensor& v,
                            std::size_t groups, std::size_t heads,
                            std::vector<Real>* weights) {
  const std::size_t d = q.cols();
  if (k.cols() != d || v.cols() != d) {
    throw DimensionError("multi_head_attention: widths differ (q " +
                         shape_to_string(q.shape()) + ", k " +
                         shape_to_string(k.shape()) + ", v " +
                         shape_to_string(v.shape()) + ")");
  }
  if (k.rows() != v.rows()) {
    throw DimensionError("multi_head_attention: key rows " +
                         shape_to_string(k.shape()) + " vs value rows " +
                         shape_to_string(v.shape()));
  }
  if (groups == 0 || q.rows() % groups != 0 || k.rows() % groups != 0) {
    throw DimensionError("multi_head_attention: rows not divisible into " +
                         std::to_string(groups) + " groups");
  }
  if (heads == 0 || d % heads != 0) {
    throw ConfigError("multi_head_attention: width " + std::to_string(d) +
                      " not divisible by " + std::to_string(heads) + " heads");
  }
  const std::size_t lq = q.rows() / groups;
  const std::size_t lk = k.rows() / groups;
  const std::size_t dk = d / heads;
  const Real scale_factor = Real{1} / std::sqrt(static_cast<Real>(dk));
  const auto di = static_cast<Eigen::Index>(d);

  std::vector<Real> probs(groups * heads * lq * lk);
  std::vector<Real> out(q.rows() * d);
  const Real* qp = q.data().data();
  const Real* kp = k.data().data();
  const Real* vp = v.data().data();
  for (std::size_t g = 0; g < groups; ++g) {
    for (std::size_t h = 0; h < heads; ++h) {
      ConstStridedMap qh(qp + g * lq * d + h * dk, lq, dk, Eigen::OuterStride<>(di));
      ConstStridedMap kh(kp + g * lk * d + h * dk, lk, dk, Eigen::OuterStride<>(di));
      ConstStridedMap vh(vp + g * lk * d + h * dk, lk, dk, Eigen::OuterStride<>(di));
      MatrixMap p(probs.data() + (g * heads + h) * lq * lk, lq, lk);
      p.noalias() = (qh * kh.transpose()) * scale_factor;
      for (Eigen::Index i = 0; i < p.rows(); ++i) {
        const Real mx = p.row(i).maxCoeff();
        p.row(i) = (p.row(i).array() - mx).exp();
        p.row(i) /= p.row(i).sum();
      }
      StridedMap oh(out.data() + g * lq * d + h * dk, lq, dk, Eigen::OuterStride<>(di));
      oh.noalias() = p * vh;
    }
  }
  if (weights) *weights = probs;

  return make_op_result(
      "multi_head_attention", {q.rows(), d}, std::move(out), {q, k, v},
      [=, probs = std::move(probs)](detail::Node& self) {
        const Real* qv = value(self, 0).data();
        const Real* kv = value(self, 1).data();
        const Real* vv = value(self, 2).data();
        auto* gq = grad_of(self, 0);
        auto* gk = grad_of(self, 1);
        auto* gv = grad_of(self, 2);
        RowMatrix dp, ds;
        for (std::size_t g = 0; g < groups; ++g) {
          for (std::size_t h = 0; h < heads; ++h) {
            ConstStridedMap qh(qv + g * lq * d + h * dk, lq, dk, Eigen::OuterStride<>(di));
            ConstStridedMap kh(kv + g * lk * d + h * dk, lk, dk, Eigen::OuterStride<>(di));
            ConstStridedMap vh(vv + g * lk * d + h * dk, lk, dk, Eigen::OuterStride<>(di));
            ConstStridedMap doh(self.grad.data() + g * lq * d + h * dk, lq, dk,
                                Eigen::OuterStride<>(di));
            ConstMatrixMap p(probs.data() + (g * heads + h) * lq * lk, lq, lk);
            if (gv) {
              StridedMap gvh(gv->data() + g * lk * d + h * dk, lk, dk,
                             Eigen::OuterStride<>(di));
              gvh.noalias() += p.transpose() * doh;
            }
            if (!gq && !gk) continue;
            dp.noalias() = doh * vh.transpose();
            ds = p.array() *
                 (dp.array().colwise() - (dp.array() * p.array()).rowwise().sum());
            ds *= scale_factor;
            if (gq) {
              StridedMap gqh(gq->data() + g * lq * d + h * dk, lq, dk,
                             Eigen::OuterStride<>(di));
              gqh.noalias() += ds * kh;
            }
            if (gk) {
              StridedMap gkh(gk->data() + g * lk * d + h * dk, lk, dk,
                             Eigen::OuterStride<>(di));
              gkh.noalias() += ds.transpose() * qh;
            }
          }
        }
      });
}

}  // namespace cams
