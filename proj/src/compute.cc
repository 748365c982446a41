// Copyright 2026 The kgdial Authors.
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

#include "kgdial/compute.h"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "kgdial/errors.h"

namespace kgdial::compute {

using detail::Node;

namespace {

Precision g_precision = Precision::k64;
thread_local bool t_grad_enabled = true;

[[noreturn]] void shape_error(const std::string &op, const Shape &lhs,
                              const Shape &rhs) {
  throw Error(ErrorCode::kShapeMismatch,
              op + " " + shape_string(lhs) + " vs " + shape_string(rhs));
}

void require_defined(const char *op, const Tensor &t) {
  if (!t.defined()) shape_error(op, {}, {});
}

// Wraps forward output into a tensor. Parents and the backward rule are kept
// only when recording is on and some parent needs a gradient.
Tensor make_result(std::size_t rows, std::size_t cols, std::vector<double> data,
                   const std::vector<Tensor> &parents,
                   std::function<void(Node &)> bw) {
  if (g_precision == Precision::k32) {
    for (double &x : data) x = static_cast<double>(static_cast<float>(x));
  }
  auto node = std::make_shared<Node>();
  node->shape = {rows, cols};
  node->data = std::move(data);
  node->is_leaf = false;
  bool needs = false;
  if (t_grad_enabled) {
    for (const Tensor &p : parents) needs = needs || p.requires_grad();
  }
  if (needs) {
    node->requires_grad = true;
    node->parents.reserve(parents.size());
    for (const Tensor &p : parents) node->parents.push_back(p.shared_node());
    node->backward = std::move(bw);
  }
  return Tensor(std::move(node));
}

// Parent grad buffer, or nullptr when that parent takes no gradient.
double *grad_of(Node &self, std::size_t i) {
  Node &p = *self.parents[i];
  if (!p.requires_grad) return nullptr;
  p.ensure_grad();
  return p.grad.data();
}

// C[m x n] += A[m x k] . B[k x n]
void gemm_nn(std::size_t m, std::size_t k, std::size_t n, const double *a,
             const double *b, double *c) {
  for (std::size_t i = 0; i < m; ++i) {
    double *crow = c + i * n;
    const double *arow = a + i * k;
    for (std::size_t p = 0; p < k; ++p) {
      const double av = arow[p];
      if (av == 0.0) continue;
      const double *brow = b + p * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

// C[m x n] += A[m x k] . B[n x k]^T
void gemm_nt(std::size_t m, std::size_t k, std::size_t n, const double *a,
             const double *b, double *c) {
  for (std::size_t i = 0; i < m; ++i) {
    const double *arow = a + i * k;
    for (std::size_t j = 0; j < n; ++j) {
      const double *brow = b + j * k;
      double acc = 0.0;
      for (std::size_t p = 0; p < k; ++p) acc += arow[p] * brow[p];
      c[i * n + j] += acc;
    }
  }
}

// C[m x n] += A[k x m]^T . B[k x n]
void gemm_tn(std::size_t m, std::size_t k, std::size_t n, const double *a,
             const double *b, double *c) {
  for (std::size_t p = 0; p < k; ++p) {
    const double *arow = a + p * m;
    const double *brow = b + p * n;
    for (std::size_t i = 0; i < m; ++i) {
      const double av = arow[i];
      if (av == 0.0) continue;
      double *crow = c + i * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

constexpr double kGeluC = 0.7978845608028654;  // sqrt(2 / pi)
constexpr double kGeluA = 0.044715;

}  // namespace

void set_precision(Precision p) { g_precision = p; }
Precision precision() { return g_precision; }

double round_to_precision(double x) {
  return g_precision == Precision::k32 ? static_cast<double>(static_cast<float>(x))
                                       : x;
}

std::string shape_string(const Shape &shape) {
  std::string out = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i > 0) out += "x";
    out += std::to_string(shape[i]);
  }
  return out + "]";
}

Tensor Tensor::zeros(std::size_t rows, std::size_t cols, bool requires_grad) {
  return from(rows, cols, std::vector<double>(rows * cols, 0.0), requires_grad);
}

Tensor Tensor::full(std::size_t rows, std::size_t cols, double value) {
  return from(rows, cols, std::vector<double>(rows * cols, value));
}

Tensor Tensor::from(std::size_t rows, std::size_t cols, std::vector<double> values,
                    bool requires_grad) {
  if (values.size() != rows * cols) {
    shape_error("from", {rows, cols}, {values.size()});
  }
  auto node = std::make_shared<Node>();
  node->shape = {rows, cols};
  node->data = std::move(values);
  node->requires_grad = requires_grad;
  return Tensor(std::move(node));
}

Tensor Tensor::scalar(double value) { return from(1, 1, {value}); }

double Tensor::item() const {
  if (numel() != 1) {
    throw Error(ErrorCode::kNotScalar, "item() on " + shape_string(shape()));
  }
  return node_->data[0];
}

Tensor Tensor::detach() const {
  return from(rows(), cols(), node_->data, false);
}

NoGradGuard::NoGradGuard() : previous_(t_grad_enabled) { t_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { t_grad_enabled = previous_; }
bool grad_enabled() { return t_grad_enabled; }

Tensor matmul(const Tensor &a, const Tensor &b) {
  require_defined("matmul", a);
  require_defined("matmul", b);
  if (a.cols() != b.rows()) shape_error("matmul", a.shape(), b.shape());
  const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
  std::vector<double> out(m * n, 0.0);
  gemm_nn(m, k, n, a.data().data(), b.data().data(), out.data());
  return make_result(m, n, std::move(out), {a, b}, [m, k, n](Node &self) {
    const Node &pa = *self.parents[0];
    const Node &pb = *self.parents[1];
    if (double *ga = grad_of(self, 0)) {
      gemm_nt(m, n, k, self.grad.data(), pb.data.data(), ga);
    }
    if (double *gb = grad_of(self, 1)) {
      gemm_tn(k, m, n, pa.data.data(), self.grad.data(), gb);
    }
  });
}

Tensor matmul_bt(const Tensor &a, const Tensor &b) {
  require_defined("matmul_bt", a);
  require_defined("matmul_bt", b);
  if (a.cols() != b.cols()) shape_error("matmul_bt", a.shape(), b.shape());
  const std::size_t m = a.rows(), k = a.cols(), n = b.rows();
  std::vector<double> out(m * n, 0.0);
  gemm_nt(m, k, n, a.data().data(), b.data().data(), out.data());
  return make_result(m, n, std::move(out), {a, b}, [m, k, n](Node &self) {
    const Node &pa = *self.parents[0];
    const Node &pb = *self.parents[1];
    // dA[m x k] += dC[m x n] . B[n x k]
    if (double *ga = grad_of(self, 0)) {
      gemm_nn(m, n, k, self.grad.data(), pb.data.data(), ga);
    }
    // dB[n x k] += dC^T[n x m] . A[m x k]
    if (double *gb = grad_of(self, 1)) {
      gemm_tn(n, m, k, self.grad.data(), pa.data.data(), gb);
    }
  });
}

Tensor add(const Tensor &a, const Tensor &b) {
  require_defined("add", a);
  require_defined("add", b);
  const std::size_t m = a.rows(), n = a.cols();
  const bool broadcast = b.rows() == 1 && m != 1 && b.cols() == n;
  if (!broadcast && a.shape() != b.shape()) shape_error("add", a.shape(), b.shape());
  std::vector<double> out(a.data().begin(), a.data().end());
  auto bd = b.data();
  for (std::size_t i = 0; i < m; ++i) {
    const double *brow = broadcast ? bd.data() : bd.data() + i * n;
    for (std::size_t j = 0; j < n; ++j) out[i * n + j] += brow[j];
  }
  return make_result(m, n, std::move(out), {a, b}, [m, n, broadcast](Node &self) {
    if (double *ga = grad_of(self, 0)) {
      for (std::size_t i = 0; i < m * n; ++i) ga[i] += self.grad[i];
    }
    if (double *gb = grad_of(self, 1)) {
      for (std::size_t i = 0; i < m; ++i) {
        double *dst = broadcast ? gb : gb + i * n;
        for (std::size_t j = 0; j < n; ++j) dst[j] += self.grad[i * n + j];
      }
    }
  });
}

Tensor mul(const Tensor &a, const Tensor &b) {
  require_defined("mul", a);
  require_defined("mul", b);
  if (a.shape() != b.shape()) shape_error("mul", a.shape(), b.shape());
  std::vector<double> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] * b.data()[i];
  return make_result(a.rows(), a.cols(), std::move(out), {a, b}, [](Node &self) {
    const Node &pa = *self.parents[0];
    const Node &pb = *self.parents[1];
    if (double *ga = grad_of(self, 0)) {
      for (std::size_t i = 0; i < self.grad.size(); ++i) ga[i] += self.grad[i] * pb.data[i];
    }
    if (double *gb = grad_of(self, 1)) {
      for (std::size_t i = 0; i < self.grad.size(); ++i) gb[i] += self.grad[i] * pa.data[i];
    }
  });
}

Tensor scale(const Tensor &a, double s) {
  require_defined("scale", a);
  std::vector<double> out(a.data().begin(), a.data().end());
  for (double &x : out) x *= s;
  return make_result(a.rows(), a.cols(), std::move(out), {a}, [s](Node &self) {
    if (double *ga = grad_of(self, 0)) {
      for (std::size_t i = 0; i < self.grad.size(); ++i) ga[i] += s * self.grad[i];
    }
  });
}

Tensor concat(const std::vector<Tensor> &parts, int axis) {
  if (parts.empty()) shape_error("concat", {}, {});
  for (const Tensor &p : parts) require_defined("concat", p);
  if (axis == 0) {
    const std::size_t n = parts[0].cols();
    std::size_t m = 0;
    for (const Tensor &p : parts) {
      if (p.cols() != n) shape_error("concat(axis=0)", parts[0].shape(), p.shape());
      m += p.rows();
    }
    std::vector<double> out;
    out.reserve(m * n);
    for (const Tensor &p : parts) out.insert(out.end(), p.data().begin(), p.data().end());
    return make_result(m, n, std::move(out), parts, [](Node &self) {
      std::size_t offset = 0;
      for (std::size_t i = 0; i < self.parents.size(); ++i) {
        const std::size_t len = self.parents[i]->data.size();
        if (double *g = grad_of(self, i)) {
          for (std::size_t j = 0; j < len; ++j) g[j] += self.grad[offset + j];
        }
        offset += len;
      }
    });
  }
  if (axis != 1) shape_error("concat(axis)", {}, {});
  const std::size_t m = parts[0].rows();
  std::size_t n = 0;
  for (const Tensor &p : parts) {
    if (p.rows() != m) shape_error("concat(axis=1)", parts[0].shape(), p.shape());
    n += p.cols();
  }
  std::vector<double> out(m * n);
  std::size_t col = 0;
  for (const Tensor &p : parts) {
    const std::size_t pc = p.cols();
    for (std::size_t i = 0; i < m; ++i) {
      std::copy_n(p.data().data() + i * pc, pc, out.data() + i * n + col);
    }
    col += pc;
  }
  return make_result(m, n, std::move(out), parts, [m, n](Node &self) {
    std::size_t col = 0;
    for (std::size_t k = 0; k < self.parents.size(); ++k) {
      const std::size_t pc = self.parents[k]->shape[1];
      if (double *g = grad_of(self, k)) {
        for (std::size_t i = 0; i < m; ++i) {
          for (std::size_t j = 0; j < pc; ++j) g[i * pc + j] += self.grad[i * n + col + j];
        }
      }
      col += pc;
    }
  });
}

Tensor slice_rows(const Tensor &a, std::size_t begin, std::size_t end) {
  require_defined("slice_rows", a);
  if (begin > end || end > a.rows()) shape_error("slice_rows", a.shape(), {begin, end});
  const std::size_t n = a.cols();
  std::vector<double> out(a.data().begin() + begin * n, a.data().begin() + end * n);
  return make_result(end - begin, n, std::move(out), {a}, [begin, n](Node &self) {
    if (double *g = grad_of(self, 0)) {
      for (std::size_t i = 0; i < self.grad.size(); ++i) g[begin * n + i] += self.grad[i];
    }
  });
}

Tensor slice_cols(const Tensor &a, std::size_t begin, std::size_t end) {
  require_defined("slice_cols", a);
  if (begin > end || end > a.cols()) shape_error("slice_cols", a.shape(), {begin, end});
  const std::size_t m = a.rows(), n = a.cols(), w = end - begin;
  std::vector<double> out(m * w);
  for (std::size_t i = 0; i < m; ++i) {
    std::copy_n(a.data().data() + i * n + begin, w, out.data() + i * w);
  }
  return make_result(m, w, std::move(out), {a}, [m, n, w, begin](Node &self) {
    if (double *g = grad_of(self, 0)) {
      for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < w; ++j) g[i * n + begin + j] += self.grad[i * w + j];
      }
    }
  });
}

Tensor softmax_rows(const Tensor &a, bool causal) {
  require_defined("softmax_rows", a);
  const std::size_t m = a.rows(), n = a.cols();
  std::vector<double> out(m * n, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    const double *row = a.data().data() + i * n;
    const std::size_t limit = causal ? std::min(n, i + 1) : n;
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < limit; ++j) mx = std::max(mx, row[j]);
    double total = 0.0;
    for (std::size_t j = 0; j < limit; ++j) {
      out[i * n + j] = std::exp(row[j] - mx);
      total += out[i * n + j];
    }
    for (std::size_t j = 0; j < limit; ++j) out[i * n + j] /= total;
  }
  return make_result(m, n, std::move(out), {a}, [m, n](Node &self) {
    double *g = grad_of(self, 0);
    if (g == nullptr) return;
    for (std::size_t i = 0; i < m; ++i) {
      const double *y = self.data.data() + i * n;
      const double *dy = self.grad.data() + i * n;
      double dot = 0.0;
      for (std::size_t j = 0; j < n; ++j) dot += y[j] * dy[j];
      for (std::size_t j = 0; j < n; ++j) g[i * n + j] += y[j] * (dy[j] - dot);
    }
  });
}

Tensor mean(const std::vector<Tensor> &parts) {
  if (parts.empty()) throw Error(ErrorCode::kEmptyGraph, "mean of zero tensors");
  for (const Tensor &p : parts) {
    require_defined("mean", p);
    if (p.shape() != parts[0].shape()) shape_error("mean", parts[0].shape(), p.shape());
  }
  const std::size_t count = parts.size();
  std::vector<double> out(parts[0].numel(), 0.0);
  for (const Tensor &p : parts) {
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += p.data()[i];
  }
  for (double &x : out) x /= static_cast<double>(count);
  return make_result(parts[0].rows(), parts[0].cols(), std::move(out), parts,
                     [count](Node &self) {
                       const double inv = 1.0 / static_cast<double>(count);
                       for (std::size_t k = 0; k < self.parents.size(); ++k) {
                         if (double *g = grad_of(self, k)) {
                           for (std::size_t i = 0; i < self.grad.size(); ++i) {
                             g[i] += self.grad[i] * inv;
                           }
                         }
                       }
                     });
}

Tensor max_pool_rows(const Tensor &a) {
  require_defined("max_pool_rows", a);
  const std::size_t m = a.rows(), n = a.cols();
  if (m == 0) shape_error("max_pool_rows", a.shape(), {1, n});
  std::vector<double> out(n);
  std::vector<std::size_t> arg(n, 0);
  for (std::size_t j = 0; j < n; ++j) {
    out[j] = a(0, j);
    for (std::size_t i = 1; i < m; ++i) {
      if (a(i, j) > out[j]) {
        out[j] = a(i, j);
        arg[j] = i;
      }
    }
  }
  return make_result(1, n, std::move(out), {a}, [arg, n](Node &self) {
    if (double *g = grad_of(self, 0)) {
      for (std::size_t j = 0; j < n; ++j) g[arg[j] * n + j] += self.grad[j];
    }
  });
}

Tensor gather_rows(const Tensor &table, std::span<const std::uint32_t> ids) {
  require_defined("gather_rows", table);
  const std::size_t n = table.cols();
  std::vector<double> out(ids.size() * n);
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] >= table.rows()) shape_error("gather_rows", table.shape(), {ids[i]});
    std::copy_n(table.data().data() + ids[i] * n, n, out.data() + i * n);
  }
  std::vector<std::uint32_t> rows(ids.begin(), ids.end());
  return make_result(ids.size(), n, std::move(out), {table},
                     [rows = std::move(rows), n](Node &self) {
                       if (double *g = grad_of(self, 0)) {
                         for (std::size_t i = 0; i < rows.size(); ++i) {
                           double *dst = g + static_cast<std::size_t>(rows[i]) * n;
                           for (std::size_t j = 0; j < n; ++j) dst[j] += self.grad[i * n + j];
                         }
                       }
                     });
}

Tensor reshape(const Tensor &a, std::size_t rows, std::size_t cols) {
  require_defined("reshape", a);
  if (rows * cols != a.numel()) shape_error("reshape", a.shape(), {rows, cols});
  std::vector<double> out(a.data().begin(), a.data().end());
  return make_result(rows, cols, std::move(out), {a}, [](Node &self) {
    if (double *g = grad_of(self, 0)) {
      for (std::size_t i = 0; i < self.grad.size(); ++i) g[i] += self.grad[i];
    }
  });
}

Tensor transpose(const Tensor &a) {
  require_defined("transpose", a);
  const std::size_t m = a.rows(), n = a.cols();
  std::vector<double> out(m * n);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) out[j * m + i] = a(i, j);
  }
  return make_result(n, m, std::move(out), {a}, [m, n](Node &self) {
    if (double *g = grad_of(self, 0)) {
      for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < n; ++j) g[i * n + j] += self.grad[j * m + i];
      }
    }
  });
}

Tensor sum(const Tensor &a) {
  require_defined("sum", a);
  double total = 0.0;
  for (double x : a.data()) total += x;
  return make_result(1, 1, {total}, {a}, [](Node &self) {
    if (double *g = grad_of(self, 0)) {
      const std::size_t len = self.parents[0]->data.size();
      for (std::size_t i = 0; i < len; ++i) g[i] += self.grad[0];
    }
  });
}

Tensor layer_norm(const Tensor &x, const Tensor &gamma, const Tensor &beta,
                  double eps) {
  require_defined("layer_norm", x);
  const std::size_t m = x.rows(), n = x.cols();
  if (gamma.shape() != Shape{1, n}) shape_error("layer_norm(gamma)", x.shape(), gamma.shape());
  if (beta.shape() != Shape{1, n}) shape_error("layer_norm(beta)", x.shape(), beta.shape());
  std::vector<double> out(m * n);
  std::vector<double> xhat(m * n);
  std::vector<double> rstd(m);
  for (std::size_t i = 0; i < m; ++i) {
    const double *row = x.data().data() + i * n;
    double mu = 0.0;
    for (std::size_t j = 0; j < n; ++j) mu += row[j];
    mu /= static_cast<double>(n);
    double var = 0.0;
    for (std::size_t j = 0; j < n; ++j) var += (row[j] - mu) * (row[j] - mu);
    var /= static_cast<double>(n);
    rstd[i] = 1.0 / std::sqrt(var + eps);
    for (std::size_t j = 0; j < n; ++j) {
      xhat[i * n + j] = (row[j] - mu) * rstd[i];
      out[i * n + j] = xhat[i * n + j] * gamma.data()[j] + beta.data()[j];
    }
  }
  return make_result(
      m, n, std::move(out), {x, gamma, beta},
      [m, n, xhat = std::move(xhat), rstd = std::move(rstd)](Node &self) {
        const Node &pg = *self.parents[1];
        double *gx = grad_of(self, 0);
        double *gg = grad_of(self, 1);
        double *gb = grad_of(self, 2);
        std::vector<double> dxhat(n);
        for (std::size_t i = 0; i < m; ++i) {
          const double *dy = self.grad.data() + i * n;
          const double *xh = xhat.data() + i * n;
          double mean_d = 0.0, mean_dx = 0.0;
          for (std::size_t j = 0; j < n; ++j) {
            if (gg != nullptr) gg[j] += dy[j] * xh[j];
            if (gb != nullptr) gb[j] += dy[j];
            dxhat[j] = dy[j] * pg.data[j];
            mean_d += dxhat[j];
            mean_dx += dxhat[j] * xh[j];
          }
          if (gx == nullptr) continue;
          mean_d /= static_cast<double>(n);
          mean_dx /= static_cast<double>(n);
          for (std::size_t j = 0; j < n; ++j) {
            gx[i * n + j] += rstd[i] * (dxhat[j] - mean_d - xh[j] * mean_dx);
          }
        }
      });
}

Tensor gelu(const Tensor &a) {
  require_defined("gelu", a);
  std::vector<double> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double x = a.data()[i];
    out[i] = 0.5 * x * (1.0 + std::tanh(kGeluC * (x + kGeluA * x * x * x)));
  }
  return make_result(a.rows(), a.cols(), std::move(out), {a}, [](Node &self) {
    double *g = grad_of(self, 0);
    if (g == nullptr) return;
    const Node &pa = *self.parents[0];
    for (std::size_t i = 0; i < self.grad.size(); ++i) {
      const double x = pa.data[i];
      const double t = std::tanh(kGeluC * (x + kGeluA * x * x * x));
      const double d = 0.5 * (1.0 + t) +
                       0.5 * x * (1.0 - t * t) * kGeluC * (1.0 + 3.0 * kGeluA * x * x);
      g[i] += self.grad[i] * d;
    }
  });
}

Tensor cross_entropy_sum(const Tensor &logits, std::span<const std::size_t> targets) {
  require_defined("cross_entropy_sum", logits);
  const std::size_t m = logits.rows(), n = logits.cols();
  if (targets.size() != m) shape_error("cross_entropy_sum", logits.shape(), {targets.size()});
  std::vector<double> probs(m * n, 0.0);
  double total = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    if (targets[i] == kIgnoreTarget) continue;
    if (targets[i] >= n) shape_error("cross_entropy_sum(target)", logits.shape(), {targets[i]});
    const double *row = logits.data().data() + i * n;
    const double mx = *std::max_element(row, row + n);
    double z = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      probs[i * n + j] = std::exp(row[j] - mx);
      z += probs[i * n + j];
    }
    for (std::size_t j = 0; j < n; ++j) probs[i * n + j] /= z;
    total += -(row[targets[i]] - mx - std::log(z));
  }
  std::vector<std::size_t> tgt(targets.begin(), targets.end());
  return make_result(1, 1, {total}, {logits},
                     [m, n, probs = std::move(probs), tgt = std::move(tgt)](Node &self) {
                       double *g = grad_of(self, 0);
                       if (g == nullptr) return;
                       const double up = self.grad[0];
                       for (std::size_t i = 0; i < m; ++i) {
                         if (tgt[i] == kIgnoreTarget) continue;
                         for (std::size_t j = 0; j < n; ++j) g[i * n + j] += up * probs[i * n + j];
                         g[i * n + tgt[i]] -= up;
                       }
                     });
}

std::vector<std::string> primitive_set() {
  return {"matmul",      "matmul_bt",     "add",        "mul",
          "scale",       "concat",        "slice_rows", "slice_cols",
          "softmax_rows", "mean",         "max_pool_rows", "gather_rows",
          "reshape",     "transpose",     "sum",        "layer_norm",
          "gelu",        "cross_entropy_sum"};
}

void backward(const Tensor &loss) {
  require_defined("backward", loss);
  if (loss.numel() != 1) {
    throw Error(ErrorCode::kNotScalar, "backward on " + shape_string(loss.shape()));
  }
  if (!loss.requires_grad()) return;

  // Iterative post-order DFS gives a topological order (parents first).
  std::vector<Node *> order;
  std::unordered_set<Node *> visited;
  std::vector<std::pair<Node *, std::size_t>> stack{{&loss.node(), 0}};
  visited.insert(&loss.node());
  while (!stack.empty()) {
    auto &[node, next] = stack.back();
    if (next < node->parents.size()) {
      Node *parent = node->parents[next++].get();
      if (parent->requires_grad && visited.insert(parent).second) {
        stack.emplace_back(parent, 0);
      }
      continue;
    }
    order.push_back(node);
    stack.pop_back();
  }
  for (Node *node : order) {
    if (!node->is_leaf) node->grad.assign(node->data.size(), 0.0);
  }
  Node &root = loss.node();
  root.ensure_grad();
  if (!root.is_leaf) root.grad[0] = 1.0;
  else root.grad[0] += 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node *node = *it;
    if (!node->is_leaf && node->backward) node->backward(*node);
  }
}

}  // namespace kgdial::compute
