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

// Minimal dense tensor library with reverse-mode differentiation. Every
// tensor is a row-major matrix; scalars are 1x1. Values are held as double;
// in 32-bit mode each op rounds its output to float precision so that
// results match single-precision arithmetic at the storage boundary.

#ifndef KGDIAL_COMPUTE_H_
#define KGDIAL_COMPUTE_H_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace kgdial::compute {

enum class Precision { k32 = 32, k64 = 64 };

void set_precision(Precision p);
Precision precision();
// Rounds to the active storage precision.
double round_to_precision(double x);

using Shape = std::vector<std::size_t>;

std::string shape_string(const Shape &shape);

namespace detail {

struct Node {
  Shape shape;
  std::vector<double> data;
  std::vector<double> grad;
  bool requires_grad = false;
  bool is_leaf = true;
  std::vector<std::shared_ptr<Node>> parents;
  // Adds this node's grad into its parents' grads.
  std::function<void(Node &)> backward;

  void ensure_grad() {
    if (grad.size() != data.size()) grad.assign(data.size(), 0.0);
  }
};

}  // namespace detail

class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(std::size_t rows, std::size_t cols,
                      bool requires_grad = false);
  static Tensor full(std::size_t rows, std::size_t cols, double value);
  static Tensor from(std::size_t rows, std::size_t cols,
                     std::vector<double> values, bool requires_grad = false);
  static Tensor scalar(double value);

  bool defined() const { return node_ != nullptr; }
  const Shape &shape() const { return node_->shape; }
  std::size_t rows() const { return node_->shape[0]; }
  std::size_t cols() const { return node_->shape[1]; }
  std::size_t numel() const { return node_->data.size(); }

  std::span<const double> data() const { return node_->data; }
  std::span<double> mutable_data() { return node_->data; }
  double operator()(std::size_t r, std::size_t c) const {
    return node_->data[r * cols() + c];
  }
  // Value of a single-element tensor.
  double item() const;

  bool requires_grad() const { return node_->requires_grad; }
  // Only meaningful on leaves.
  void set_requires_grad(bool on) { node_->requires_grad = on; }
  bool is_leaf() const { return node_->is_leaf; }

  // Empty until a backward pass reaches this tensor.
  std::span<const double> grad() const { return node_->grad; }
  std::span<double> mutable_grad() {
    node_->ensure_grad();
    return node_->grad;
  }
  void zero_grad() { node_->grad.assign(node_->data.size(), 0.0); }

  // Leaf copy of the values, detached from any graph.
  Tensor detach() const;

  // Identity of the underlying storage.
  bool same_storage(const Tensor &other) const { return node_ == other.node_; }

  detail::Node &node() const { return *node_; }
  const std::shared_ptr<detail::Node> &shared_node() const { return node_; }
  explicit Tensor(std::shared_ptr<detail::Node> node) : node_(std::move(node)) {}

 private:
  std::shared_ptr<detail::Node> node_;
};

// Disables graph recording on this thread while alive.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard &) = delete;
  NoGradGuard &operator=(const NoGradGuard &) = delete;

 private:
  bool previous_;
};

bool grad_enabled();

// --- primitives -----------------------------------------------------------

// [m x k] . [k x n]
Tensor matmul(const Tensor &a, const Tensor &b);
// [m x k] . [n x k]^T
Tensor matmul_bt(const Tensor &a, const Tensor &b);
// Same shapes, or b of shape 1 x n broadcast over the rows of a.
Tensor add(const Tensor &a, const Tensor &b);
Tensor mul(const Tensor &a, const Tensor &b);
Tensor scale(const Tensor &a, double s);
// axis 0 stacks rows, axis 1 stacks columns.
Tensor concat(const std::vector<Tensor> &parts, int axis);
Tensor slice_rows(const Tensor &a, std::size_t begin, std::size_t end);
Tensor slice_cols(const Tensor &a, std::size_t begin, std::size_t end);
// Softmax over each row, computed with max subtraction. With causal set,
// entry (i, j) for j > i is excluded and comes out as exactly 0.
Tensor softmax_rows(const Tensor &a, bool causal = false);
// Elementwise mean of equally shaped tensors.
Tensor mean(const std::vector<Tensor> &parts);
// Column-wise maximum over all rows: [m x n] -> [1 x n]. Ties route the
// gradient to the first maximal row.
Tensor max_pool_rows(const Tensor &a);
Tensor gather_rows(const Tensor &table, std::span<const std::uint32_t> ids);
Tensor reshape(const Tensor &a, std::size_t rows, std::size_t cols);
Tensor transpose(const Tensor &a);
Tensor sum(const Tensor &a);
Tensor layer_norm(const Tensor &x, const Tensor &gamma, const Tensor &beta,
                  double eps = 1e-5);
// Tanh approximation.
Tensor gelu(const Tensor &a);

inline constexpr std::size_t kIgnoreTarget = std::numeric_limits<std::size_t>::max();

// Sum over rows of -log softmax(logits[r])[targets[r]], fused with
// log-softmax. Rows whose target is kIgnoreTarget contribute nothing.
Tensor cross_entropy_sum(const Tensor &logits, std::span<const std::size_t> targets);

std::vector<std::string> primitive_set();

// Populates grads of every requires-grad leaf reachable from loss.
// Leaf grads accumulate across calls. Throws Error(kNotScalar).
void backward(const Tensor &loss);

// --- finite-difference oracle ---------------------------------------------

struct NamedTensor {
  std::string name;
  Tensor tensor;
};

struct GradCheckOptions {
  double step = 1e-5;
  double tolerance = 1e-6;
  // Tensors larger than this are checked on a seeded random sample of this
  // many entries.
  std::size_t max_entries_per_tensor = 512;
  // Denominator floor for the relative error so that near-zero gradients
  // are compared absolutely.
  double abs_floor = 1e-6;
  // Fourth-order stencil (f(-2h) - 8f(-h) + 8f(h) - f(2h)) / 12h instead of
  // the central difference; useful when step must be large.
  bool five_point = false;
  std::uint64_t seed = 7;
};

struct GradCheckEntry {
  std::string name;
  std::size_t checked = 0;
  double max_rel_error = 0.0;
  double max_abs_error = 0.0;
  bool passed = true;
};

struct GradCheckReport {
  std::vector<GradCheckEntry> entries;
  bool passed = true;
  double max_rel_error() const;
};

GradCheckReport check_gradients(const std::function<Tensor()> &f,
                                const std::vector<NamedTensor> &params,
                                const GradCheckOptions &options = {});

}  // namespace kgdial::compute

#endif  // KGDIAL_COMPUTE_H_
