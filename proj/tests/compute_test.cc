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

#include <cmath>

#include "gtest/gtest.h"
#include "kgdial/errors.h"
#include "kgdial/random.h"

namespace kgdial::compute {
namespace {

Tensor random_tensor(Rng &rng, std::size_t rows, std::size_t cols, bool grad = true,
                     double spread = 1.0) {
  std::vector<double> v(rows * cols);
  for (double &x : v) x = spread * rng.normal();
  return Tensor::from(rows, cols, std::move(v), grad);
}

TEST(Softmax, Examples) {
  Tensor y = softmax_rows(Tensor::from(1, 2, {0.0, 0.0}));
  EXPECT_DOUBLE_EQ(y(0, 0), 0.5);
  EXPECT_DOUBLE_EQ(y(0, 1), 0.5);
  // Oracle: scalar exp-normalize.
  const double e1 = std::exp(1.0), e2 = std::exp(2.0);
  Tensor z = softmax_rows(Tensor::from(1, 2, {1.0, 2.0}));
  EXPECT_NEAR(z(0, 0), e1 / (e1 + e2), 1e-15);
  EXPECT_NEAR(z(0, 0), 0.26894, 1e-5);
  EXPECT_NEAR(z(0, 1), 0.73106, 1e-5);
}

TEST(Softmax, LargeLogitsDoNotOverflow) {
  Tensor y = softmax_rows(Tensor::from(1, 3, {1000.0, 1001.0, -1000.0}));
  for (double v : y.data()) EXPECT_TRUE(std::isfinite(v));
  EXPECT_NEAR(y(0, 0) + y(0, 1) + y(0, 2), 1.0, 1e-12);
}

TEST(Softmax, CausalMaskZeroesFuture) {
  Tensor y = softmax_rows(Tensor::from(2, 2, {3.0, 9.0, 1.0, 1.0}), true);
  EXPECT_DOUBLE_EQ(y(0, 0), 1.0);
  EXPECT_DOUBLE_EQ(y(0, 1), 0.0);
  EXPECT_DOUBLE_EQ(y(1, 0), 0.5);
}

TEST(Softmax, RowsAreProbabilityVectors) {
  Rng rng(11);
  for (int i = 0; i < 1000; ++i) {
    const std::size_t n = 1 + rng.below(16);
    Tensor y = softmax_rows(random_tensor(rng, 1, n, false, 10.0));
    double total = 0.0;
    for (double v : y.data()) {
      EXPECT_GE(v, 0.0);
      total += v;
    }
    EXPECT_NEAR(total, 1.0, 1e-6);
  }
}

TEST(MaxPool, PerColumnMax) {
  Tensor y = max_pool_rows(Tensor::from(2, 2, {1, 5, 3, 2}));
  EXPECT_EQ(y.shape(), (Shape{1, 2}));
  EXPECT_DOUBLE_EQ(y(0, 0), 3.0);
  EXPECT_DOUBLE_EQ(y(0, 1), 5.0);
}

TEST(Mean, IdenticalTensorsAreExact) {
  Rng rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> v(12);
    // Dyadic values so every partial sum is exact.
    for (double &x : v) x = static_cast<double>(static_cast<int>(rng.below(2000)) - 1000) / 64.0;
    Tensor t = Tensor::from(3, 4, v);
    const std::size_t k = 1 + rng.below(8);
    Tensor m = mean(std::vector<Tensor>(k, t));
    for (std::size_t i = 0; i < v.size(); ++i) EXPECT_EQ(m.data()[i], v[i]);
  }
}

TEST(Concat, ThenSliceIsIdentity) {
  Rng rng(4);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t r = 1 + rng.below(5), c1 = 1 + rng.below(5), c2 = 1 + rng.below(5);
    Tensor a = random_tensor(rng, r, c1, false), b = random_tensor(rng, r, c2, false);
    Tensor cat = concat({a, b}, 1);
    Tensor a2 = slice_cols(cat, 0, c1), b2 = slice_cols(cat, c1, c1 + c2);
    EXPECT_TRUE(std::equal(a.data().begin(), a.data().end(), a2.data().begin()));
    EXPECT_TRUE(std::equal(b.data().begin(), b.data().end(), b2.data().begin()));
    Tensor d = random_tensor(rng, c2, c1, false);
    Tensor rows = concat({a, d}, 0);
    Tensor d2 = slice_rows(rows, r, r + c2);
    EXPECT_TRUE(std::equal(d.data().begin(), d.data().end(), d2.data().begin()));
  }
}

TEST(ShapeErrors, AreReported) {
  try {
    matmul(Tensor::zeros(2, 3), Tensor::zeros(2, 3));
    FAIL();
  } catch (const Error &e) {
    EXPECT_EQ(e.code(), ErrorCode::kShapeMismatch);
  }
  EXPECT_THROW(add(Tensor::zeros(2, 3), Tensor::zeros(3, 2)), Error);
  EXPECT_THROW(concat({Tensor::zeros(2, 3), Tensor::zeros(2, 2)}, 0), Error);
}

TEST(Backward, QuadraticGradient) {
  Tensor x = Tensor::from(1, 3, {1, 2, 3}, true);
  backward(sum(mul(x, x)));
  EXPECT_EQ(std::vector<double>(x.grad().begin(), x.grad().end()),
            (std::vector<double>{2, 4, 6}));
}

TEST(Backward, ConstantLossLeavesZeroGrad) {
  Tensor x = Tensor::from(1, 3, {1, 2, 3}, true);
  x.zero_grad();
  Tensor loss = sum(Tensor::from(1, 2, {4, 5}));
  backward(loss);
  for (double g : x.grad()) EXPECT_EQ(g, 0.0);
}

TEST(Backward, GatherRouteIsOneHot) {
  Tensor table = Tensor::zeros(4, 3, true);
  std::vector<std::uint32_t> ids = {2};
  backward(sum(gather_rows(table, ids)));
  for (std::size_t r = 0; r < 4; ++r) {
    for (std::size_t c = 0; c < 3; ++c) {
      EXPECT_EQ(table.grad()[r * 3 + c], r == 2 ? 1.0 : 0.0);
    }
  }
}

TEST(Backward, AccumulatesAcrossCalls) {
  Tensor x = Tensor::from(1, 1, {3}, true);
  backward(mul(x, x));
  backward(mul(x, x));
  EXPECT_DOUBLE_EQ(x.grad()[0], 12.0);
}

TEST(Backward, RejectsNonScalar) {
  Tensor x = Tensor::from(1, 2, {1, 2}, true);
  try {
    backward(scale(x, 2.0));
    FAIL();
  } catch (const Error &e) {
    EXPECT_EQ(e.code(), ErrorCode::kNotScalar);
  }
}

TEST(Backward, NoGradGuardSkipsRecording) {
  Tensor x = Tensor::from(1, 1, {3}, true);
  NoGradGuard guard;
  EXPECT_FALSE(mul(x, x).requires_grad());
}

TEST(CrossEntropy, UniformAndIgnored) {
  Tensor logits = Tensor::zeros(2, 100);
  std::vector<std::size_t> targets = {7, kIgnoreTarget};
  EXPECT_NEAR(cross_entropy_sum(logits, targets).item(), std::log(100.0), 1e-12);
}

TEST(GradCheck, ScalarQuadratic) {
  Tensor x = Tensor::from(1, 1, {3.0}, true);
  auto report = check_gradients([&] { return mul(x, x); }, {{"x", x}}, {.step = 1e-5});
  EXPECT_TRUE(report.passed);
  EXPECT_NEAR(x.grad()[0], 6.0, 1e-12);
  EXPECT_LE(report.entries[0].max_abs_error, 1e-6);
}

TEST(GradCheck, ZeroToleranceFailsOnNonlinear) {
  Tensor x = Tensor::from(1, 3, {0.3, 1.1, -0.7}, true);
  auto f = [&] { return sum(gelu(mul(x, mul(x, x)))); };
  auto report = check_gradients(f, {{"x", x}}, {.tolerance = 0.0});
  EXPECT_FALSE(report.passed);
  EXPECT_GT(report.max_rel_error(), 0.0);
}

TEST(GradCheck, DetectsWrongGradient) {
  // A tensor not connected to the loss gets a zero analytic gradient, which
  // the oracle must flag when the numeric derivative is nonzero.
  Tensor x = Tensor::from(1, 1, {2.0}, true);
  Tensor y = Tensor::from(1, 1, {2.0}, true);
  auto f = [&] {
    Tensor detached = Tensor::from(1, 1, {y.data()[0]});
    return add(mul(x, x), mul(detached, detached));
  };
  auto report = check_gradients(f, {{"x", x}, {"y", y}});
  EXPECT_TRUE(report.entries[0].passed);
  EXPECT_FALSE(report.entries[1].passed);
}

// Every primitive, on random small shapes, against central differences.
class PrimitiveGradients : public ::testing::TestWithParam<Precision> {
 protected:
  void SetUp() override { set_precision(GetParam()); }
  void TearDown() override { set_precision(Precision::k64); }

  GradCheckOptions options() const {
    if (GetParam() == Precision::k64) return {.step = 1e-5, .tolerance = 1e-6};
    // Float storage limits the numeric side to ~1e-6 absolute accuracy, so
    // errors are measured relative to max(|g|, 1).
    return {.step = 1e-2, .tolerance = 1e-4, .abs_floor = 1.0, .five_point = true};
  }

  void check(const std::string &name, const std::function<Tensor()> &f,
             const std::vector<NamedTensor> &params) {
    auto report = check_gradients(f, params, options());
    for (const auto &e : report.entries) {
      EXPECT_TRUE(e.passed) << name << "/" << e.name << " rel=" << e.max_rel_error;
    }
  }
};

TEST_P(PrimitiveGradients, AllPrimitives) {
  Rng rng(21);
  for (int trial = 0; trial < 5; ++trial) {
    const std::size_t m = 1 + rng.below(4), k = 1 + rng.below(4), n = 1 + rng.below(4);
    auto round_all = [](Tensor t) {
      for (double &x : t.mutable_data()) x = round_to_precision(x);
      return t;
    };
    Tensor a = round_all(random_tensor(rng, m, k));
    Tensor b = round_all(random_tensor(rng, k, n));
    Tensor c = round_all(random_tensor(rng, m, k));
    Tensor bt = round_all(random_tensor(rng, n, k));
    Tensor row = round_all(random_tensor(rng, 1, k));
    Tensor proj_mn = random_tensor(rng, m, n, false);
    Tensor proj_mk = random_tensor(rng, m, k, false);
    auto weighted = [](const Tensor &t, const Tensor &w) { return sum(mul(t, w)); };

    check("matmul", [&] { return weighted(matmul(a, b), proj_mn); }, {{"a", a}, {"b", b}});
    check("matmul_bt", [&] { return weighted(matmul_bt(a, bt), proj_mn); },
          {{"a", a}, {"bt", bt}});
    check("add", [&] { return weighted(add(a, c), proj_mk); }, {{"a", a}, {"c", c}});
    check("add_broadcast", [&] { return weighted(add(a, row), proj_mk); },
          {{"a", a}, {"row", row}});
    check("mul", [&] { return weighted(mul(a, c), proj_mk); }, {{"a", a}, {"c", c}});
    check("scale", [&] { return weighted(scale(a, -1.5), proj_mk); }, {{"a", a}});
    check("concat0", [&] { return weighted(slice_rows(concat({a, c}, 0), m / 2, m + 1), slice_rows(concat({proj_mk, proj_mk}, 0), m / 2, m + 1)); },
          {{"a", a}, {"c", c}});
    check("concat1", [&] { return weighted(concat({a, matmul(a, b)}, 1), concat({proj_mk, proj_mn}, 1)); },
          {{"a", a}, {"b", b}});
    check("slice_cols", [&] { return weighted(slice_cols(a, k / 2, k), slice_cols(proj_mk, k / 2, k)); },
          {{"a", a}});
    check("softmax", [&] { return weighted(softmax_rows(a), proj_mk); }, {{"a", a}});
    Tensor sq = round_all(random_tensor(rng, m, m));
    Tensor proj_mm = random_tensor(rng, m, m, false);
    check("softmax_causal", [&] { return weighted(softmax_rows(sq, true), proj_mm); },
          {{"sq", sq}});
    check("mean", [&] { return weighted(mean({a, c, a}), proj_mk); }, {{"a", a}, {"c", c}});
    check("max_pool", [&] { return weighted(max_pool_rows(a), row); }, {{"a", a}});
    Tensor table = round_all(random_tensor(rng, 5, k));
    std::vector<std::uint32_t> ids = {1, 3, 1};
    check("gather", [&] { return weighted(gather_rows(table, ids), slice_rows(concat({proj_mk, proj_mk, proj_mk, proj_mk}, 0), 0, 3)); },
          {{"table", table}});
    check("reshape", [&] { return weighted(reshape(a, 1, m * k), reshape(proj_mk, 1, m * k)); },
          {{"a", a}});
    check("transpose", [&] { return weighted(transpose(a), transpose(proj_mk)); }, {{"a", a}});
    Tensor gamma = round_all(random_tensor(rng, 1, k)), beta = round_all(random_tensor(rng, 1, k));
    if (k > 1) {
      check("layer_norm", [&] { return weighted(layer_norm(a, gamma, beta), proj_mk); },
            {{"a", a}, {"gamma", gamma}, {"beta", beta}});
    }
    check("gelu", [&] { return weighted(gelu(a), proj_mk); }, {{"a", a}});
    std::vector<std::size_t> targets(m);
    for (std::size_t i = 0; i < m; ++i) targets[i] = i == 0 ? kIgnoreTarget : rng.below(k);
    check("cross_entropy", [&] { return cross_entropy_sum(a, targets); }, {{"a", a}});
  }
}

INSTANTIATE_TEST_SUITE_P(Precisions, PrimitiveGradients,
                         ::testing::Values(Precision::k64, Precision::k32));

TEST(PrimitiveSet, ListsModelOps) {
  auto ops = primitive_set();
  for (const char *needed : {"matmul", "add", "mul", "concat", "softmax_rows", "mean",
                             "max_pool_rows", "gather_rows", "reshape", "transpose",
                             "scale", "cross_entropy_sum"}) {
    EXPECT_NE(std::find(ops.begin(), ops.end(), needed), ops.end()) << needed;
  }
}

}  // namespace
}  // namespace kgdial::compute
