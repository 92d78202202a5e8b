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

#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "cams/errors.hpp"
#include "cams/gradcheck.hpp"
#include "cams/ops.hpp"
#include "cams/optim.hpp"
#include "support/checks.hpp"

namespace cams {
namespace {

using testing::random_tensor;

void expect_values(const Tensor& t, const std::vector<double>& expected, double tol = 0) {
  ASSERT_EQ(t.size(), expected.size());
  for (std::size_t i = 0; i < expected.size(); ++i) {
    EXPECT_NEAR(t[i], expected[i], tol) << "index " << i;
  }
}

TEST(TensorTest, ShapeMatchesData) {
  EXPECT_THROW(Tensor({2, 3}, std::vector<Real>(5)), DimensionError);
  EXPECT_THROW(Tensor({2, 0}), DimensionError);
  Tensor t({2, 3});
  EXPECT_EQ(t.size(), 6u);
  EXPECT_EQ(t.rows(), 2u);
  EXPECT_EQ(t.cols(), 3u);
}

TEST(TensorTest, NonFiniteValuesAreRejected) {
  const Real nan = std::numeric_limits<Real>::quiet_NaN();
  EXPECT_THROW(Tensor({1}, std::vector<Real>{nan}), NumericError);
  Tensor x({1}, std::vector<Real>{1000});
  try {
    (void)exp(x);
    FAIL() << "exp(1000) should overflow";
  } catch (const NumericError& e) {
    EXPECT_NE(std::string(e.what()).find("exp"), std::string::npos);
  }
}

TEST(TensorTest, GradPresentOnlyWhenTracked) {
  Tensor a({2}, {1, 2}, true);
  Tensor b({2}, {3, 4});
  sum(mul(a, b)).backward();
  ASSERT_TRUE(a.has_grad());
  EXPECT_EQ(a.grad().size(), a.size());
  EXPECT_FALSE(b.has_grad());
}

TEST(MatmulTest, IdentityLeavesMatrixUnchanged) {
  const Tensor m = Tensor::matrix(2, 2, {1, 2, 3, 4});
  expect_values(matmul(Tensor::eye(2), m), {1, 2, 3, 4});
}

TEST(MatmulTest, HandComputedProduct) {
  const Tensor a = Tensor::matrix(2, 2, {1, 2, 3, 4});
  const Tensor b = Tensor::matrix(2, 1, {5, 6});
  expect_values(matmul(a, b), {17, 39});
}

TEST(MatmulTest, ZeroMatrixAbsorbs) {
  Rng rng(3);
  const Tensor z = Tensor::full({2, 3}, 0);
  expect_values(matmul(z, random_tensor({3, 4}, rng)), std::vector<double>(8, 0.0));
}

TEST(MatmulTest, MismatchNamesBothShapes) {
  try {
    (void)matmul(Tensor({2, 3}), Tensor({2, 3}));
    FAIL();
  } catch (const DimensionError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("[2x3]"), std::string::npos) << msg;
  }
}

TEST(MatmulTest, MatchesNaiveProductAndIsAssociative) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(seed);
    const Tensor a = random_tensor({3, 5}, rng);
    const Tensor b = random_tensor({5, 4}, rng);
    const Tensor c = random_tensor({4, 2}, rng);
    const auto naive = testing::naive_matmul(a.data(), b.data(), 3, 5, 4);
    expect_values(matmul(a, b), naive, 1e-12);
    const Tensor left = matmul(matmul(a, b), c);
    const Tensor right = matmul(a, matmul(b, c));
    for (std::size_t i = 0; i < left.size(); ++i) EXPECT_NEAR(left[i], right[i], 1e-9);
  }
}

TEST(SoftmaxTest, UniformLogits) {
  expect_values(softmax_rows(Tensor::matrix(1, 3, {2, 2, 2})), {1.0 / 3, 1.0 / 3, 1.0 / 3},
                1e-15);
}

TEST(SoftmaxTest, LogTwoGivesOneThirdTwoThirds) {
  expect_values(softmax_rows(Tensor::matrix(1, 2, {0, std::log(2.0)})),
                {1.0 / 3, 2.0 / 3}, 1e-15);
}

TEST(SoftmaxTest, ShiftInvariantAndNormalised) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(seed);
    const Tensor x = random_tensor({4, 7}, rng, -50, 50);
    const Tensor p = softmax_rows(x);
    const Tensor q = softmax_rows(add(x, Tensor::full({4, 7}, 13.5)));
    for (std::size_t r = 0; r < 4; ++r) {
      double s = 0;
      for (std::size_t c = 0; c < 7; ++c) {
        s += p.at(r, c);
        EXPECT_GE(p.at(r, c), 0.0);
        EXPECT_NEAR(p.at(r, c), q.at(r, c), 1e-12);
      }
      EXPECT_NEAR(s, 1.0, 1e-9);
    }
  }
}

TEST(SigmoidTest, KnownValues) {
  const Tensor y = sigmoid(Tensor({3}, {0, 30, std::log(3.0)}));
  EXPECT_EQ(y[0], 0.5);
  EXPECT_NEAR(y[1], 1.0, 1e-9);
  EXPECT_NEAR(y[2], 0.75, 1e-15);
}

TEST(LayerNormTest, ConstantRowBecomesZero) {
  const Tensor y = layer_norm(Tensor::matrix(1, 4, {3, 3, 3, 3}), Tensor::full({4}, 1),
                              Tensor::full({4}, 0));
  expect_values(y, {0, 0, 0, 0});
}

TEST(LayerNormTest, AlreadyStandardisedRow) {
  const Tensor y = layer_norm(Tensor::matrix(1, 2, {1, -1}), Tensor::full({2}, 1),
                              Tensor::full({2}, 0), Real{0});
  expect_values(y, {1, -1}, 1e-15);
}

TEST(LayerNormTest, BetaShiftsOutput) {
  Rng rng(5);
  const Tensor x = random_tensor({3, 4}, rng);
  const Tensor g = random_tensor({4}, rng);
  const Tensor b = random_tensor({4}, rng);
  const Tensor y0 = layer_norm(x, g, Tensor::full({4}, 0));
  const Tensor y1 = layer_norm(x, g, b);
  for (std::size_t i = 0; i < y0.size(); ++i) EXPECT_NEAR(y1[i], y0[i] + b[i % 4], 1e-15);
}

TEST(LayerNormTest, WidthMismatchThrows) {
  EXPECT_THROW(layer_norm(Tensor({2, 3}), Tensor::full({4}, 1), Tensor::full({4}, 0)),
               DimensionError);
}

TEST(CrossEntropyTest, PerfectPredictionIsZero) {
  EXPECT_EQ(cross_entropy(Tensor::matrix(2, 2, {1, 0, 0, 1}), {0, 1}).item(), 0.0);
}

TEST(CrossEntropyTest, HalfProbabilityGivesLogTwo) {
  EXPECT_NEAR(cross_entropy(Tensor::matrix(1, 2, {0.5, 0.5}), {1}).item(), std::log(2.0),
              1e-15);
}

TEST(CrossEntropyTest, UniformGivesLogClassCount) {
  EXPECT_NEAR(cross_entropy(Tensor::full({3, 5}, 0.2), {0, 4, 2}).item(), std::log(5.0),
              1e-14);
}

TEST(CrossEntropyTest, ZeroProbabilityIsClampedAndFlagged) {
  CrossEntropyDiagnostics diag;
  const Tensor loss = cross_entropy(Tensor::matrix(1, 2, {1, 0}), {1}, &diag);
  EXPECT_EQ(diag.clamped, 1u);
  EXPECT_NEAR(loss.item(), -std::log(1e-12), 1e-9);
}

TEST(CrossEntropyTest, BadInputsThrow) {
  EXPECT_THROW(cross_entropy(Tensor::matrix(1, 2, {0.5, 0.5}), {2}), IndexError);
  EXPECT_THROW(cross_entropy(Tensor::matrix(1, 2, {0.5, 0.6}), {0}), ContractError);
}

TEST(BackwardTest, SquareGradient) {
  Tensor x({1}, {3}, true);
  sum(square(x)).backward();
  EXPECT_EQ(x.grad()[0], 6.0);
}

TEST(BackwardTest, DisconnectedParameterHasZeroGradient) {
  Tensor x({2}, {1, 2}, true);
  Tensor p({2}, {5, 6}, true);
  p.zero_grad();
  sum(square(x)).backward();
  EXPECT_EQ(p.grad()[0], 0.0);
  EXPECT_EQ(p.grad()[1], 0.0);
}

TEST(BackwardTest, RepeatedCallsAccumulate) {
  Tensor x({1}, {3}, true);
  const Tensor y = sum(square(x));
  y.backward();
  y.backward();
  EXPECT_EQ(x.grad()[0], 12.0);
}

TEST(BackwardTest, NonScalarLossThrows) {
  Tensor x({2}, {1, 2}, true);
  EXPECT_THROW(square(x).backward(), ContractError);
}

TEST(BackwardTest, FusedSoftmaxCrossEntropyGradientIsProbsMinusOneHot) {
  Rng rng(11);
  Tensor logits = random_tensor({3, 4}, rng, -2, 2, true);
  const std::vector<std::size_t> labels = {2, 0, 3};
  softmax_cross_entropy(logits, labels).backward();
  const Tensor p = softmax_rows(logits.detach());
  for (std::size_t r = 0; r < 3; ++r)
    for (std::size_t c = 0; c < 4; ++c) {
      const double expected = (p.at(r, c) - (c == labels[r] ? 1.0 : 0.0)) / 3.0;
      EXPECT_NEAR(logits.grad()[r * 4 + c], expected, 1e-15);
    }
}

TEST(GradCheckTest, SumOfSquares) {
  Rng rng(2);
  Tensor x = random_tensor({8}, rng, -1, 1, true);
  const auto r = finite_difference_check([](const Tensor& t) { return sum(square(t)); }, x);
  EXPECT_LE(r.max_relative_error, 1e-6);
  EXPECT_EQ(r.checked, 8u);
}

TEST(GradCheckTest, ConstantFunction) {
  Tensor x({3}, {1, 2, 3}, true);
  const auto r = finite_difference_check(
      [](const Tensor&) { return Tensor::scalar(4.0); }, x);
  EXPECT_EQ(r.max_relative_error, 0.0);
}

TEST(GradCheckTest, NonDeterministicFunctionIsReported) {
  Tensor x({2}, {1, 2}, true);
  int calls = 0;
  EXPECT_THROW(finite_difference_check(
                   [&](const Tensor& t) {
                     return add(sum(t), Tensor::scalar(Real(++calls)));
                   },
                   x),
               ContractError);
}

TEST(GradCheckTest, EveryPrimitiveOverSeeds) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    for (const auto& c : testing::primitive_gradient_checks(seed)) {
      EXPECT_LE(c.max_relative_error, 1e-4) << c.name << " seed " << seed;
      EXPECT_GT(c.checked, 0u);
    }
  }
}

TEST(DropoutTest, InvertedScalingAndEvalIdentity) {
  Rng rng(4);
  const Tensor x = Tensor::full({50, 40}, 1);
  const Tensor eval = dropout(x, Real{0.5}, rng, false);
  expect_values(eval, std::vector<double>(2000, 1.0));
  const Tensor y = dropout(x, Real{0.5}, rng, true);
  double total = 0;
  for (Real v : y.data()) {
    EXPECT_TRUE(v == 0 || v == 2);
    total += v;
  }
  EXPECT_NEAR(total / 2000, 1.0, 0.1);
  EXPECT_THROW(dropout(x, Real{1.0}, rng, true), ConfigError);
}

TEST(AttentionTest, SingleKeyReturnsItsValue) {
  Rng rng(8);
  const Tensor q = random_tensor({3, 4}, rng);
  const Tensor k = random_tensor({1, 4}, rng);
  const Tensor v = random_tensor({1, 4}, rng);
  const Tensor y = multi_head_attention(q, k, v, 1, 2);
  for (std::size_t r = 0; r < 3; ++r)
    for (std::size_t c = 0; c < 4; ++c) EXPECT_NEAR(y.at(r, c), v[c], 1e-15);
}

TEST(AdamTest, ZeroGradientZeroDecayLeavesParameter) {
  ParameterStore store;
  Tensor p = store.add("p", Tensor({3}, {1, -2, 3}));
  p.zero_grad();
  Adam adam(store.trainable(), {1e-2, 0.9, 0.999, 1e-8, 0.0});
  adam.step();
  expect_values(p, {1, -2, 3});
}

TEST(AdamTest, FirstStepMovesByLearningRate) {
  ParameterStore store;
  Tensor p = store.add("p", Tensor({3}, {1, -2, 3}));
  const double lr = 1e-3;
  Adam adam(store.trainable(), {lr, 0.9, 0.999, 1e-8, 0.0});
  sum(mul(p, Tensor({3}, {0.5, -4, 2}))).backward();
  adam.step();
  // m_hat = g, v_hat = g^2, so the update is lr * g / (|g| + eps).
  const double g[3] = {0.5, -4, 2};
  const double before[3] = {1, -2, 3};
  for (int i = 0; i < 3; ++i) {
    const double expected = before[i] - lr * g[i] / (std::abs(g[i]) + 1e-8);
    EXPECT_NEAR(p[i], expected, 1e-15);
  }
  EXPECT_EQ(adam.step_count(), 1u);
  EXPECT_EQ(adam.first_moment(0).size(), p.size());
  EXPECT_FALSE(std::any_of(p.grad().begin(), p.grad().end(), [](Real v) { return v != 0; }));
}

TEST(AdamTest, DecoupledWeightDecay) {
  ParameterStore store;
  Tensor p = store.add("p", Tensor({1}, std::vector<Real>{2}));
  p.zero_grad();
  Adam adam(store.trainable(), {0.1, 0.9, 0.999, 1e-8, 0.5});
  adam.step();
  EXPECT_NEAR(p[0], 2.0 - 0.1 * 0.5 * 2.0, 1e-15);
}

TEST(AdamTest, FrozenParameterIsBitIdentical) {
  ParameterStore store;
  Tensor frozen = store.add("frozen", Tensor({2}, {0.25, -1.5}), true);
  Tensor live = store.add("live", Tensor({2}, {1, 1}));
  const std::uint64_t before = store.frozen_checksum();
  Adam adam(store.trainable(), {});
  for (int i = 0; i < 5; ++i) {
    sum(square(add(frozen, live))).backward();
    adam.step();
  }
  EXPECT_EQ(store.frozen_checksum(), before);
  EXPECT_EQ(frozen[0], 0.25);
  EXPECT_EQ(frozen[1], -1.5);
  EXPECT_NE(live[0], 1.0);
}

TEST(AdamTest, MissingGradientNamesParameter) {
  ParameterStore store;
  store.add("gca.w_q", Tensor({1}, {1}));
  Adam adam(store.trainable(), {});
  try {
    adam.step();
    FAIL();
  } catch (const ContractError& e) {
    EXPECT_NE(std::string(e.what()).find("gca.w_q"), std::string::npos);
  }
}

TEST(StepDecayTest, HalvesEveryPeriod) {
  const StepDecay s{10, 0.5};
  EXPECT_EQ(s.lr_at(1e-4, 0), 1e-4);
  EXPECT_EQ(s.lr_at(1e-4, 9), 1e-4);
  EXPECT_EQ(s.lr_at(1e-4, 10), 5e-5);
  EXPECT_EQ(s.lr_at(1e-4, 25), 2.5e-5);
}

TEST(DeterminismTest, SameSeedSameForward) {
  auto run = [] {
    Rng rng(77);
    const Tensor a = random_tensor({4, 6}, rng);
    const Tensor b = random_tensor({6, 6}, rng);
    return softmax_rows(matmul(a, b));
  };
  const Tensor x = run(), y = run();
  for (std::size_t i = 0; i < x.size(); ++i) EXPECT_EQ(x[i], y[i]);
}

}  // namespace
}  // namespace cams
