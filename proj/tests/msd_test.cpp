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

#include <algorithm>
#include <cmath>

#include "cams/errors.hpp"
#include "cams/msd.hpp"
#include "cams/objective.hpp"
#include "support/checks.hpp"

namespace cams {
namespace {

using testing::random_tensor;

MsdConfig small() {
  MsdConfig c;
  c.d_v = 8;
  c.d_t = 4;
  c.heads = 2;
  c.ffn_mult = 2;
  return c;
}

std::vector<double> ln_ref(const std::vector<double>& x, const LayerNormParams& p) {
  const double n = double(x.size());
  double mu = 0, var = 0;
  for (double v : x) mu += v / n;
  for (double v : x) var += (v - mu) * (v - mu) / n;
  std::vector<double> y(x.size());
  for (std::size_t j = 0; j < x.size(); ++j)
    y[j] = (x[j] - mu) / std::sqrt(var + p.eps) * p.gamma[j] + p.beta[j];
  return y;
}

std::vector<double> linear_ref(const std::vector<double>& x, const Linear& l) {
  const std::size_t in = l.weight.rows(), out = l.weight.cols();
  std::vector<double> y(out);
  for (std::size_t j = 0; j < out; ++j) {
    y[j] = l.bias.defined() ? l.bias[j] : 0.0;
    for (std::size_t i = 0; i < in; ++i) y[j] += x[i] * l.weight.at(i, j);
  }
  return y;
}

TEST(DisentangleTest, OutputShapes) {
  ParameterStore store;
  SpaceModeler m(store, small(), 1);
  Rng rng(1);
  const auto out = disentangle(random_tensor({2 * 3, 8}, rng), 2, m);
  for (Space s : kSpaces) {
    EXPECT_EQ(out[s].rows(), 6u);
    EXPECT_EQ(out[s].cols(), 8u);
  }
}

TEST(DisentangleTest, PerturbingOneSpaceLeavesOthersBitIdentical) {
  ParameterStore store;
  SpaceModeler m(store, small(), 1);
  Rng rng(2);
  const Tensor x = random_tensor({3, 8}, rng);
  const auto before = disentangle(x, 1, m);
  Tensor w = store.get("msd.attribute.block0.attn.w_v.weight").tensor;
  for (auto& v : w.mutable_data()) v += Real{0.1};
  const auto after = disentangle(x, 1, m);
  bool changed = false;
  for (std::size_t i = 0; i < before.attribute.size(); ++i) {
    changed |= before.attribute[i] != after.attribute[i];
    EXPECT_EQ(before.object[i], after.object[i]);
    EXPECT_EQ(before.composition[i], after.composition[i]);
  }
  EXPECT_TRUE(changed);
}

TEST(DisentangleTest, NoSharedParameters) {
  ParameterStore store;
  SpaceModeler m(store, small(), 1);
  const auto& a = m.encoder(Space::kAttribute);
  const auto& o = m.encoder(Space::kObject);
  EXPECT_NE(a.projection.weight.node(), o.projection.weight.node());
  EXPECT_NE(a.blocks[0].w_q.weight.node(), o.blocks[0].w_q.weight.node());
  EXPECT_EQ(store.trainable_elements("msd.attribute."), store.trainable_elements("msd.object."));
}

TEST(DisentangleTest, SingleTokenBlockMatchesScalarOracle) {
  ParameterStore store;
  SpaceModeler m(store, small(), 3);
  Rng rng(3);
  const Tensor x = random_tensor({1, 8}, rng);
  const TransformerBlock& b = m.encoder(Space::kObject).blocks[0];
  const Tensor y = b.forward(x, 1, {});

  // One key: attention returns the value row unchanged.
  const std::vector<double> x0(x.data().begin(), x.data().end());
  const auto v = linear_ref(ln_ref(x0, b.ln1), b.w_v);
  const auto attn = linear_ref(v, b.w_o);
  std::vector<double> x1(8);
  for (int j = 0; j < 8; ++j) x1[j] = x0[j] + attn[j];
  auto hidden = linear_ref(ln_ref(x1, b.ln2), b.fc1);
  for (auto& z : hidden) z = 0.5 * z * (1 + std::erf(z / std::sqrt(2.0)));
  const auto ff = linear_ref(hidden, b.fc2);
  for (int j = 0; j < 8; ++j) EXPECT_NEAR(y[j], x1[j] + ff[j], 1e-14);
}

TEST(DisentangleTest, WidthMismatchThrows) {
  ParameterStore store;
  SpaceModeler m(store, small(), 1);
  EXPECT_THROW(disentangle(Tensor({2, 6}), 1, m), DimensionError);
}

Linear identity2() {
  return {Tensor::matrix(2, 2, {1, 0, 0, 1}), Tensor({2}, {0, 0})};
}

TEST(PoolProjectTest, HandComputedMean) {
  const Tensor f = pool_project(Tensor::matrix(2, 2, {1, 3, 3, 5}), 1, identity2());
  EXPECT_EQ(f[0], 2.0);
  EXPECT_EQ(f[1], 4.0);
}

TEST(PoolProjectTest, IdenticalRowsAndSingleRow) {
  const Tensor f = pool_project(Tensor::matrix(3, 2, {0.5, -1, 0.5, -1, 0.5, -1}), 1, identity2());
  EXPECT_EQ(f[0], 0.5);
  EXPECT_EQ(f[1], -1.0);
  const Tensor g = pool_project(Tensor::matrix(1, 2, {7, 8}), 1, identity2());
  EXPECT_EQ(g[0], 7.0);
  EXPECT_EQ(g[1], 8.0);
}

TEST(PoolProjectTest, RowPermutationInvariant) {
  ParameterStore store;
  SpaceModeler m(store, small(), 1);
  const Linear& proj = m.encoder(Space::kComposition).projection;
  Rng rng(6);
  const Tensor x = random_tensor({4, 8}, rng);
  const Tensor px = gather_rows(x, {2, 0, 3, 1});
  const Tensor a = pool_project(x, 1, proj), b = pool_project(px, 1, proj);
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(a[i], b[i], 1e-15);
}

TEST(PoolProjectTest, MeanPoolIsLinear) {
  Rng rng(7);
  const Tensor x = random_tensor({6, 3}, rng), y = random_tensor({6, 3}, rng);
  const double alpha = 0.7, beta = -1.3;
  const Tensor lhs = group_mean_rows(add(scale(x, alpha), scale(y, beta)), 3);
  const Tensor px = group_mean_rows(x, 3), py = group_mean_rows(y, 3);
  for (std::size_t i = 0; i < lhs.size(); ++i)
    EXPECT_NEAR(lhs[i], alpha * px[i] + beta * py[i], 1e-15);
}

TEST(BranchIsolationTest, CompositionLossLeavesOtherSpacesWithoutGradient) {
  ParameterStore store;
  SpaceModeler m(store, small(), 1);
  Rng rng(8);
  const Tensor x = random_tensor({3, 8}, rng);
  const auto out = disentangle(x, 1, m);
  const Tensor f = pool_project(out.composition, 1, m.encoder(Space::kComposition).projection);
  sum(square(f)).backward();
  for (const auto& p : store.all()) {
    const bool mine = p.name.starts_with("msd.composition.");
    if (mine) {
      EXPECT_TRUE(p.tensor.has_grad()) << p.name;
    } else {
      bool zero = !p.tensor.has_grad() ||
                  std::all_of(p.tensor.grad().begin(), p.tensor.grad().end(),
                              [](Real g) { return g == 0; });
      EXPECT_TRUE(zero) << p.name;
    }
  }
}

}  // namespace
}  // namespace cams
