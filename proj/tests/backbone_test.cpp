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

#include <Eigen/Dense>

#include "cams/backbone.hpp"
#include "cams/errors.hpp"
#include "cams/model.hpp"
#include "support/checks.hpp"

namespace cams {
namespace {

using testing::random_tensor;

ImageEncoderConfig small_image(std::size_t upper) {
  ImageEncoderConfig c;
  c.grid_side = 2;
  c.patch_dim = 6;
  c.d_v = 16;
  c.d_t = 8;
  c.lower_layers = 1;
  c.upper_layers = upper;
  c.lora.rank = 4;
  return c;
}

TEST(ImageEncoderTest, EmitsMPlusOneHiddenStates) {
  for (std::size_t m : {1u, 3u}) {
    ParameterStore store;
    StubImageEncoder enc(store, small_image(m), 1);
    Rng rng(2);
    const auto out = enc.encode_image(random_tensor({8, 6}, rng), 2, {});
    ASSERT_EQ(out.hidden.size(), m + 1);
    for (const auto& h : out.hidden) {
      EXPECT_EQ(h.rows(), 2 * 5u);
      EXPECT_EQ(h.cols(), 16u);
    }
    EXPECT_EQ(out.global.rows(), 2u);
    EXPECT_EQ(out.global.cols(), 8u);
  }
}

TEST(ImageEncoderTest, DeterministicForSameSeed) {
  Rng rng(4);
  const Tensor x = random_tensor({4, 6}, rng);
  ParameterStore s1, s2;
  StubImageEncoder a(s1, small_image(2), 9), b(s2, small_image(2), 9);
  const auto ya = a.encode_image(x, 1, {});
  const auto yb = b.encode_image(x, 1, {});
  for (std::size_t i = 0; i < ya.global.size(); ++i) EXPECT_EQ(ya.global[i], yb.global[i]);
}

TEST(ImageEncoderTest, ZeroLoraMatchesFrozenBackbone) {
  Rng rng(4);
  const Tensor x = random_tensor({4, 6}, rng);
  ParameterStore store;
  StubImageEncoder enc(store, small_image(2), 3);
  const auto out = enc.encode_image(x, 1, {});
  Tensor h = enc.encode_lower(x, 1);
  for (std::size_t l = 0; l < enc.upper_blocks().size(); ++l) {
    TransformerBlock plain = enc.upper_blocks()[l];
    plain.lora_q.reset();
    plain.lora_v.reset();
    h = plain.forward(h, 1, {});
    for (std::size_t i = 0; i < h.size(); ++i) ASSERT_EQ(out.hidden[l + 1][i], h[i]);
  }
}

TEST(ImageEncoderTest, BaseWeightsFrozenAdaptersTrainable) {
  ParameterStore store;
  StubImageEncoder enc(store, small_image(2), 1);
  for (const auto& p : store.all()) {
    const bool adapter = p.name.find(".lora_") != std::string::npos;
    EXPECT_EQ(p.frozen, !adapter) << p.name;
  }
  EXPECT_EQ(store.trainable_count("backbone.image."), 2u * 2u * 2u);
}

TEST(ImageEncoderTest, WrongGridThrows) {
  ParameterStore store;
  StubImageEncoder enc(store, small_image(1), 1);
  EXPECT_THROW(enc.encode_image(Tensor({5, 6}), 1, {}), DimensionError);
}

TEST(ImageEncoderTest, ZeroUpperLayersThrows) {
  ParameterStore store;
  EXPECT_THROW(StubImageEncoder(store, small_image(0), 1), ConfigError);
}

TEST(LoraTest, ZeroUpProjectionIsExactNoOp) {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    Rng rng(seed);
    ParameterStore store;
    const LoRAAdapter a = make_lora(store, "l", 6, {3, 0.0, 1.0}, rng);
    const Tensor w = random_tensor({6, 6}, rng);
    const Tensor x = random_tensor({4, 6}, rng);
    const Tensor y = lora_apply(w, a, x, {});
    const Tensor base = matmul(x, w);
    for (std::size_t i = 0; i < y.size(); ++i) ASSERT_EQ(y[i], base[i]);
  }
}

TEST(LoraTest, DeltaRankBoundedByBottleneck) {
  Rng rng(5);
  ParameterStore store;
  LoRAAdapter a = make_lora(store, "l", 12, {3, 0.0, 1.0}, rng);
  for (auto& v : a.up.mutable_data()) v = static_cast<Real>(rng.normal());
  const Tensor d = lora_delta(a);
  Eigen::MatrixXd m(12, 12);
  for (int i = 0; i < 12; ++i)
    for (int j = 0; j < 12; ++j) m(i, j) = d.at(i, j);
  const Eigen::VectorXd sv = Eigen::JacobiSVD<Eigen::MatrixXd>(m).singularValues();
  int rank = 0;
  for (int i = 0; i < sv.size(); ++i) rank += sv(i) > 1e-9 ? 1 : 0;
  EXPECT_EQ(rank, 3);
}

TEST(LoraTest, RankAboveWidthThrows) {
  Rng rng(1);
  ParameterStore store;
  EXPECT_THROW(make_lora(store, "l", 4, {5, 0.0, 1.0}, rng), ConfigError);
  EXPECT_THROW(make_lora(store, "m", 4, {0, 0.0, 1.0}, rng), ConfigError);
}

TEST(LoraTest, FineGrainedPresetUsesRank64) {
  EXPECT_EQ(preset_config("ut-zappos").model.image.lora.rank, 64u);
}

EmbeddingTables tables(ParameterStore& store) {
  return make_embedding_tables(store, 3, 4, 8, 3, 7);
}

TEST(SoftPromptTest, LengthsFollowPrefix) {
  ParameterStore store;
  const auto t = tables(store);
  const auto set = build_soft_prompts(t, {{0, 1}, {2, 3}});
  EXPECT_EQ(set.attributes.length, 4u);
  EXPECT_EQ(set.objects.length, 4u);
  EXPECT_EQ(set.compositions.length, 5u);
  EXPECT_EQ(set.attributes.count, 3u);
  EXPECT_EQ(set.objects.count, 4u);
  EXPECT_EQ(set.compositions.count, 2u);
}

TEST(SoftPromptTest, CompositionTokensAreTableRows) {
  ParameterStore store;
  const auto t = tables(store);
  const auto p = build_composition_prompts(t, {{2, 1}, {2, 3}});
  const std::size_t d = 8, len = 5;
  for (std::size_t k = 0; k < 2; ++k) {
    for (std::size_t r = 0; r < 3; ++r)
      for (std::size_t j = 0; j < d; ++j)
        EXPECT_EQ(p.tokens.at(k * len + r, j), t.prefix.at(r, j));
    for (std::size_t j = 0; j < d; ++j) EXPECT_EQ(p.tokens.at(k * len + 3, j), t.attributes.at(2, j));
  }
  for (std::size_t j = 0; j < d; ++j) {
    EXPECT_EQ(p.tokens.at(4, j), t.objects.at(1, j));
    EXPECT_EQ(p.tokens.at(len + 4, j), t.objects.at(3, j));
  }
}

TEST(SoftPromptTest, OutOfRangeIdThrows) {
  ParameterStore store;
  const auto t = tables(store);
  EXPECT_THROW(build_composition_prompts(t, {{3, 0}}), IndexError);
  EXPECT_THROW(build_composition_prompts(t, {{0, 4}}), IndexError);
}

TextEncoderConfig text_config() {
  TextEncoderConfig c;
  c.d_t = 8;
  c.heads = 2;
  c.max_length = 6;
  return c;
}

TEST(TextEncoderTest, EmptySequenceThrows) {
  ParameterStore store;
  StubTextEncoder enc(store, text_config(), 1);
  EXPECT_THROW(enc.encode(Tensor({1, 8}), 0), ContractError);
}

TEST(TextEncoderTest, GradientReachesPromptsNotEncoder) {
  ParameterStore store;
  StubTextEncoder enc(store, text_config(), 1);
  const auto t = tables(store);
  const PromptBank bank = encode_prompts(enc, t, {{0, 0}, {1, 2}});
  sum(square(add(add(sum(bank.attributes), sum(bank.objects)),
                 sum(bank.compositions))))
      .backward();
  for (const auto& p : store.all()) {
    if (p.name.starts_with("backbone.text.")) {
      EXPECT_TRUE(p.frozen);
      EXPECT_FALSE(p.tensor.has_grad()) << p.name;
    }
  }
  ASSERT_TRUE(t.prefix.has_grad());
  ASSERT_TRUE(t.attributes.has_grad());
  double norm = 0;
  for (Real g : t.prefix.grad()) norm += std::abs(g);
  EXPECT_GT(norm, 0.0);
}

TEST(TextEncoderTest, AttributeRowOnlyMovesItsPrompt) {
  ParameterStore store;
  StubTextEncoder enc(store, text_config(), 1);
  auto t = tables(store);
  const PromptBank before = encode_prompts(enc, t, {{0, 0}});
  t.attributes.mutable_data()[1 * 8 + 2] += 0.5;
  const PromptBank after = encode_prompts(enc, t, {{0, 0}});
  auto row_equal = [](const Tensor& a, const Tensor& b, std::size_t r) {
    for (std::size_t j = 0; j < a.cols(); ++j)
      if (a.at(r, j) != b.at(r, j)) return false;
    return true;
  };
  EXPECT_FALSE(row_equal(before.attributes, after.attributes, 1));
  EXPECT_TRUE(row_equal(before.attributes, after.attributes, 0));
  EXPECT_TRUE(row_equal(before.attributes, after.attributes, 2));
  for (std::size_t r = 0; r < 4; ++r) EXPECT_TRUE(row_equal(before.objects, after.objects, r));
}

TEST(TextEncoderTest, CandidatePermutationPermutesRows) {
  ParameterStore store;
  StubTextEncoder enc(store, text_config(), 1);
  const auto t = tables(store);
  const std::vector<Composition> pairs = {{0, 1}, {2, 3}, {1, 0}};
  const std::vector<Composition> permuted = {{1, 0}, {0, 1}, {2, 3}};
  const Tensor a = encode_prompts(enc, t, pairs, false).compositions;
  const Tensor b = encode_prompts(enc, t, permuted, false).compositions;
  const std::size_t map[3] = {2, 0, 1};  // permuted row k == original row map[k]
  for (std::size_t k = 0; k < 3; ++k)
    for (std::size_t j = 0; j < 8; ++j) EXPECT_EQ(b.at(k, j), a.at(map[k], j));
}

}  // namespace
}  // namespace cams
