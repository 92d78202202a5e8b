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

#include "cams/backbone.hpp"

#include <cmath>
#include <string>

#include "cams/errors.hpp"

namespace cams {

namespace {

std::vector<std::size_t> tiled_rows(std::size_t length, std::size_t groups) {
  std::vector<std::size_t> rows;
  rows.reserve(length * groups);
  for (std::size_t g = 0; g < groups; ++g)
    for (std::size_t i = 0; i < length; ++i) rows.push_back(i);
  return rows;
}

std::vector<std::size_t> strided_rows(std::size_t offset, std::size_t stride,
                                      std::size_t groups) {
  std::vector<std::size_t> rows(groups);
  for (std::size_t g = 0; g < groups; ++g) rows[g] = g * stride + offset;
  return rows;
}

}  // namespace

StubImageEncoder::StubImageEncoder(ParameterStore& store,
                                   const ImageEncoderConfig& config,
                                   std::uint64_t seed)
    : config_(config) {
  if (config.upper_layers == 0) {
    throw ConfigError("image encoder needs at least one upper layer (M >= 1)");
  }
  if (config.grid_side == 0 || config.patch_dim == 0 || config.d_v == 0 ||
      config.d_t == 0) {
    throw ConfigError("image encoder dimensions must be positive");
  }
  Rng rng(stream_seed(seed, "backbone.image"));
  const std::string p = "backbone.image";
  const std::size_t d = config.d_v;
  patch_proj_ = make_linear(store, p + ".patch_proj", config.patch_dim, d, true,
                            rng, true);
  class_token_ = store.add(p + ".class_token",
                           init_normal({1, d}, 1.0 / std::sqrt(double(d)), rng), true);
  positions_ = store.add(p + ".positions", init_normal({config.tokens(), d}, 0.02, rng),
                         true);
  TransformerBlockOptions frozen_block{d, config.heads, 4, true, std::nullopt};
  for (std::size_t i = 0; i < config.lower_layers; ++i) {
    lower_.push_back(make_transformer_block(
        store, p + ".lower" + std::to_string(i), frozen_block, rng));
  }
  TransformerBlockOptions adapted = frozen_block;
  adapted.lora = config.lora;
  for (std::size_t i = 0; i < config.upper_layers; ++i) {
    upper_.push_back(make_transformer_block(
        store, p + ".upper" + std::to_string(i), adapted, rng));
  }
  ln_post_ = make_layer_norm(store, p + ".ln_post", d, true);
  head_ = make_linear(store, p + ".head", d, config.d_t, false, rng, true);
}

Tensor StubImageEncoder::encode_lower(const Tensor& patches,
                                      std::size_t batch) const {
  const std::size_t np = config_.patches();
  if (patches.cols() != config_.patch_dim || patches.rows() != batch * np) {
    throw DimensionError("encode_image: expected " + std::to_string(batch * np) +
                         "x" + std::to_string(config_.patch_dim) +
                         " patches, got " + shape_to_string(patches.shape()));
  }
  const Tensor projected = patch_proj_.forward(patches);
  std::vector<Tensor> parts;
  parts.reserve(2 * batch);
  for (std::size_t b = 0; b < batch; ++b) {
    parts.push_back(class_token_);
    parts.push_back(slice_rows(projected, b * np, np));
  }
  Tensor h = add(concat_rows(parts),
                 gather_rows(positions_, tiled_rows(config_.tokens(), batch)));
  const ForwardContext eval_ctx;
  for (const auto& block : lower_) h = block.forward(h, batch, eval_ctx);
  return h;
}

ImageEncoding StubImageEncoder::encode_upper(const Tensor& h0, std::size_t batch,
                                             const ForwardContext& ctx) const {
  if (h0.cols() != config_.d_v || h0.rows() != batch * config_.tokens()) {
    throw DimensionError("encode_upper: expected " +
                         std::to_string(batch * config_.tokens()) + "x" +
                         std::to_string(config_.d_v) + " hidden states, got " +
                         shape_to_string(h0.shape()));
  }
  ImageEncoding out;
  out.hidden.push_back(h0);
  Tensor h = h0;
  for (const auto& block : upper_) {
    h = block.forward(h, batch, ctx);
    out.hidden.push_back(h);
  }
  const Tensor cls = gather_rows(h, strided_rows(0, config_.tokens(), batch));
  out.global = head_.forward(ln_post_.forward(cls));
  return out;
}

ImageEncoding StubImageEncoder::encode_image(const Tensor& patches,
                                             std::size_t batch,
                                             const ForwardContext& ctx) const {
  return encode_upper(encode_lower(patches, batch), batch, ctx);
}

StubTextEncoder::StubTextEncoder(ParameterStore& store,
                                 const TextEncoderConfig& config,
                                 std::uint64_t seed)
    : config_(config) {
  Rng rng(stream_seed(seed, "backbone.text"));
  const std::string p = "backbone.text";
  positions_ = store.add(p + ".positions",
                         init_normal({config.max_length, config.d_t}, 0.01, rng), true);
  TransformerBlockOptions opts{config.d_t, config.heads, 4, true, std::nullopt};
  for (std::size_t i = 0; i < config.layers; ++i) {
    blocks_.push_back(
        make_transformer_block(store, p + ".block" + std::to_string(i), opts, rng));
  }
  ln_final_ = make_layer_norm(store, p + ".ln_final", config.d_t, true);
}

Tensor StubTextEncoder::encode(const Tensor& tokens, std::size_t length) const {
  if (length == 0 || tokens.rows() == 0) {
    throw ContractError("encode_text: empty token sequence");
  }
  if (length > config_.max_length) {
    throw ContractError("encode_text: sequence of " + std::to_string(length) +
                        " tokens exceeds maximum " +
                        std::to_string(config_.max_length));
  }
  if (tokens.cols() != config_.d_t || tokens.rows() % length != 0) {
    throw DimensionError("encode_text: tokens " + shape_to_string(tokens.shape()) +
                         " are not sequences of " + std::to_string(length) +
                         " tokens of width " + std::to_string(config_.d_t));
  }
  const std::size_t count = tokens.rows() / length;
  Tensor h = add(tokens, gather_rows(positions_, tiled_rows(length, count)));
  const ForwardContext eval_ctx;
  for (const auto& block : blocks_) h = block.forward(h, count, eval_ctx);
  return ln_final_.forward(gather_rows(h, strided_rows(length - 1, length, count)));
}

EmbeddingTables make_embedding_tables(ParameterStore& store, std::size_t n_attrs,
                                      std::size_t n_objs, std::size_t d_t,
                                      std::size_t prefix_length,
                                      std::uint64_t seed) {
  if (n_attrs == 0 || n_objs == 0 || prefix_length == 0) {
    throw ConfigError("embedding tables need attributes, objects and a prefix");
  }
  Rng rng(stream_seed(seed, "embeddings"));
  Rng phrase(stream_seed(seed, "a photo of"));
  EmbeddingTables t;
  t.attributes = store.add("prompt.attributes", init_normal({n_attrs, d_t}, 0.02, rng));
  t.objects = store.add("prompt.objects", init_normal({n_objs, d_t}, 0.02, rng));
  t.prefix = store.add("prompt.prefix", init_normal({prefix_length, d_t}, 0.02, phrase));
  return t;
}

namespace {

SoftPrompts gather_prompts(const EmbeddingTables& t,
                           const std::vector<std::vector<std::size_t>>& tails) {
  const std::size_t r = t.prefix_length();
  const Tensor table = concat_rows({t.prefix, t.attributes, t.objects});
  std::vector<std::size_t> rows;
  for (const auto& tail : tails) {
    for (std::size_t i = 0; i < r; ++i) rows.push_back(i);
    for (std::size_t row : tail) rows.push_back(row);
  }
  SoftPrompts out;
  out.count = tails.size();
  out.length = r + tails.front().size();
  out.tokens = gather_rows(table, rows);
  return out;
}

}  // namespace

SoftPrompts build_attribute_prompts(const EmbeddingTables& t) {
  std::vector<std::vector<std::size_t>> tails;
  for (std::size_t i = 0; i < t.n_attrs(); ++i) tails.push_back({t.prefix_length() + i});
  return gather_prompts(t, tails);
}

SoftPrompts build_object_prompts(const EmbeddingTables& t) {
  std::vector<std::vector<std::size_t>> tails;
  for (std::size_t j = 0; j < t.n_objs(); ++j)
    tails.push_back({t.prefix_length() + t.n_attrs() + j});
  return gather_prompts(t, tails);
}

SoftPrompts build_composition_prompts(const EmbeddingTables& t,
                                      const std::vector<Composition>& pairs) {
  if (pairs.empty()) throw ContractError("build_soft_prompts: no candidate pairs");
  std::vector<std::vector<std::size_t>> tails;
  tails.reserve(pairs.size());
  for (const auto& c : pairs) {
    if (c.attr >= t.n_attrs() || c.obj >= t.n_objs()) {
      throw IndexError("composition (" + std::to_string(c.attr) + ", " +
                       std::to_string(c.obj) + ") outside " +
                       std::to_string(t.n_attrs()) + " attributes x " +
                       std::to_string(t.n_objs()) + " objects");
    }
    tails.push_back(
        {t.prefix_length() + c.attr, t.prefix_length() + t.n_attrs() + c.obj});
  }
  return gather_prompts(t, tails);
}

SoftPromptSet build_soft_prompts(const EmbeddingTables& tables,
                                 const std::vector<Composition>& pairs) {
  return {build_attribute_prompts(tables), build_object_prompts(tables),
          build_composition_prompts(tables, pairs)};
}

Tensor encode_text(const StubTextEncoder& encoder, const SoftPrompts& prompts) {
  return encoder.encode(prompts.tokens, prompts.length);
}

PromptBank encode_prompts(const StubTextEncoder& encoder,
                          const EmbeddingTables& tables,
                          const std::vector<Composition>& pairs,
                          bool with_primitives) {
  PromptBank bank;
  bank.pairs = pairs;
  if (with_primitives) {
    bank.attributes = encode_text(encoder, build_attribute_prompts(tables));
    bank.objects = encode_text(encoder, build_object_prompts(tables));
  }
  if (!pairs.empty()) {
    bank.compositions = encode_text(encoder, build_composition_prompts(tables, pairs));
  }
  return bank;
}

}  // namespace cams
