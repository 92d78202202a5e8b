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

#pragma once

#include <compare>
#include <cstdint>
#include <vector>

#include "cams/nn.hpp"

// Seeded stand-ins for the frozen image and text encoders, the attribute and
// object embedding tables, and soft-prompt assembly.
namespace cams {

struct Composition {
  std::size_t attr = 0;
  std::size_t obj = 0;

  auto operator<=>(const Composition&) const = default;
};

struct ImageEncoderConfig {
  std::size_t grid_side = 4;  // grid_side^2 patches plus one class token
  std::size_t patch_dim = 16;
  std::size_t d_v = 64;
  std::size_t d_t = 32;
  std::size_t lower_layers = 2;
  std::size_t upper_layers = 2;  // M
  std::size_t heads = 4;
  LoRAConfig lora;

  std::size_t patches() const { return grid_side * grid_side; }
  std::size_t tokens() const { return patches() + 1; }
};

struct ImageEncoding {
  std::vector<Tensor> hidden;  // H_0 .. H_M, each (batch*P) x d_v
  Tensor global;               // f_g, batch x d_t
};

class StubImageEncoder {
 public:
  StubImageEncoder(ParameterStore& store, const ImageEncoderConfig& config,
                   std::uint64_t seed);

  // H_0 after the frozen lower blocks. `patches` stacks `batch` images of
  // patches() rows each.
  Tensor encode_lower(const Tensor& patches, std::size_t batch) const;

  // H_1 .. H_M and f_g from H_0.
  ImageEncoding encode_upper(const Tensor& h0, std::size_t batch,
                             const ForwardContext& ctx) const;

  ImageEncoding encode_image(const Tensor& patches, std::size_t batch,
                             const ForwardContext& ctx) const;

  const ImageEncoderConfig& config() const { return config_; }
  const std::vector<TransformerBlock>& upper_blocks() const { return upper_; }

 private:
  ImageEncoderConfig config_;
  Linear patch_proj_;
  Tensor class_token_;
  Tensor positions_;
  std::vector<TransformerBlock> lower_;
  std::vector<TransformerBlock> upper_;
  LayerNormParams ln_post_;
  Linear head_;
};

struct TextEncoderConfig {
  std::size_t d_t = 32;
  std::size_t layers = 2;
  std::size_t heads = 4;
  std::size_t max_length = 8;
};

// Frozen transformer over soft-prompt tokens; returns the final token of each
// sequence after a closing layer norm.
class StubTextEncoder {
 public:
  StubTextEncoder(ParameterStore& store, const TextEncoderConfig& config,
                  std::uint64_t seed);

  // tokens: (count*length) x d_t; returns count x d_t.
  Tensor encode(const Tensor& tokens, std::size_t length) const;

  const TextEncoderConfig& config() const { return config_; }

 private:
  TextEncoderConfig config_;
  Tensor positions_;
  std::vector<TransformerBlock> blocks_;
  LayerNormParams ln_final_;
};

struct EmbeddingTables {
  Tensor attributes;  // n x d_t
  Tensor objects;     // m x d_t
  Tensor prefix;      // r x d_t

  std::size_t n_attrs() const { return attributes.rows(); }
  std::size_t n_objs() const { return objects.rows(); }
  std::size_t prefix_length() const { return prefix.rows(); }
};

EmbeddingTables make_embedding_tables(ParameterStore& store, std::size_t n_attrs,
                                      std::size_t n_objs, std::size_t d_t,
                                      std::size_t prefix_length,
                                      std::uint64_t seed);

// Token sequences stacked row-wise: `count` prompts of `length` tokens.
struct SoftPrompts {
  Tensor tokens;
  std::size_t count = 0;
  std::size_t length = 0;
};

struct SoftPromptSet {
  SoftPrompts attributes;    // [theta_1..theta_r, e_a^i], one per attribute
  SoftPrompts objects;       // [theta_1..theta_r, e_o^j], one per object
  SoftPrompts compositions;  // [theta_1..theta_r, e_a^i, e_o^j], per candidate
};

SoftPrompts build_attribute_prompts(const EmbeddingTables& tables);
SoftPrompts build_object_prompts(const EmbeddingTables& tables);
SoftPrompts build_composition_prompts(const EmbeddingTables& tables,
                                      const std::vector<Composition>& pairs);
SoftPromptSet build_soft_prompts(const EmbeddingTables& tables,
                                 const std::vector<Composition>& pairs);

struct PromptBank {
  Tensor attributes;    // n x d_t
  Tensor objects;       // m x d_t
  Tensor compositions;  // |pairs| x d_t
  std::vector<Composition> pairs;
};

Tensor encode_text(const StubTextEncoder& encoder, const SoftPrompts& prompts);

PromptBank encode_prompts(const StubTextEncoder& encoder,
                          const EmbeddingTables& tables,
                          const std::vector<Composition>& pairs,
                          bool with_primitives = true);

}  // namespace cams
