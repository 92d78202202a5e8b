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

#include <cstddef>
#include <optional>
#include <string>

#include "cams/ops.hpp"
#include "cams/optim.hpp"
#include "cams/random.hpp"

namespace cams {

// Mode flags threaded through every forward pass.
struct ForwardContext {
  bool training = false;
  Rng* rng = nullptr;  // dropout masks; required when training
};

struct Linear {
  Tensor weight;  // in x out
  Tensor bias;    // out, may be undefined

  Tensor forward(const Tensor& x) const;
};

// Weights drawn from N(0, stddev^2); stddev <= 0 selects 1/sqrt(in).
Linear make_linear(ParameterStore& store, const std::string& name,
                   std::size_t in, std::size_t out, bool with_bias, Rng& rng,
                   bool frozen, double stddev = 0.0);

Tensor init_normal(Shape shape, double stddev, Rng& rng);

struct LayerNormParams {
  Tensor gamma;
  Tensor beta;
  Real eps = Real{1e-5};

  Tensor forward(const Tensor& x) const { return layer_norm(x, gamma, beta, eps); }
};

LayerNormParams make_layer_norm(ParameterStore& store, const std::string& name,
                                std::size_t d, bool frozen);

struct LoRAConfig {
  std::size_t rank = 8;
  double dropout = 0.1;
  double scale = 1.0;
};

// Low-rank additive update scale * A * B of a frozen d x d weight. B starts at
// zero so the adapter is inert until trained.
struct LoRAAdapter {
  Tensor down;  // A: d x rank
  Tensor up;    // B: rank x d
  std::size_t rank = 0;
  double dropout = 0.0;
  double scale = 1.0;
};

LoRAAdapter make_lora(ParameterStore& store, const std::string& name,
                      std::size_t d, const LoRAConfig& config, Rng& rng);

// x * (W_base + scale * A * B), dropout applied to the adapter input when
// training.
Tensor lora_apply(const Tensor& w_base, const LoRAAdapter& adapter,
                  const Tensor& x, const ForwardContext& ctx);

// scale * A * B materialized (for rank inspection).
Tensor lora_delta(const LoRAAdapter& adapter);

// Pre-norm transformer encoder block over `groups` stacked sequences:
// x + Attn(LN1(x)), then + FFN(LN2(.)). Optional LoRA on the query and value
// projections.
struct TransformerBlock {
  LayerNormParams ln1;
  LayerNormParams ln2;
  Linear w_q, w_k, w_v, w_o;
  Linear fc1, fc2;
  std::size_t heads = 1;
  std::optional<LoRAAdapter> lora_q;
  std::optional<LoRAAdapter> lora_v;

  Tensor forward(const Tensor& x, std::size_t groups,
                 const ForwardContext& ctx) const;
};

struct TransformerBlockOptions {
  std::size_t d = 64;
  std::size_t heads = 4;
  std::size_t ffn_mult = 4;
  bool frozen = false;
  std::optional<LoRAConfig> lora;
};

TransformerBlock make_transformer_block(ParameterStore& store,
                                        const std::string& name,
                                        const TransformerBlockOptions& options,
                                        Rng& rng);

}  // namespace cams
