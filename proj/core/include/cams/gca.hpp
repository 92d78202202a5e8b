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

#include <cstdint>
#include <vector>

#include "cams/nn.hpp"

// Gated Cross-Attention: a small set of latent units attends to each upper
// encoder hidden state in turn, with one weight set shared by every layer.
namespace cams {

struct GcaConfig {
  std::size_t d_v = 64;
  std::size_t heads = 4;
  std::size_t latent_units = 8;  // K
  std::size_t ffn_mult = 4;
  bool gate_enabled = true;
  double latent_init_std = 0.02;
};

struct GcaWeights {
  Tensor w_q, w_k, w_v;  // d_v x d_v
  Tensor w_z, u_z;       // gate, d_v x d_v
  Tensor w_o;            // d_v x d_v
  LayerNormParams ln;
  Linear fc1;  // d_v -> ffn_mult*d_v
  Linear fc2;  // ffn_mult*d_v -> d_v
  std::size_t heads = 1;
};

GcaWeights make_gca_weights(ParameterStore& store, const GcaConfig& config,
                            Rng& rng);

struct CrossAttentionResult {
  Tensor q;   // latents * W_q
  Tensor q1;  // attention output, heads concatenated
};

// latents: (batch*K) x d_v; hidden: (batch*P) x d_v.
CrossAttentionResult cross_attention(const Tensor& latents, const Tensor& hidden,
                                     std::size_t batch, const GcaWeights& w,
                                     std::vector<Real>* attention = nullptr);

// q1 ⊙ sigmoid((q W_z) ⊙ (q1 U_z))
Tensor gate(const Tensor& q, const Tensor& q1, const GcaWeights& w);

// Q' = q2 W_o; returns Q' + MLP(LayerNorm(Q')).
Tensor output_ffn(const Tensor& q2, const GcaWeights& w);

Tensor gca_layer(const Tensor& latents, const Tensor& hidden, std::size_t batch,
                 const GcaWeights& w, bool gate_enabled);

// Refines the latent units against H_1 .. H_M in order with the same weights.
// `latents` is K x d_v and is tiled across the batch.
Tensor run_layers(const Tensor& latents, const std::vector<Tensor>& upper_hidden,
                  std::size_t batch, const GcaWeights& w, bool gate_enabled);

class GatedCrossAttention {
 public:
  GatedCrossAttention(ParameterStore& store, const GcaConfig& config,
                      std::uint64_t seed);

  // `hidden` holds H_0 .. H_M as produced by the image encoder; H_0 is not
  // attended.
  Tensor forward(const std::vector<Tensor>& hidden, std::size_t batch) const;

  const Tensor& latents() const { return latents_; }
  const GcaWeights& weights() const { return weights_; }
  const GcaConfig& config() const { return config_; }

 private:
  GcaConfig config_;
  Tensor latents_;
  GcaWeights weights_;
};

}  // namespace cams
