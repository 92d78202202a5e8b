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

#include "cams/gca.hpp"

#include <cmath>

#include "cams/errors.hpp"

namespace cams {

GcaWeights make_gca_weights(ParameterStore& store, const GcaConfig& c, Rng& rng) {
  if (c.heads == 0 || c.d_v % c.heads != 0) {
    throw ConfigError("gca: width " + std::to_string(c.d_v) +
                      " not divisible by " + std::to_string(c.heads) + " heads");
  }
  const double std_v = 1.0 / std::sqrt(static_cast<double>(c.d_v));
  GcaWeights w;
  w.heads = c.heads;
  w.w_q = store.add("gca.w_q", init_normal({c.d_v, c.d_v}, std_v, rng));
  w.w_k = store.add("gca.w_k", init_normal({c.d_v, c.d_v}, std_v, rng));
  w.w_v = store.add("gca.w_v", init_normal({c.d_v, c.d_v}, std_v, rng));
  w.w_z = store.add("gca.w_z", init_normal({c.d_v, c.d_v}, std_v, rng));
  w.u_z = store.add("gca.u_z", init_normal({c.d_v, c.d_v}, std_v, rng));
  w.w_o = store.add("gca.w_o", init_normal({c.d_v, c.d_v}, std_v, rng));
  w.ln = make_layer_norm(store, "gca.ln", c.d_v, false);
  w.fc1 = make_linear(store, "gca.mlp.fc1", c.d_v, c.ffn_mult * c.d_v, true, rng,
                      false);
  w.fc2 = make_linear(store, "gca.mlp.fc2", c.ffn_mult * c.d_v, c.d_v, true, rng,
                      false);
  return w;
}

CrossAttentionResult cross_attention(const Tensor& latents, const Tensor& hidden,
                                     std::size_t batch, const GcaWeights& w,
                                     std::vector<Real>* attention) {
  const std::size_t d = w.w_q.rows();
  if (latents.cols() != d || hidden.cols() != d) {
    throw DimensionError("cross_attention: latents " +
                         shape_to_string(latents.shape()) + " and hidden " +
                         shape_to_string(hidden.shape()) + " must have width " +
                         std::to_string(d));
  }
  CrossAttentionResult r;
  r.q = matmul(latents, w.w_q);
  const Tensor k = matmul(hidden, w.w_k);
  const Tensor v = matmul(hidden, w.w_v);
  r.q1 = multi_head_attention(r.q, k, v, batch, w.heads, attention);
  return r;
}

Tensor gate(const Tensor& q, const Tensor& q1, const GcaWeights& w) {
  return mul(q1, sigmoid(mul(matmul(q, w.w_z), matmul(q1, w.u_z))));
}

Tensor output_ffn(const Tensor& q2, const GcaWeights& w) {
  const Tensor projected = matmul(q2, w.w_o);
  return add(projected, w.fc2.forward(gelu(w.fc1.forward(w.ln.forward(projected)))));
}

Tensor gca_layer(const Tensor& latents, const Tensor& hidden, std::size_t batch,
                 const GcaWeights& w, bool gate_enabled) {
  const auto attended = cross_attention(latents, hidden, batch, w);
  const Tensor q2 = gate_enabled ? gate(attended.q, attended.q1, w) : attended.q1;
  return output_ffn(q2, w);
}

Tensor run_layers(const Tensor& latents, const std::vector<Tensor>& upper_hidden,
                  std::size_t batch, const GcaWeights& w, bool gate_enabled) {
  if (upper_hidden.empty()) {
    throw ConfigError("gca: at least one upper hidden state (M >= 1) required");
  }
  if (batch == 0) throw ContractError("gca: empty batch");
  std::vector<std::size_t> rows;
  rows.reserve(batch * latents.rows());
  for (std::size_t b = 0; b < batch; ++b)
    for (std::size_t i = 0; i < latents.rows(); ++i) rows.push_back(i);
  Tensor state = gather_rows(latents, rows);
  for (const auto& h : upper_hidden) {
    state = gca_layer(state, h, batch, w, gate_enabled);
  }
  return state;
}

GatedCrossAttention::GatedCrossAttention(ParameterStore& store,
                                         const GcaConfig& config,
                                         std::uint64_t seed)
    : config_(config) {
  if (config.latent_units == 0) throw ConfigError("gca: K must be >= 1");
  Rng rng(stream_seed(seed, "gca"));
  latents_ = store.add(
      "gca.latents",
      init_normal({config.latent_units, config.d_v}, config.latent_init_std, rng));
  weights_ = make_gca_weights(store, config, rng);
}

Tensor GatedCrossAttention::forward(const std::vector<Tensor>& hidden,
                                    std::size_t batch) const {
  if (hidden.size() < 2) {
    throw ConfigError("gca: needs H_0 plus at least one upper hidden state");
  }
  const std::vector<Tensor> upper(hidden.begin() + 1, hidden.end());
  return run_layers(latents_, upper, batch, weights_, config_.gate_enabled);
}

}  // namespace cams
