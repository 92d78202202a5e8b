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

#include "cams/nn.hpp"

#include <cmath>

#include "cams/errors.hpp"

namespace cams {

Tensor init_normal(Shape shape, double stddev, Rng& rng) {
  std::vector<Real> v(shape_size(shape));
  for (auto& x : v) x = static_cast<Real>(rng.normal(0.0, stddev));
  return Tensor(std::move(shape), std::move(v));
}

Tensor Linear::forward(const Tensor& x) const {
  Tensor y = matmul(x, weight);
  return bias.defined() ? add_row(y, bias) : y;
}

Linear make_linear(ParameterStore& store, const std::string& name,
                   std::size_t in, std::size_t out, bool with_bias, Rng& rng,
                   bool frozen, double stddev) {
  if (stddev <= 0) stddev = 1.0 / std::sqrt(static_cast<double>(in));
  Linear l;
  l.weight = store.add(name + ".weight", init_normal({in, out}, stddev, rng), frozen);
  if (with_bias) l.bias = store.add(name + ".bias", Tensor({out}), frozen);
  return l;
}

LayerNormParams make_layer_norm(ParameterStore& store, const std::string& name,
                                std::size_t d, bool frozen) {
  LayerNormParams ln;
  ln.gamma = store.add(name + ".gamma", Tensor::full({d}, Real{1}), frozen);
  ln.beta = store.add(name + ".beta", Tensor({d}), frozen);
  return ln;
}

LoRAAdapter make_lora(ParameterStore& store, const std::string& name,
                      std::size_t d, const LoRAConfig& config, Rng& rng) {
  if (config.rank == 0 || config.rank > d) {
    throw ConfigError("LoRA rank " + std::to_string(config.rank) +
                      " must lie in [1, " + std::to_string(d) + "]");
  }
  if (config.dropout < 0 || config.dropout >= 1) {
    throw ConfigError("LoRA dropout must lie in [0, 1)");
  }
  LoRAAdapter a;
  a.rank = config.rank;
  a.dropout = config.dropout;
  a.scale = config.scale;
  a.down = store.add(name + ".lora_a",
                     init_normal({d, config.rank},
                                 1.0 / std::sqrt(static_cast<double>(d)), rng));
  a.up = store.add(name + ".lora_b", Tensor({config.rank, d}));
  return a;
}

Tensor lora_apply(const Tensor& w_base, const LoRAAdapter& adapter,
                  const Tensor& x, const ForwardContext& ctx) {
  if (w_base.rows() != adapter.down.rows() || w_base.cols() != adapter.up.cols()) {
    throw DimensionError("lora_apply: base weight " +
                         shape_to_string(w_base.shape()) +
                         " does not match adapter " +
                         shape_to_string(adapter.down.shape()) + " x " +
                         shape_to_string(adapter.up.shape()));
  }
  Tensor base = matmul(x, w_base);
  Tensor path = x;
  if (ctx.training && adapter.dropout > 0) {
    if (!ctx.rng) throw ContractError("lora_apply: training needs an rng");
    path = dropout(x, static_cast<Real>(adapter.dropout), *ctx.rng, true);
  }
  Tensor delta = matmul(matmul(path, adapter.down), adapter.up);
  if (adapter.scale != 1.0) delta = scale(delta, static_cast<Real>(adapter.scale));
  return add(base, delta);
}

Tensor lora_delta(const LoRAAdapter& adapter) {
  NoGradGuard no_grad;
  return scale(matmul(adapter.down, adapter.up), static_cast<Real>(adapter.scale));
}

namespace {

Tensor project(const Linear& l, const std::optional<LoRAAdapter>& lora,
               const Tensor& x, const ForwardContext& ctx) {
  if (!lora) return l.forward(x);
  Tensor y = lora_apply(l.weight, *lora, x, ctx);
  return l.bias.defined() ? add_row(y, l.bias) : y;
}

}  // namespace

Tensor TransformerBlock::forward(const Tensor& x, std::size_t groups,
                                 const ForwardContext& ctx) const {
  const Tensor h = ln1.forward(x);
  const Tensor q = project(w_q, lora_q, h, ctx);
  const Tensor k = w_k.forward(h);
  const Tensor v = project(w_v, lora_v, h, ctx);
  const Tensor attn = w_o.forward(multi_head_attention(q, k, v, groups, heads));
  const Tensor x1 = add(x, attn);
  const Tensor ff = fc2.forward(gelu(fc1.forward(ln2.forward(x1))));
  return add(x1, ff);
}

TransformerBlock make_transformer_block(ParameterStore& store,
                                        const std::string& name,
                                        const TransformerBlockOptions& o,
                                        Rng& rng) {
  if (o.heads == 0 || o.d % o.heads != 0) {
    throw ConfigError(name + ": width " + std::to_string(o.d) +
                      " not divisible by " + std::to_string(o.heads) + " heads");
  }
  TransformerBlock b;
  b.heads = o.heads;
  b.ln1 = make_layer_norm(store, name + ".ln1", o.d, o.frozen);
  b.w_q = make_linear(store, name + ".attn.w_q", o.d, o.d, true, rng, o.frozen);
  b.w_k = make_linear(store, name + ".attn.w_k", o.d, o.d, true, rng, o.frozen);
  b.w_v = make_linear(store, name + ".attn.w_v", o.d, o.d, true, rng, o.frozen);
  b.w_o = make_linear(store, name + ".attn.w_o", o.d, o.d, true, rng, o.frozen);
  b.ln2 = make_layer_norm(store, name + ".ln2", o.d, o.frozen);
  b.fc1 = make_linear(store, name + ".ffn.fc1", o.d, o.ffn_mult * o.d, true, rng,
                      o.frozen);
  b.fc2 = make_linear(store, name + ".ffn.fc2", o.ffn_mult * o.d, o.d, true, rng,
                      o.frozen);
  if (o.lora) {
    b.lora_q = make_lora(store, name + ".attn.w_q", o.d, *o.lora, rng);
    b.lora_v = make_lora(store, name + ".attn.w_v", o.d, *o.lora, rng);
  }
  return b;
}

}  // namespace cams
