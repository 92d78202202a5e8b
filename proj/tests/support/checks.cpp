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

#include "checks.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include "cams/gradcheck.hpp"
#include "cams/ops.hpp"

namespace cams::testing {

Tensor random_tensor(Shape shape, Rng& rng, double lo, double hi, bool requires_grad) {
  std::vector<Real> v(shape_size(shape));
  for (auto& x : v) x = static_cast<Real>(rng.uniform(lo, hi));
  return Tensor(std::move(shape), std::move(v), requires_grad);
}

std::vector<double> naive_matmul(std::span<const Real> a, std::span<const Real> b,
                                 std::size_t m, std::size_t k, std::size_t n) {
  std::vector<double> c(m * n, 0.0);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j)
      for (std::size_t t = 0; t < k; ++t) c[i * n + j] += a[i * k + t] * b[t * n + j];
  return c;
}

namespace {

// Contracts a tensor output to a scalar with fixed random weights so that
// every output entry contributes a distinct gradient.
Tensor contract(const Tensor& y, const Tensor& w) { return sum(mul(y, w)); }

}  // namespace

std::vector<NamedCheck> primitive_gradient_checks(std::uint64_t seed, double h) {
  Rng rng(stream_seed(seed, "primitive-gradcheck"));
  std::vector<NamedCheck> out;
  auto run = [&](const std::string& name, const std::function<Tensor()>& f,
                 std::vector<Tensor> inputs) {
    const GradCheckResult r = finite_difference_check(f, std::move(inputs), h);
    out.push_back({name, r.max_relative_error, r.checked});
  };
  auto leaf = [&](Shape s, double lo = -1.0, double hi = 1.0) {
    return random_tensor(std::move(s), rng, lo, hi, true);
  };
  auto weights = [&](Shape s) { return random_tensor(std::move(s), rng); };

  {
    Tensor a = leaf({3, 4}), b = leaf({4, 2});
    Tensor w = weights({3, 2});
    run("matmul", [=] { return contract(matmul(a, b), w); }, {a, b});
  }
  {
    Tensor x = leaf({3, 4});
    Tensor w = weights({4, 3});
    run("transpose", [=] { return contract(transpose(x), w); }, {x});
  }
  {
    Tensor a = leaf({2, 3}), b = leaf({2, 3});
    Tensor w = weights({2, 3});
    run("add", [=] { return contract(add(a, b), w); }, {a, b});
    run("sub", [=] { return contract(sub(a, b), w); }, {a, b});
    run("mul", [=] { return contract(mul(a, b), w); }, {a, b});
  }
  {
    Tensor x = leaf({3, 4}), bias = leaf({4});
    Tensor w = weights({3, 4});
    run("add_row", [=] { return contract(add_row(x, bias), w); }, {x, bias});
    run("scale", [=] { return contract(scale(x, Real{-1.7}), w); }, {x});
  }
  {
    Tensor x = leaf({2, 3}), s = leaf({1});
    Tensor w = weights({2, 3});
    run("scale_by", [=] { return contract(scale_by(x, s), w); }, {x, s});
  }
  {
    Tensor x = leaf({3, 3}, -3.0, 3.0);
    Tensor w = weights({3, 3});
    run("sigmoid", [=] { return contract(sigmoid(x), w); }, {x});
    run("gelu", [=] { return contract(gelu(x), w); }, {x});
    run("exp", [=] { return contract(exp(x), w); }, {x});
    run("square", [=] { return contract(square(x), w); }, {x});
    run("sum", [=] { return sum(x); }, {x});
    run("mean", [=] { return mean(x); }, {x});
    run("softmax_rows", [=] { return contract(softmax_rows(x), w); }, {x});
    run("l2_normalize_rows", [=] { return contract(l2_normalize_rows(x), w); }, {x});
  }
  {
    Tensor x = leaf({2, 3}, 0.5, 2.0);
    Tensor w = weights({2, 3});
    run("log", [=] { return contract(log(x), w); }, {x});
  }
  {
    Tensor x = leaf({3, 5}), g = leaf({5}, 0.5, 1.5), b = leaf({5});
    Tensor w = weights({3, 5});
    run("layer_norm", [=] { return contract(layer_norm(x, g, b), w); }, {x, g, b});
  }
  {
    Tensor logits = leaf({3, 4}, -2.0, 2.0);
    const std::vector<std::size_t> labels = {1, 3, 0};
    run("cross_entropy", [=] { return cross_entropy(softmax_rows(logits), labels); },
        {logits});
    run("softmax_cross_entropy",
        [=] { return softmax_cross_entropy(logits, labels, {1.0, 0.0, 0.5}); }, {logits});
  }
  {
    Tensor x = leaf({4, 3});
    Tensor w1 = weights({3, 3}), w2 = weights({2, 3}), w3 = weights({6, 3}),
           w4 = weights({2, 3});
    run("gather_rows", [=] { return contract(gather_rows(x, {2, 0, 2}), w1); }, {x});
    run("slice_rows", [=] { return contract(slice_rows(x, 1, 2), w2); }, {x});
    Tensor y = leaf({2, 3});
    run("concat_rows", [=] { return contract(concat_rows({x, y}), w3); }, {x, y});
    run("group_mean_rows", [=] { return contract(group_mean_rows(x, 2), w4); }, {x});
  }
  {
    Tensor x = leaf({4, 5});
    Tensor w = weights({4, 5});
    const std::uint64_t mask_seed = rng.engine()();
    run("dropout",
        [=] {
          Rng mask(mask_seed);
          return contract(dropout(x, Real{0.3}, mask, true), w);
        },
        {x});
  }
  {
    // 2 groups, 2 heads, lq = 2, lk = 3, d = 4.
    Tensor q = leaf({4, 4}), k = leaf({6, 4}), v = leaf({6, 4});
    Tensor w = weights({4, 4});
    run("multi_head_attention",
        [=] { return contract(multi_head_attention(q, k, v, 2, 2), w); }, {q, k, v});
  }
  return out;
}

ModelConfig toy_model_config() {
  ModelConfig c;
  c.n_attrs = 2;
  c.n_objs = 3;
  c.prompt_prefix = 2;
  c.image.grid_side = 2;
  c.image.patch_dim = 4;
  c.image.d_v = 8;
  c.image.d_t = 8;
  c.image.lower_layers = 1;
  c.image.upper_layers = 2;
  c.image.heads = 2;
  c.image.lora.rank = 2;
  c.text.layers = 1;
  c.text.heads = 2;
  c.gca.heads = 2;
  c.gca.latent_units = 2;
  c.gca.ffn_mult = 2;
  c.msd.heads = 2;
  c.msd.ffn_mult = 2;
  c.normalize();
  return c;
}

NamedCheck full_loss_gradient_check(std::uint64_t seed, double h) {
  CamsModel model(toy_model_config(), seed);
  Rng rng(stream_seed(seed, "toy-loss"));
  // Give the adapters a non-zero up-projection so the down-projection
  // gradient is exercised too.
  for (auto& p : model.parameters().all()) {
    if (p.name.ends_with(".lora_b")) {
      for (auto& v : p.tensor.mutable_data()) v = static_cast<Real>(rng.normal(0.0, 0.1));
    }
  }
  const auto& cfg = model.config();
  const std::size_t patches = cfg.image.patches();
  std::vector<Tensor> images = {random_tensor({patches, cfg.image.patch_dim}, rng),
                                random_tensor({patches, cfg.image.patch_dim}, rng)};
  FeatureSet fs;
  fs.h0 = model.lower_features(images);
  fs.labels = {{0, 1}, {1, 2}};
  const std::vector<Composition> seen = {{0, 0}, {0, 1}, {1, 2}, {1, 0}};
  BatchLabels labels;
  labels.attr = {0, 1};
  labels.obj = {1, 2};
  labels.seen_composition = {1, 2};
  labels.attribute_weights = {1, 0};
  const Tensor h0 = fs.stack({0, 1});
  const std::uint64_t dropout_seed = rng.engine()();

  std::vector<Tensor> inputs;
  for (Parameter* p : model.parameters().trainable()) inputs.push_back(p->tensor);
  const auto f = [&] {
    Rng masks(dropout_seed);
    const ForwardContext ctx{true, &masks};
    const BranchRepresentations reps = model.represent(h0, 2, ctx);
    return total_loss(model.logits(reps, model.prompts(seen)), labels, cfg.branch).total;
  };
  const GradCheckResult r = finite_difference_check(f, inputs, h);
  return {"total_loss", r.max_relative_error, r.checked};
}

EvalTable random_eval_table(Rng& rng, std::size_t samples, std::size_t candidates) {
  EvalTable t;
  t.candidates = candidates;
  t.candidate_seen.resize(candidates);
  for (;;) {
    std::size_t n_seen = 0;
    for (std::size_t k = 0; k < candidates; ++k) {
      t.candidate_seen[k] = rng.bernoulli(0.5);
      n_seen += t.candidate_seen[k] ? 1 : 0;
    }
    if (n_seen > 0 && n_seen < candidates) break;
  }
  t.scores.resize(samples * candidates);
  for (auto& s : t.scores) s = rng.uniform(0.0, 1.0);
  for (;;) {
    t.truth.clear();
    bool any_seen = false, any_unseen = false;
    for (std::size_t i = 0; i < samples; ++i) {
      const std::size_t k = rng.index(candidates);
      t.truth.push_back(k);
      (t.candidate_seen[k] ? any_seen : any_unseen) = true;
    }
    if (any_seen && any_unseen) break;
  }
  return t;
}

double report_distance(const MetricReport& a, const MetricReport& b) {
  return std::max({std::abs(a.best_seen - b.best_seen),
                   std::abs(a.best_unseen - b.best_unseen),
                   std::abs(a.best_hm - b.best_hm), std::abs(a.auc - b.auc)});
}

ExperimentConfig small_experiment_config(std::uint64_t seed) {
  ExperimentConfig c = default_config();
  c.seed = seed;
  c.data.n_attrs = 3;
  c.data.n_objs = 4;
  c.data.seen_fraction = 0.6;
  c.data.train_per_seen = 4;
  c.data.test_per_seen = 2;
  c.data.test_per_unseen = 3;
  c.data.grid_side = 2;
  c.data.patch_dim = 8;
  c.model.image.d_v = 16;
  c.model.image.d_t = 8;
  c.model.image.lower_layers = 1;
  c.model.image.upper_layers = 2;
  c.model.image.lora.rank = 2;
  c.model.gca.latent_units = 2;
  c.model.text.layers = 1;
  c.model.prompt_prefix = 2;
  c.batch_size = 8;
  c.epochs = 2;
  c.lr = 1e-3;
  c.normalize();
  return c;
}

}  // namespace cams::testing
