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

#include "cams/model.hpp"

#include <cmath>
#include <map>
#include <numeric>

#include "cams/errors.hpp"

namespace cams {

void ModelConfig::normalize() {
  gca.d_v = image.d_v;
  msd.d_v = image.d_v;
  msd.d_t = image.d_t;
  text.d_t = image.d_t;
  text.max_length = std::max(text.max_length, prompt_prefix + 2);
}

void ModelConfig::validate() const {
  if (n_attrs < 1 || n_objs < 1) throw ConfigError("need attributes and objects");
  if (prompt_prefix == 0) throw ConfigError("prompt prefix length must be >= 1");
  if (image.upper_layers == 0) throw ConfigError("M must be >= 1");
  if (gca.d_v != image.d_v || msd.d_v != image.d_v || msd.d_t != image.d_t ||
      text.d_t != image.d_t) {
    throw ConfigError("inconsistent model widths; call normalize()");
  }
  if (image.lora.rank > image.d_v) {
    throw ConfigError("LoRA rank " + std::to_string(image.lora.rank) +
                      " exceeds width " + std::to_string(image.d_v));
  }
  branch.validate();
}

namespace {

ModelConfig prepared(ModelConfig c) {
  c.normalize();
  c.validate();
  return c;
}

}  // namespace

CamsModel::CamsModel(ModelConfig config, std::uint64_t seed)
    : config_(prepared(std::move(config))),
      image_(store_, config_.image, seed),
      text_(store_, config_.text, seed),
      tables_(make_embedding_tables(store_, config_.n_attrs, config_.n_objs,
                                    config_.image.d_t, config_.prompt_prefix, seed)),
      gca_(store_, config_.gca, seed),
      msd_(store_, config_.msd, seed),
      log_tau_(store_.add("objective.log_tau",
                          Tensor::scalar(static_cast<Real>(
                              std::log(config_.branch.tau_init))))) {
  const auto& f = config_.branch.branches;
  if (!f.composition && !f.primitives()) store_.set_frozen("gca.", true);
  if (!config_.gca.gate_enabled) {
    store_.set_frozen("gca.w_z", true);
    store_.set_frozen("gca.u_z", true);
  }
  if (!f.primitives()) {
    store_.set_frozen("msd.attribute.", true);
    store_.set_frozen("msd.object.", true);
  }
  if (!f.composition) store_.set_frozen("msd.composition.", true);
}

std::vector<Tensor> CamsModel::lower_features(
    const std::vector<Tensor>& patches) const {
  NoGradGuard no_grad;
  std::vector<Tensor> out;
  out.reserve(patches.size());
  for (const auto& p : patches) out.push_back(image_.encode_lower(p, 1));
  return out;
}

BranchRepresentations CamsModel::represent(const Tensor& h0, std::size_t batch,
                                           const ForwardContext& ctx) const {
  const auto& f = config_.branch.branches;
  const ImageEncoding enc = image_.encode_upper(h0, batch, ctx);
  BranchRepresentations reps;
  if (f.global) reps.global = enc.global;
  if (f.composition || f.primitives()) {
    const Tensor latents = gca_.forward(enc.hidden, batch);
    auto branch = [&](Space s) {
      const SpaceEncoder& e = msd_.encoder(s);
      return pool_project(e.encode(latents, batch, ctx), batch, e.projection);
    };
    if (f.primitives()) {
      reps.attribute = branch(Space::kAttribute);
      reps.object = branch(Space::kObject);
    }
    if (f.composition) reps.composition = branch(Space::kComposition);
  }
  return reps;
}

PromptBank CamsModel::prompts(const std::vector<Composition>& pairs) const {
  const auto& f = config_.branch.branches;
  const bool need_pairs = f.global || f.composition;
  return encode_prompts(text_, tables_,
                        need_pairs ? pairs : std::vector<Composition>{},
                        f.primitives());
}

BranchOutputs CamsModel::logits(const BranchRepresentations& reps,
                                const PromptBank& bank) const {
  BranchOutputs out;
  if (reps.attribute.defined())
    out.attribute = branch_logits(reps.attribute, bank.attributes, log_tau_);
  if (reps.object.defined())
    out.object = branch_logits(reps.object, bank.objects, log_tau_);
  if (reps.composition.defined())
    out.composition = branch_logits(reps.composition, bank.compositions, log_tau_);
  if (reps.global.defined())
    out.global = branch_logits(reps.global, bank.compositions, log_tau_);
  return out;
}

Tensor FeatureSet::stack(const std::vector<std::size_t>& indices) const {
  std::vector<Tensor> parts;
  parts.reserve(indices.size());
  for (std::size_t i : indices) parts.push_back(h0.at(i));
  NoGradGuard no_grad;
  return concat_rows(parts);
}

EpochStats train_epoch(CamsModel& model, const FeatureSet& train,
                       const std::vector<Composition>& seen, Adam& optimizer,
                       const TrainOptions& options, std::size_t epoch) {
  if (train.size() == 0) throw ContractError("train_epoch: empty training split");
  if (options.batch_size == 0) throw ConfigError("batch size must be >= 1");
  const BranchConfig& cfg = model.config().branch;
  const auto seen_idx = seen_indices(train.labels, seen);

  Rng rng(stream_seed(options.seed, "train", epoch));
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  rng.shuffle(order);

  EpochStats stats;
  stats.epoch = epoch;
  stats.lr = optimizer.lr();
  const ForwardContext ctx{true, &rng};
  for (std::size_t start = 0; start < order.size(); start += options.batch_size) {
    const std::size_t end = std::min(order.size(), start + options.batch_size);
    const std::vector<std::size_t> idx(order.begin() + static_cast<std::ptrdiff_t>(start),
                                       order.begin() + static_cast<std::ptrdiff_t>(end));
    const std::size_t b = idx.size();
    BatchLabels labels;
    for (std::size_t i : idx) {
      labels.attr.push_back(train.labels[i].attr);
      labels.obj.push_back(train.labels[i].obj);
      labels.seen_composition.push_back(seen_idx[i]);
      labels.attribute_weights.push_back(
          rng.bernoulli(cfg.attribute_dropout) ? Real{0} : Real{1});
    }
    LossBreakdown loss;
    try {
      const BranchRepresentations reps = model.represent(train.stack(idx), b, ctx);
      loss = total_loss(model.logits(reps, model.prompts(seen)), labels, cfg);
      loss.total.backward();
    } catch (const NumericError& e) {
      throw NumericError("epoch " + std::to_string(epoch) + ", batch starting at " +
                         std::to_string(start) + ": " + e.what());
    }
    optimizer.step();
    const double w = static_cast<double>(b);
    stats.total += w * loss.total.item();
    stats.attribute += w * loss.attribute;
    stats.object += w * loss.object;
    stats.composition += w * loss.composition;
    stats.global += w * loss.global;
    ++stats.steps;
  }
  const double n = static_cast<double>(train.size());
  stats.total /= n;
  stats.attribute /= n;
  stats.object /= n;
  stats.composition /= n;
  stats.global /= n;
  return stats;
}

EvalTable score_table(const CamsModel& model, const FeatureSet& samples,
                      const std::vector<Composition>& candidates,
                      const std::vector<Composition>& seen,
                      std::size_t batch_size) {
  NoGradGuard no_grad;
  const auto& flags = model.config().branch.branches;
  std::map<Composition, std::size_t> position;
  for (std::size_t k = 0; k < candidates.size(); ++k) position.emplace(candidates[k], k);
  std::map<Composition, bool> seen_map;
  for (const auto& c : seen) seen_map[c] = true;

  EvalTable table;
  table.candidates = candidates.size();
  for (const auto& c : candidates) table.candidate_seen.push_back(seen_map.count(c) > 0);
  table.scores.reserve(samples.size() * candidates.size());

  const PromptBank bank = model.prompts(candidates);
  const ForwardContext ctx;
  for (std::size_t start = 0; start < samples.size(); start += batch_size) {
    const std::size_t end = std::min(samples.size(), start + batch_size);
    std::vector<std::size_t> idx(end - start);
    std::iota(idx.begin(), idx.end(), start);
    const auto reps = model.represent(samples.stack(idx), idx.size(), ctx);
    const BranchOutputs out = model.logits(reps, bank);
    const Tensor pa = out.attribute.defined() ? softmax_rows(out.attribute) : Tensor();
    const Tensor po = out.object.defined() ? softmax_rows(out.object) : Tensor();
    const Tensor pc = out.composition.defined() ? softmax_rows(out.composition) : Tensor();
    const Tensor pg = out.global.defined() ? softmax_rows(out.global) : Tensor();
    auto row = [](const Tensor& t, std::size_t i) -> std::span<const Real> {
      if (!t.defined()) return {};
      return t.data().subspan(i * t.cols(), t.cols());
    };
    for (std::size_t i = 0; i < idx.size(); ++i) {
      const auto s = fuse_scores(row(pg, i), row(pc, i), row(pa, i), row(po, i),
                                 candidates, model.config().branch.beta, flags);
      table.scores.insert(table.scores.end(), s.begin(), s.end());
      auto it = position.find(samples.labels[idx[i]]);
      if (it == position.end()) {
        throw ContractError("sample label is not among the evaluation candidates");
      }
      table.truth.push_back(it->second);
    }
  }
  return table;
}

BranchRepresentations represent_all(const CamsModel& model,
                                    const FeatureSet& samples,
                                    std::size_t batch_size) {
  NoGradGuard no_grad;
  std::vector<Tensor> a, o, c, g;
  const ForwardContext ctx;
  for (std::size_t start = 0; start < samples.size(); start += batch_size) {
    const std::size_t end = std::min(samples.size(), start + batch_size);
    std::vector<std::size_t> idx(end - start);
    std::iota(idx.begin(), idx.end(), start);
    const auto reps = model.represent(samples.stack(idx), idx.size(), ctx);
    if (reps.attribute.defined()) a.push_back(reps.attribute);
    if (reps.object.defined()) o.push_back(reps.object);
    if (reps.composition.defined()) c.push_back(reps.composition);
    if (reps.global.defined()) g.push_back(reps.global);
  }
  BranchRepresentations all;
  if (!a.empty()) all.attribute = concat_rows(a);
  if (!o.empty()) all.object = concat_rows(o);
  if (!c.empty()) all.composition = concat_rows(c);
  if (!g.empty()) all.global = concat_rows(g);
  return all;
}

}  // namespace cams
