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

#include "cams/objective.hpp"

#include <algorithm>
#include <map>

#include "cams/errors.hpp"
#include "cams/ops.hpp"

namespace cams {

void BranchFlags::validate() const {
  if (attribute != object) {
    throw ConfigError("attribute and object branches must be enabled together");
  }
  if (!global && !composition && !primitives()) {
    throw ConfigError("at least one branch must be enabled");
  }
}

void BranchConfig::validate() const {
  if (alpha_attribute < 0 || alpha_object < 0 || alpha_composition < 0 ||
      alpha_global < 0) {
    throw ConfigError("loss coefficients must be non-negative");
  }
  if (beta < 0 || beta > 1) throw ConfigError("beta must lie in [0, 1]");
  if (!(tau_init > 0)) throw ConfigError("temperature must be positive");
  if (attribute_dropout < 0 || attribute_dropout >= 1) {
    throw ConfigError("attribute dropout must lie in [0, 1)");
  }
  branches.validate();
}

Tensor branch_logits(const Tensor& features, const Tensor& prompts,
                     const Tensor& log_tau) {
  if (!prompts.defined() || prompts.rows() == 0) {
    throw ContractError("branch_probabilities: empty candidate set");
  }
  if (features.cols() != prompts.cols()) {
    throw DimensionError("branch_probabilities: features " +
                         shape_to_string(features.shape()) + " vs prompts " +
                         shape_to_string(prompts.shape()));
  }
  const Tensor sims =
      matmul(l2_normalize_rows(features), transpose(l2_normalize_rows(prompts)));
  return scale_by(sims, exp(scale(log_tau, Real{-1})));
}

Tensor branch_probabilities(const Tensor& features, const Tensor& prompts,
                            const Tensor& log_tau) {
  return softmax_rows(branch_logits(features, prompts, log_tau));
}

namespace {

template <typename Loss>
LossBreakdown combine(const BranchOutputs& out, const BatchLabels& labels,
                      const BranchConfig& cfg, Loss loss) {
  LossBreakdown r;
  std::vector<Tensor> terms;
  auto term = [&](const Tensor& t, const std::vector<std::size_t>& y,
                  const std::vector<Real>& w, double alpha, double& slot) {
    if (!t.defined()) return;
    Tensor l = loss(t, y, w);
    slot = l.item();
    terms.push_back(scale(l, static_cast<Real>(alpha)));
  };
  const auto& f = cfg.branches;
  if (f.attribute) term(out.attribute, labels.attr, labels.attribute_weights,
                        cfg.alpha_attribute, r.attribute);
  if (f.object) term(out.object, labels.obj, {}, cfg.alpha_object, r.object);
  if (f.composition) term(out.composition, labels.seen_composition, {},
                          cfg.alpha_composition, r.composition);
  if (f.global) term(out.global, labels.seen_composition, {}, cfg.alpha_global,
                     r.global);
  if (terms.empty()) throw ContractError("total_loss: no enabled branch outputs");
  r.total = terms.front();
  for (std::size_t i = 1; i < terms.size(); ++i) r.total = add(r.total, terms[i]);
  return r;
}

}  // namespace

LossBreakdown total_loss(const BranchOutputs& logits, const BatchLabels& labels,
                         const BranchConfig& config) {
  return combine(logits, labels, config,
                 [](const Tensor& t, const std::vector<std::size_t>& y,
                    const std::vector<Real>& w) {
                   return softmax_cross_entropy(t, y, w);
                 });
}

LossBreakdown total_loss_from_probabilities(const BranchOutputs& probs,
                                            const BatchLabels& labels,
                                            const BranchConfig& config) {
  return combine(probs, labels, config,
                 [](const Tensor& t, const std::vector<std::size_t>& y,
                    const std::vector<Real>& w) {
                   if (w.empty()) return cross_entropy(t, y);
                   // Drop masked samples; keep the 1/B normalisation.
                   std::vector<std::size_t> keep;
                   std::vector<std::size_t> kept_labels;
                   for (std::size_t i = 0; i < y.size(); ++i) {
                     if (w[i] != 0) {
                       keep.push_back(i);
                       kept_labels.push_back(y[i]);
                     }
                   }
                   if (keep.empty()) return scale(sum(t), Real{0});
                   const Real frac =
                       static_cast<Real>(keep.size()) / static_cast<Real>(y.size());
                   return scale(cross_entropy(gather_rows(t, keep), kept_labels), frac);
                 });
}

std::vector<std::size_t> seen_indices(const std::vector<Composition>& truth,
                                      const std::vector<Composition>& seen) {
  std::map<Composition, std::size_t> index;
  for (std::size_t i = 0; i < seen.size(); ++i) index.emplace(seen[i], i);
  std::vector<std::size_t> out;
  out.reserve(truth.size());
  for (const auto& c : truth) {
    auto it = index.find(c);
    if (it == index.end()) {
      throw ContractError("training label (" + std::to_string(c.attr) + ", " +
                          std::to_string(c.obj) +
                          ") is not a seen composition");
    }
    out.push_back(it->second);
  }
  return out;
}

std::vector<Real> fuse_scores(std::span<const Real> p_global,
                              std::span<const Real> p_composition,
                              std::span<const Real> p_attribute,
                              std::span<const Real> p_object,
                              const std::vector<Composition>& pairs, double beta,
                              const BranchFlags& flags) {
  flags.validate();
  if ((flags.global && p_global.size() != pairs.size()) ||
      (flags.composition && p_composition.size() != pairs.size())) {
    throw DimensionError("fuse_scores: composition probabilities do not match " +
                         std::to_string(pairs.size()) + " candidate pairs");
  }
  double b = beta;
  if (!flags.composition) b = 1.0;
  if (!flags.global) b = 0.0;
  std::vector<Real> s(pairs.size(), Real{0});
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    double v = 0;
    if (flags.global) v += b * p_global[k];
    if (flags.composition) v += (1.0 - b) * p_composition[k];
    if (flags.primitives()) {
      if (pairs[k].attr >= p_attribute.size() || pairs[k].obj >= p_object.size()) {
        throw IndexError("fuse_scores: pair (" + std::to_string(pairs[k].attr) +
                         ", " + std::to_string(pairs[k].obj) +
                         ") references an unknown primitive");
      }
      v += static_cast<double>(p_attribute[pairs[k].attr]) * p_object[pairs[k].obj];
    }
    s[k] = static_cast<Real>(v);
  }
  return s;
}

std::size_t argmax(std::span<const Real> scores) {
  if (scores.empty()) throw ContractError("argmax of an empty score row");
  std::size_t best = 0;
  for (std::size_t i = 1; i < scores.size(); ++i) {
    if (scores[i] > scores[best]) best = i;
  }
  return best;
}

}  // namespace cams
