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

#include <vector>

#include "cams/backbone.hpp"
#include "cams/tensor.hpp"

namespace cams {

// Which of the four branches take part in training and scoring. Attribute and
// object branches are toggled together.
struct BranchFlags {
  bool global = true;
  bool composition = true;
  bool attribute = true;
  bool object = true;

  bool primitives() const { return attribute && object; }
  void validate() const;
};

struct BranchConfig {
  double alpha_attribute = 0.5;
  double alpha_object = 0.5;
  double alpha_composition = 1.0;
  double alpha_global = 1.0;
  double tau_init = 0.01;
  double beta = 0.85;
  double attribute_dropout = 0.3;
  BranchFlags branches;

  void validate() const;
};

// Cosine similarities between rows of `features` and `prompts`, divided by
// tau = exp(log_tau). Returns rows x prompts.
Tensor branch_logits(const Tensor& features, const Tensor& prompts,
                     const Tensor& log_tau);

// Softmax of branch_logits; one probability row per feature row.
Tensor branch_probabilities(const Tensor& features, const Tensor& prompts,
                            const Tensor& log_tau);

// Per-branch outputs for a batch; undefined for disabled branches. Training
// uses logits over A, O and the seen compositions.
struct BranchOutputs {
  Tensor attribute;
  Tensor object;
  Tensor composition;
  Tensor global;
};

struct BatchLabels {
  std::vector<std::size_t> attr;
  std::vector<std::size_t> obj;
  std::vector<std::size_t> seen_composition;  // index into the seen set
  // Per-sample weight of the attribute term (0 drops it); empty means all 1.
  std::vector<Real> attribute_weights;
};

struct LossBreakdown {
  Tensor total;
  double attribute = 0;
  double object = 0;
  double composition = 0;
  double global = 0;
};

// Weighted sum of per-branch cross-entropies from logit rows.
LossBreakdown total_loss(const BranchOutputs& logits, const BatchLabels& labels,
                         const BranchConfig& config);

// Same objective from probability rows (floored cross-entropy).
LossBreakdown total_loss_from_probabilities(const BranchOutputs& probs,
                                            const BatchLabels& labels,
                                            const BranchConfig& config);

// Maps ground-truth pairs to indices in the seen set; ContractError when a
// pair is not seen.
std::vector<std::size_t> seen_indices(const std::vector<Composition>& truth,
                                      const std::vector<Composition>& seen);

// Fused score for one sample over candidate pairs:
//   beta * p_g + (1 - beta) * p_c + p_a[attr] * p_o[obj].
// p_g and p_c are indexed like `pairs`; disabled branches are skipped and
// beta collapses to 1 (global only) or 0 (composition only).
std::vector<Real> fuse_scores(std::span<const Real> p_global,
                              std::span<const Real> p_composition,
                              std::span<const Real> p_attribute,
                              std::span<const Real> p_object,
                              const std::vector<Composition>& pairs, double beta,
                              const BranchFlags& flags = {});

std::size_t argmax(std::span<const Real> scores);

}  // namespace cams
