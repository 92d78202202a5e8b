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

#include "cams/backbone.hpp"
#include "cams/evaluation.hpp"
#include "cams/gca.hpp"
#include "cams/msd.hpp"
#include "cams/objective.hpp"
#include "cams/optim.hpp"

namespace cams {

struct ModelConfig {
  std::size_t n_attrs = 6;
  std::size_t n_objs = 8;
  std::size_t prompt_prefix = 3;  // r
  ImageEncoderConfig image;
  TextEncoderConfig text;
  GcaConfig gca;
  MsdConfig msd;
  BranchConfig branch;

  // Propagates shared widths (d_v, d_t) and checks consistency.
  void normalize();
  void validate() const;
};

// f_a, f_o, f_c, f_g for a batch, each batch x d_t. Disabled branches stay
// undefined.
struct BranchRepresentations {
  Tensor attribute;
  Tensor object;
  Tensor composition;
  Tensor global;
};

class CamsModel {
 public:
  CamsModel(ModelConfig config, std::uint64_t seed);
  CamsModel(const CamsModel&) = delete;
  CamsModel& operator=(const CamsModel&) = delete;

  const ModelConfig& config() const { return config_; }
  ParameterStore& parameters() { return store_; }
  const ParameterStore& parameters() const { return store_; }

  const StubImageEncoder& image_encoder() const { return image_; }
  const StubTextEncoder& text_encoder() const { return text_; }
  const EmbeddingTables& tables() const { return tables_; }
  const GatedCrossAttention& gca() const { return gca_; }
  const SpaceModeler& msd() const { return msd_; }
  const Tensor& log_tau() const { return log_tau_; }

  // Frozen lower-encoder features H_0, one P x d_v tensor per image.
  std::vector<Tensor> lower_features(const std::vector<Tensor>& patches) const;

  // Branch representations from stacked H_0 ((batch*P) x d_v).
  BranchRepresentations represent(const Tensor& h0, std::size_t batch,
                                  const ForwardContext& ctx) const;

  PromptBank prompts(const std::vector<Composition>& pairs) const;

  BranchOutputs logits(const BranchRepresentations& reps,
                       const PromptBank& bank) const;

 private:
  ModelConfig config_;
  ParameterStore store_;
  StubImageEncoder image_;
  StubTextEncoder text_;
  EmbeddingTables tables_;
  GatedCrossAttention gca_;
  SpaceModeler msd_;
  Tensor log_tau_;
};

// Lower-encoder features with composition labels.
struct FeatureSet {
  std::vector<Tensor> h0;
  std::vector<Composition> labels;

  std::size_t size() const { return labels.size(); }
  Tensor stack(const std::vector<std::size_t>& indices) const;
};

struct TrainOptions {
  std::size_t batch_size = 64;
  std::uint64_t seed = 0;
};

struct EpochStats {
  std::size_t epoch = 0;
  double lr = 0;
  double total = 0;
  double attribute = 0;
  double object = 0;
  double composition = 0;
  double global = 0;
  std::size_t steps = 0;
};

// One pass over `train` in seeded shuffled batches. `seen` is the training
// candidate set for the composition and global branches.
EpochStats train_epoch(CamsModel& model, const FeatureSet& train,
                       const std::vector<Composition>& seen, Adam& optimizer,
                       const TrainOptions& options, std::size_t epoch);

// Fused scores of every sample against `candidates`, flagged by membership in
// `seen`.
EvalTable score_table(const CamsModel& model, const FeatureSet& samples,
                      const std::vector<Composition>& candidates,
                      const std::vector<Composition>& seen,
                      std::size_t batch_size = 64);

// Evaluation-mode representations for every sample.
BranchRepresentations represent_all(const CamsModel& model,
                                    const FeatureSet& samples,
                                    std::size_t batch_size = 64);

}  // namespace cams
