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
#include <string>
#include <string_view>

#include "cams/dataset.hpp"
#include "cams/model.hpp"
#include "cams/optim.hpp"

namespace cams {

struct ExperimentConfig {
  std::uint64_t seed = 0;
  DatasetConfig data;
  ModelConfig model;
  std::size_t batch_size = 64;
  std::size_t epochs = 15;
  double lr = 1e-4;
  double weight_decay = 1e-5;
  StepDecay scheduler;

  // Copies dataset shape into the model config and propagates widths.
  void normalize();
  void validate() const;

  std::string to_json(int indent = 2) const;
  static ExperimentConfig from_json(const std::string& text);

  // FNV-1a of the canonical (compact, key-sorted) JSON form.
  std::uint64_t hash() const;
};

// Desk-scale defaults: 6 attributes x 8 objects, d_v = 64, d_t = 32, K = 8,
// M = 2, LoRA rank 8.
ExperimentConfig default_config();

// Per-benchmark hyperparameters ("mit-states", "ut-zappos", "cgqa") on top of
// the desk-scale stub dimensions.
ExperimentConfig preset_config(std::string_view name);

// Branch sets written as '+'-joined letters, e.g. "g+c+a+o" or "a+o".
// Throws ConfigError on unknown letters or when a and o are not paired.
BranchFlags parse_branches(std::string_view spec);
std::string branches_name(const BranchFlags& flags);

}  // namespace cams
