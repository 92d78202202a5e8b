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
#include "cams/random.hpp"

namespace cams {

struct DatasetConfig {
  std::size_t n_attrs = 6;
  std::size_t n_objs = 8;
  double seen_fraction = 0.7;
  std::size_t train_per_seen = 40;
  std::size_t test_per_seen = 10;
  std::size_t test_per_unseen = 20;
  std::size_t grid_side = 4;
  std::size_t patch_dim = 16;
  double noise_sigma = 0.1;
  double clutter_fraction = 0.25;  // share of grid cells holding background

  void validate() const;
};

// Feature-grid "images": object cells carry object prototype + attribute
// prototype (attributes and objects live in disjoint halves of the patch
// space); clutter cells carry random background prototypes; every cell gets
// Gaussian noise.
struct SyntheticDataset {
  DatasetConfig config;
  std::uint64_t seed = 0;
  Tensor attribute_prototypes;  // n x patch_dim
  Tensor object_prototypes;     // m x patch_dim
  Tensor clutter_prototypes;    // c x patch_dim
  Splits splits;
  std::vector<Tensor> train_patches;  // each (grid_side^2) x patch_dim
  std::vector<Composition> train_labels;
  std::vector<Tensor> test_patches;
  std::vector<Composition> test_labels;
};

// Seen compositions: round(fraction * n * m) pairs covering every attribute
// and object at least once. Throws GenerationError when coverage needs more
// pairs than the fraction allows.
std::vector<Composition> choose_seen_compositions(std::size_t n_attrs,
                                                  std::size_t n_objs,
                                                  double seen_fraction, Rng& rng);

SyntheticDataset generate_dataset(const DatasetConfig& config, std::uint64_t seed);

// Mean patch of one image (the raw feature used by the linear-probe check).
std::vector<double> mean_patch(const Tensor& patches);

}  // namespace cams
