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

#include <array>
#include <cstdint>
#include <string_view>
#include <vector>

#include "cams/nn.hpp"

// Multi-Space Disentanglement: three independent transformer encoders map the
// refined latent units into attribute, object and composition spaces, each
// mean-pooled and projected to the text width.
namespace cams {

enum class Space : std::size_t { kAttribute = 0, kObject = 1, kComposition = 2 };

inline constexpr std::array<Space, 3> kSpaces = {Space::kAttribute, Space::kObject,
                                                 Space::kComposition};

std::string_view space_name(Space s);

struct MsdConfig {
  std::size_t d_v = 64;
  std::size_t d_t = 32;
  std::size_t heads = 4;
  std::size_t layers = 1;  // per space
  std::size_t ffn_mult = 4;
};

struct SpaceEncoder {
  std::vector<TransformerBlock> blocks;
  LayerNormParams final_norm;
  Linear projection;  // pi: d_v -> d_t

  Tensor encode(const Tensor& latents, std::size_t batch,
                const ForwardContext& ctx) const;
};

struct DisentangledLatents {
  Tensor attribute;
  Tensor object;
  Tensor composition;

  const Tensor& operator[](Space s) const;
};

class SpaceModeler {
 public:
  SpaceModeler(ParameterStore& store, const MsdConfig& config, std::uint64_t seed);

  const SpaceEncoder& encoder(Space s) const {
    return encoders_[static_cast<std::size_t>(s)];
  }
  const MsdConfig& config() const { return config_; }

 private:
  MsdConfig config_;
  std::array<SpaceEncoder, 3> encoders_;
};

// Runs the three encoders on (batch*K) x d_v latents.
DisentangledLatents disentangle(const Tensor& latents, std::size_t batch,
                                const SpaceModeler& modeler,
                                const ForwardContext& ctx = {});

// Mean over each sample's K rows followed by the space's projection.
Tensor pool_project(const Tensor& latents, std::size_t batch,
                    const Linear& projection);

}  // namespace cams
