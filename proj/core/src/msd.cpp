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

#include "cams/msd.hpp"

#include <string>

#include "cams/errors.hpp"

namespace cams {

std::string_view space_name(Space s) {
  switch (s) {
    case Space::kAttribute:
      return "attribute";
    case Space::kObject:
      return "object";
    case Space::kComposition:
      return "composition";
  }
  return "unknown";
}

Tensor SpaceEncoder::encode(const Tensor& latents, std::size_t batch,
                            const ForwardContext& ctx) const {
  Tensor h = latents;
  for (const auto& block : blocks) h = block.forward(h, batch, ctx);
  return final_norm.forward(h);
}

const Tensor& DisentangledLatents::operator[](Space s) const {
  switch (s) {
    case Space::kAttribute:
      return attribute;
    case Space::kObject:
      return object;
    case Space::kComposition:
      return composition;
  }
  throw IndexError("unknown space");
}

SpaceModeler::SpaceModeler(ParameterStore& store, const MsdConfig& config,
                           std::uint64_t seed)
    : config_(config) {
  if (config.layers == 0) throw ConfigError("msd: each space needs >= 1 layer");
  for (Space s : kSpaces) {
    const std::string prefix = "msd." + std::string(space_name(s));
    Rng rng(stream_seed(seed, prefix));
    SpaceEncoder& e = encoders_[static_cast<std::size_t>(s)];
    TransformerBlockOptions opts{config.d_v, config.heads, config.ffn_mult, false,
                                 std::nullopt};
    for (std::size_t i = 0; i < config.layers; ++i) {
      e.blocks.push_back(make_transformer_block(
          store, prefix + ".block" + std::to_string(i), opts, rng));
    }
    e.final_norm = make_layer_norm(store, prefix + ".final_norm", config.d_v, false);
    e.projection =
        make_linear(store, prefix + ".proj", config.d_v, config.d_t, true, rng, false);
  }
}

DisentangledLatents disentangle(const Tensor& latents, std::size_t batch,
                                const SpaceModeler& modeler,
                                const ForwardContext& ctx) {
  if (latents.cols() != modeler.config().d_v) {
    throw DimensionError("disentangle: latents " + shape_to_string(latents.shape()) +
                         " do not have width " +
                         std::to_string(modeler.config().d_v));
  }
  DisentangledLatents out;
  out.attribute = modeler.encoder(Space::kAttribute).encode(latents, batch, ctx);
  out.object = modeler.encoder(Space::kObject).encode(latents, batch, ctx);
  out.composition = modeler.encoder(Space::kComposition).encode(latents, batch, ctx);
  return out;
}

Tensor pool_project(const Tensor& latents, std::size_t batch,
                    const Linear& projection) {
  if (batch == 0 || latents.rows() % batch != 0) {
    throw DimensionError("pool_project: " + shape_to_string(latents.shape()) +
                         " does not split into " + std::to_string(batch) +
                         " samples");
  }
  return projection.forward(group_mean_rows(latents, latents.rows() / batch));
}

}  // namespace cams
