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

#include "cams/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "cams/errors.hpp"

namespace cams {

void DatasetConfig::validate() const {
  if (n_attrs < 2 || n_objs < 2) {
    throw GenerationError("need at least 2 attributes and 2 objects");
  }
  if (!(seen_fraction > 0 && seen_fraction < 1)) {
    throw GenerationError("seen fraction must lie in (0, 1)");
  }
  if (train_per_seen == 0 || test_per_unseen == 0) {
    throw GenerationError("every seen composition needs training samples and "
                          "every unseen composition needs test samples");
  }
  if (grid_side == 0 || patch_dim < 2) {
    throw GenerationError("grid side must be >= 1 and patch dim >= 2");
  }
  if (noise_sigma < 0 || clutter_fraction < 0 || clutter_fraction >= 1) {
    throw GenerationError("noise must be >= 0 and clutter fraction in [0, 1)");
  }
}

std::vector<Composition> choose_seen_compositions(std::size_t n_attrs,
                                                  std::size_t n_objs,
                                                  double seen_fraction, Rng& rng) {
  const std::size_t total = n_attrs * n_objs;
  const auto target = static_cast<std::size_t>(
      std::llround(seen_fraction * static_cast<double>(total)));
  std::vector<Composition> all;
  for (std::size_t a = 0; a < n_attrs; ++a)
    for (std::size_t o = 0; o < n_objs; ++o) all.push_back({a, o});
  rng.shuffle(all);

  // Cover pass: take a pair whenever it introduces an unseen primitive.
  std::vector<bool> attr_seen(n_attrs, false), obj_seen(n_objs, false);
  std::vector<bool> taken(total, false);
  std::size_t chosen = 0;
  for (std::size_t k = 0; k < total; ++k) {
    const auto& c = all[k];
    if (!attr_seen[c.attr] || !obj_seen[c.obj]) {
      attr_seen[c.attr] = obj_seen[c.obj] = true;
      taken[k] = true;
      ++chosen;
    }
  }
  if (chosen > target) {
    throw GenerationError(
        "seen fraction " + std::to_string(seen_fraction) + " allows " +
        std::to_string(target) + " seen compositions but covering all " +
        std::to_string(n_attrs) + " attributes and " + std::to_string(n_objs) +
        " objects needs " + std::to_string(chosen));
  }
  if (target >= total) {
    throw GenerationError("seen fraction leaves no unseen compositions");
  }
  for (std::size_t k = 0; k < total && chosen < target; ++k) {
    if (!taken[k]) {
      taken[k] = true;
      ++chosen;
    }
  }
  std::vector<Composition> seen;
  for (std::size_t k = 0; k < total; ++k) {
    if (taken[k]) seen.push_back(all[k]);
  }
  std::sort(seen.begin(), seen.end());
  return seen;
}

namespace {

// Unit-norm prototypes supported on columns [begin, end).
Tensor prototypes(std::size_t count, std::size_t dim, std::size_t begin,
                  std::size_t end, Rng& rng) {
  std::vector<Real> v(count * dim, Real{0});
  for (std::size_t i = 0; i < count; ++i) {
    double norm = 0;
    for (std::size_t j = begin; j < end; ++j) {
      const double x = rng.normal();
      v[i * dim + j] = static_cast<Real>(x);
      norm += x * x;
    }
    norm = std::sqrt(norm);
    for (std::size_t j = begin; j < end; ++j) v[i * dim + j] /= static_cast<Real>(norm);
  }
  return Tensor({count, dim}, std::move(v));
}

Tensor render(const SyntheticDataset& ds, const Composition& c, Rng& rng) {
  const auto& cfg = ds.config;
  const std::size_t cells = cfg.grid_side * cfg.grid_side;
  const std::size_t d = cfg.patch_dim;
  const auto clutter_cells = static_cast<std::size_t>(
      std::llround(cfg.clutter_fraction * static_cast<double>(cells)));
  std::vector<std::size_t> order(cells);
  std::iota(order.begin(), order.end(), std::size_t{0});
  rng.shuffle(order);
  std::vector<bool> is_clutter(cells, false);
  for (std::size_t i = 0; i < clutter_cells && i + 1 < cells; ++i) {
    is_clutter[order[i]] = true;
  }
  const auto a = ds.attribute_prototypes.data().subspan(c.attr * d, d);
  const auto o = ds.object_prototypes.data().subspan(c.obj * d, d);
  std::vector<Real> v(cells * d);
  for (std::size_t cell = 0; cell < cells; ++cell) {
    std::span<const Real> bg;
    if (is_clutter[cell]) {
      const std::size_t k = rng.index(ds.clutter_prototypes.rows());
      bg = ds.clutter_prototypes.data().subspan(k * d, d);
    }
    for (std::size_t j = 0; j < d; ++j) {
      const double signal = is_clutter[cell] ? bg[j] : a[j] + o[j];
      v[cell * d + j] =
          static_cast<Real>(signal + (cfg.noise_sigma > 0
                                          ? rng.normal(0.0, cfg.noise_sigma)
                                          : 0.0));
    }
  }
  return Tensor({cells, d}, std::move(v));
}

}  // namespace

SyntheticDataset generate_dataset(const DatasetConfig& config, std::uint64_t seed) {
  config.validate();
  SyntheticDataset ds;
  ds.config = config;
  ds.seed = seed;
  const std::size_t d = config.patch_dim;
  Rng proto_rng(stream_seed(seed, "data.prototypes"));
  ds.attribute_prototypes = prototypes(config.n_attrs, d, 0, d / 2, proto_rng);
  ds.object_prototypes = prototypes(config.n_objs, d, d / 2, d, proto_rng);
  ds.clutter_prototypes = prototypes(4, d, 0, d, proto_rng);

  Rng split_rng(stream_seed(seed, "data.split"));
  ds.splits.n_attrs = config.n_attrs;
  ds.splits.n_objs = config.n_objs;
  ds.splits.seen = choose_seen_compositions(config.n_attrs, config.n_objs,
                                            config.seen_fraction, split_rng);
  const std::set<Composition> seen(ds.splits.seen.begin(), ds.splits.seen.end());
  for (std::size_t a = 0; a < config.n_attrs; ++a)
    for (std::size_t o = 0; o < config.n_objs; ++o)
      if (!seen.count({a, o})) ds.splits.unseen.push_back({a, o});
  ds.splits.validate();

  Rng sample_rng(stream_seed(seed, "data.samples"));
  for (const auto& c : ds.splits.seen) {
    for (std::size_t i = 0; i < config.train_per_seen; ++i) {
      ds.train_patches.push_back(render(ds, c, sample_rng));
      ds.train_labels.push_back(c);
    }
    for (std::size_t i = 0; i < config.test_per_seen; ++i) {
      ds.test_patches.push_back(render(ds, c, sample_rng));
      ds.test_labels.push_back(c);
    }
  }
  for (const auto& c : ds.splits.unseen) {
    for (std::size_t i = 0; i < config.test_per_unseen; ++i) {
      ds.test_patches.push_back(render(ds, c, sample_rng));
      ds.test_labels.push_back(c);
    }
  }
  std::set<Composition> test(ds.test_labels.begin(), ds.test_labels.end());
  ds.splits.test.assign(test.begin(), test.end());
  return ds;
}

std::vector<double> mean_patch(const Tensor& patches) {
  const std::size_t r = patches.rows(), c = patches.cols();
  std::vector<double> m(c, 0.0);
  const auto v = patches.data();
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) m[j] += v[i * c + j];
  for (auto& x : m) x /= static_cast<double>(r);
  return m;
}

}  // namespace cams
