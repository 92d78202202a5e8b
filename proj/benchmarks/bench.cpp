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

#include <benchmark/benchmark.h>

#include "cams/config.hpp"
#include "cams/dataset.hpp"
#include "cams/evaluation.hpp"
#include "cams/experiment.hpp"
#include "cams/model.hpp"
#include "cams/ops.hpp"

namespace {

using namespace cams;

Tensor random_matrix(std::size_t r, std::size_t c, Rng& rng, bool grad = false) {
  std::vector<Real> v(r * c);
  for (auto& x : v) x = static_cast<Real>(rng.uniform(-1.0, 1.0));
  return Tensor({r, c}, std::move(v), grad);
}

void BM_Matmul(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  Rng rng(1);
  const Tensor a = random_matrix(n, n, rng), b = random_matrix(n, n, rng);
  for (auto _ : state) benchmark::DoNotOptimize(matmul(a, b));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_Matmul)->RangeMultiplier(2)->Range(16, 256)->Complexity();

void BM_MatmulBackward(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  Rng rng(1);
  Tensor a = random_matrix(n, n, rng, true), b = random_matrix(n, n, rng, true);
  for (auto _ : state) {
    sum(matmul(a, b)).backward();
    a.zero_grad();
    b.zero_grad();
  }
}
BENCHMARK(BM_MatmulBackward)->Arg(64)->Arg(128);

void BM_Attention(benchmark::State& state) {
  const auto groups = static_cast<std::size_t>(state.range(0));
  Rng rng(2);
  const Tensor q = random_matrix(groups * 8, 64, rng);
  const Tensor kv = random_matrix(groups * 16, 64, rng);
  for (auto _ : state) benchmark::DoNotOptimize(multi_head_attention(q, kv, kv, groups, 4));
}
BENCHMARK(BM_Attention)->Arg(1)->Arg(16)->Arg(64);

void BM_TrainEpoch(benchmark::State& state) {
  ExperimentConfig cfg = default_config();
  cfg.data.train_per_seen = 4;
  cfg.normalize();
  const SyntheticDataset ds = generate_dataset(cfg.data, 1);
  CamsModel model(cfg.model, 1);
  const FeatureSet train = train_features(model, ds);
  AdamOptions opt;
  opt.lr = cfg.lr;
  Adam adam(model.parameters().trainable(), opt);
  std::size_t epoch = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        train_epoch(model, train, ds.splits.seen, adam, {cfg.batch_size, 1}, epoch++));
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * train.size()));
}
BENCHMARK(BM_TrainEpoch)->Unit(benchmark::kMillisecond);

void BM_BiasSweep(benchmark::State& state) {
  const auto samples = static_cast<std::size_t>(state.range(0));
  const std::size_t candidates = 48;
  Rng rng(3);
  EvalTable t;
  t.candidates = candidates;
  for (std::size_t k = 0; k < candidates; ++k) t.candidate_seen.push_back(k % 3 != 0);
  for (std::size_t i = 0; i < samples; ++i) {
    for (std::size_t k = 0; k < candidates; ++k) t.scores.push_back(rng.uniform());
    t.truth.push_back(i % candidates);
  }
  for (auto _ : state) benchmark::DoNotOptimize(bias_sweep(t));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_BiasSweep)->RangeMultiplier(4)->Range(64, 4096)->Complexity();

}  // namespace

BENCHMARK_MAIN();
