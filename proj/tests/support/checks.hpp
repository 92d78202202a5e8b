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
#include <vector>

#include "cams/config.hpp"
#include "cams/evaluation.hpp"
#include "cams/model.hpp"
#include "cams/random.hpp"
#include "cams/tensor.hpp"

// Shared by the unit tests and the acceptance binary.
namespace cams::testing {

Tensor random_tensor(Shape shape, Rng& rng, double lo = -1.0, double hi = 1.0,
                     bool requires_grad = false);

// Naive triple loop, independent of the library's matmul.
std::vector<double> naive_matmul(std::span<const Real> a, std::span<const Real> b,
                                 std::size_t m, std::size_t k, std::size_t n);

struct NamedCheck {
  std::string name;
  double max_relative_error = 0;
  std::size_t checked = 0;
};

// Finite-difference checks of every differentiable primitive on random inputs.
std::vector<NamedCheck> primitive_gradient_checks(std::uint64_t seed, double h = 1e-5);

// Tiny model used by the end-to-end gradient check: d_v = 8, K = 2, M = 2.
ModelConfig toy_model_config();

// Finite-difference check of the total training loss over every trainable
// parameter for a 2-sample toy batch.
NamedCheck full_loss_gradient_check(std::uint64_t seed, double h = 1e-5);

// Random evaluation table with at least one seen-truth and one unseen-truth
// sample.
EvalTable random_eval_table(Rng& rng, std::size_t samples, std::size_t candidates);

// Largest absolute difference between two reports (scalars and curve).
double report_distance(const MetricReport& a, const MetricReport& b);

// Small, fast experiment configuration for harness tests.
ExperimentConfig small_experiment_config(std::uint64_t seed);

}  // namespace cams::testing
