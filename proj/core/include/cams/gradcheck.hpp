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

#include <functional>
#include <vector>

#include "cams/tensor.hpp"

namespace cams {

struct GradCheckResult {
  // max |analytic - numeric| / max(1, |numeric|) over all checked entries.
  double max_relative_error = 0.0;
  std::size_t checked = 0;
};

// Central-difference check of backward() for a scalar function of the given
// leaf tensors. Each input must require grad. Throws ContractError when two
// evaluations at the same point disagree (non-deterministic f).
GradCheckResult finite_difference_check(
    const std::function<Tensor()>& f, std::vector<Tensor> inputs,
    double h = 1e-5);

// Single-input convenience overload.
GradCheckResult finite_difference_check(
    const std::function<Tensor(const Tensor&)>& f, Tensor x, double h = 1e-5);

}  // namespace cams
