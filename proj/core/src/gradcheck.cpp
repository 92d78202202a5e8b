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

#include "cams/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "cams/errors.hpp"

namespace cams {

GradCheckResult finite_difference_check(const std::function<Tensor()>& f,
                                        std::vector<Tensor> inputs, double h) {
  if (!(h > 0)) throw ContractError("finite_difference_check: h must be > 0");
  for (const auto& x : inputs) {
    if (!x.requires_grad() || !x.is_leaf()) {
      throw ContractError("finite_difference_check: inputs must be tracked leaves");
    }
  }
  for (auto& x : inputs) x.zero_grad();
  const Tensor y = f();
  if (y.size() != 1) {
    throw ContractError("finite_difference_check: f must be scalar-valued");
  }
  const Real base = y.item();
  // An output that does not depend on any input has zero gradient.
  if (y.requires_grad()) y.backward();
  {
    NoGradGuard no_grad;
    if (f().item() != base) {
      throw ContractError(
          "finite_difference_check: f is not deterministic (re-evaluation "
          "differs)");
    }
  }

  GradCheckResult result;
  NoGradGuard no_grad;
  for (auto& x : inputs) {
    std::vector<Real> analytic(x.grad().begin(), x.grad().end());
    auto data = x.mutable_data();
    for (std::size_t i = 0; i < data.size(); ++i) {
      const Real saved = data[i];
      data[i] = static_cast<Real>(saved + h);
      const double plus = f().item();
      data[i] = static_cast<Real>(saved - h);
      const double minus = f().item();
      data[i] = saved;
      const double numeric = (plus - minus) / (2.0 * h);
      const double err =
          std::abs(analytic[i] - numeric) / std::max(1.0, std::abs(numeric));
      result.max_relative_error = std::max(result.max_relative_error, err);
      ++result.checked;
    }
  }
  return result;
}

GradCheckResult finite_difference_check(
    const std::function<Tensor(const Tensor&)>& f, Tensor x, double h) {
  return finite_difference_check([&] { return f(x); }, {x}, h);
}

}  // namespace cams
