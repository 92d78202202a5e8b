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

#include <cstddef>
#include <vector>

#include "cams/random.hpp"
#include "cams/tensor.hpp"

// Differentiable whole-tensor primitives. Matrices are row-major; a rank-1
// tensor behaves as a single row.
namespace cams {

Tensor matmul(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& x);

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
// x + bias, with bias (size = cols) broadcast over rows.
Tensor add_row(const Tensor& x, const Tensor& bias);
Tensor scale(const Tensor& x, Real factor);
// x * s for a one-element tensor s.
Tensor scale_by(const Tensor& x, const Tensor& s);

Tensor sigmoid(const Tensor& x);
Tensor gelu(const Tensor& x);
Tensor exp(const Tensor& x);
Tensor log(const Tensor& x);
Tensor square(const Tensor& x);
Tensor sum(const Tensor& x);
Tensor mean(const Tensor& x);

Tensor softmax_rows(const Tensor& x);
Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta,
                  Real eps = Real{1e-5});
Tensor l2_normalize_rows(const Tensor& x);

inline constexpr Real kProbabilityFloor = Real{1e-12};

struct CrossEntropyDiagnostics {
  // Samples whose label probability fell below kProbabilityFloor.
  std::size_t clamped = 0;
};

// -(1/B) sum_b log p[b, label_b] over a batch of probability rows.
Tensor cross_entropy(const Tensor& probs, const std::vector<std::size_t>& labels,
                     CrossEntropyDiagnostics* diagnostics = nullptr);

// Fused log-softmax + cross-entropy over logit rows with optional per-sample
// weights: -(1/B) sum_b w_b log softmax(logits_b)[label_b].
Tensor softmax_cross_entropy(const Tensor& logits,
                             const std::vector<std::size_t>& labels,
                             const std::vector<Real>& weights = {});

Tensor gather_rows(const Tensor& x, const std::vector<std::size_t>& rows);
Tensor slice_rows(const Tensor& x, std::size_t begin, std::size_t count);
Tensor concat_rows(const std::vector<Tensor>& parts);
// Mean of each consecutive block of `group_size` rows.
Tensor group_mean_rows(const Tensor& x, std::size_t group_size);

// Inverted dropout. Identity when !training or rate == 0.
Tensor dropout(const Tensor& x, Real rate, Rng& rng, bool training);

// Scaled dot-product attention over `groups` independent sequences stacked
// row-wise. q: (groups*lq) x d, k and v: (groups*lk) x d. Heads split the d
// columns evenly. If `weights` is given it receives the attention matrices,
// laid out [group][head][lq][lk].
Tensor multi_head_attention(const Tensor& q, const Tensor& k, const Tensor& v,
                            std::size_t groups, std::size_t heads,
                            std::vector<Real>* weights = nullptr);

}  // namespace cams
