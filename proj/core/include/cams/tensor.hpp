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
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace cams {

#ifdef CAMS_REAL_FLOAT
using Real = float;
#else
using Real = double;
#endif

using Shape = std::vector<std::size_t>;

std::string shape_to_string(const Shape& shape);
std::size_t shape_size(const Shape& shape);

namespace detail {

// One vertex of the reverse-mode graph. Every op output owns the closure that
// pushes its gradient back to `inputs`.
struct Node {
  Shape shape;
  std::vector<Real> value;
  std::vector<Real> grad;
  bool requires_grad = false;
  std::string op = "leaf";
  std::vector<std::shared_ptr<Node>> inputs;
  std::function<void(Node&)> backward;

  // Returns the gradient buffer of a tracked node, allocating zeros on first
  // use; nullptr for untracked nodes.
  std::vector<Real>* grad_buffer();
};

}  // namespace detail

// Dense row-major array with optional gradient tracking. Copies share storage;
// use clone() or detach() for an independent value.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, bool requires_grad = false);
  Tensor(Shape shape, std::vector<Real> values, bool requires_grad = false);

  static Tensor scalar(Real value, bool requires_grad = false);
  static Tensor eye(std::size_t n);
  static Tensor matrix(std::size_t rows, std::size_t cols,
                       std::vector<Real> values, bool requires_grad = false);
  static Tensor full(Shape shape, Real value);

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const;
  std::size_t rank() const { return shape().size(); }
  std::size_t size() const;
  // Last dimension; scalars and vectors are viewed as a single row.
  std::size_t cols() const;
  std::size_t rows() const;

  std::span<const Real> data() const;
  // Mutable view for leaf tensors (optimizer updates, loading, perturbation).
  std::span<Real> mutable_data();
  Real item() const;
  Real at(std::size_t row, std::size_t col) const;
  Real operator[](std::size_t flat_index) const { return data()[flat_index]; }

  bool requires_grad() const;
  void set_requires_grad(bool on);
  bool is_leaf() const;
  const std::string& op() const;

  bool has_grad() const;
  std::span<const Real> grad() const;
  std::span<Real> mutable_grad();
  void zero_grad();

  // Reverse-mode sweep from this scalar. Gradients accumulate into leaves.
  void backward() const;

  Tensor detach() const;
  Tensor clone(bool requires_grad = false) const;

  std::shared_ptr<detail::Node> node() const { return node_; }
  static Tensor from_node(std::shared_ptr<detail::Node> node);

 private:
  std::shared_ptr<detail::Node> node_;
};

// Disables graph construction on the current thread while alive.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

bool grad_enabled();

// Builds an op output. `backward` runs only when some input is tracked.
Tensor make_op_result(const char* op, Shape shape, std::vector<Real> values,
                      std::vector<Tensor> inputs,
                      std::function<void(detail::Node&)> backward);

}  // namespace cams
