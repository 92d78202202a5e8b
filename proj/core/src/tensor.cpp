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

#include "cams/tensor.hpp"

#include <cmath>
#include <numeric>
#include <sstream>
#include <unordered_set>

#include "cams/errors.hpp"

namespace cams {

namespace {

thread_local bool g_grad_enabled = true;

void check_finite(const std::vector<Real>& values, const std::string& what) {
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!std::isfinite(values[i])) {
      std::ostringstream os;
      os << "non-finite value " << values[i] << " at flat index " << i << " in "
         << what;
      throw NumericError(os.str());
    }
  }
}

void check_shape(const Shape& shape) {
  for (std::size_t d : shape) {
    if (d == 0) {
      throw DimensionError("tensor dimensions must be positive, got " +
                           shape_to_string(shape));
    }
  }
}

}  // namespace

std::string shape_to_string(const Shape& shape) {
  std::ostringstream os;
  os << "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << "x";
    os << shape[i];
  }
  os << "]";
  return os.str();
}

std::size_t shape_size(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                         std::multiplies<>());
}

std::vector<Real>* detail::Node::grad_buffer() {
  if (!requires_grad) return nullptr;
  if (grad.size() != value.size()) grad.assign(value.size(), Real{0});
  return &grad;
}

Tensor::Tensor(Shape shape, bool requires_grad)
    : Tensor(shape, std::vector<Real>(shape_size(shape), Real{0}),
             requires_grad) {}

Tensor::Tensor(Shape shape, std::vector<Real> values, bool requires_grad) {
  check_shape(shape);
  if (shape_size(shape) != values.size()) {
    throw DimensionError("shape " + shape_to_string(shape) + " needs " +
                         std::to_string(shape_size(shape)) + " values, got " +
                         std::to_string(values.size()));
  }
  check_finite(values, "tensor construction");
  node_ = std::make_shared<detail::Node>();
  node_->shape = std::move(shape);
  node_->value = std::move(values);
  node_->requires_grad = requires_grad;
}

Tensor Tensor::scalar(Real value, bool requires_grad) {
  return Tensor({1}, {value}, requires_grad);
}

Tensor Tensor::eye(std::size_t n) {
  std::vector<Real> v(n * n, Real{0});
  for (std::size_t i = 0; i < n; ++i) v[i * n + i] = Real{1};
  return Tensor({n, n}, std::move(v));
}

Tensor Tensor::matrix(std::size_t rows, std::size_t cols,
                      std::vector<Real> values, bool requires_grad) {
  return Tensor({rows, cols}, std::move(values), requires_grad);
}

Tensor Tensor::full(Shape shape, Real value) {
  const std::size_t n = shape_size(shape);
  return Tensor(std::move(shape), std::vector<Real>(n, value));
}

Tensor Tensor::from_node(std::shared_ptr<detail::Node> node) {
  Tensor t;
  t.node_ = std::move(node);
  return t;
}

const Shape& Tensor::shape() const {
  if (!node_) throw ContractError("use of an undefined tensor");
  return node_->shape;
}

std::size_t Tensor::size() const { return shape_size(shape()); }

std::size_t Tensor::cols() const { return shape().back(); }

std::size_t Tensor::rows() const { return size() / cols(); }

std::span<const Real> Tensor::data() const {
  shape();
  return node_->value;
}

std::span<Real> Tensor::mutable_data() {
  shape();
  if (node_->backward) {
    throw ContractError("in-place write to non-leaf tensor produced by " +
                        node_->op);
  }
  return node_->value;
}

Real Tensor::item() const {
  if (size() != 1) {
    throw ContractError("item() on tensor of shape " +
                        shape_to_string(shape()));
  }
  return node_->value[0];
}

Real Tensor::at(std::size_t row, std::size_t col) const {
  if (row >= rows() || col >= cols()) {
    throw IndexError("index (" + std::to_string(row) + "," +
                     std::to_string(col) + ") outside " +
                     shape_to_string(shape()));
  }
  return node_->value[row * cols() + col];
}

bool Tensor::requires_grad() const { return node_ && node_->requires_grad; }

void Tensor::set_requires_grad(bool on) {
  if (!is_leaf()) {
    throw ContractError("set_requires_grad on non-leaf tensor");
  }
  node_->requires_grad = on;
  if (!on) node_->grad.clear();
}

bool Tensor::is_leaf() const {
  shape();
  return !node_->backward;
}

const std::string& Tensor::op() const {
  shape();
  return node_->op;
}

bool Tensor::has_grad() const {
  return node_ && node_->grad.size() == node_->value.size() &&
         !node_->value.empty();
}

std::span<const Real> Tensor::grad() const {
  if (!has_grad()) return {};
  return node_->grad;
}

std::span<Real> Tensor::mutable_grad() {
  if (!node_ || !node_->requires_grad) {
    throw ContractError("gradient requested for untracked tensor");
  }
  return *node_->grad_buffer();
}

void Tensor::zero_grad() {
  if (node_ && node_->requires_grad) {
    node_->grad.assign(node_->value.size(), Real{0});
  }
}

void Tensor::backward() const {
  if (size() != 1) {
    throw ContractError("backward() needs a scalar loss, got shape " +
                        shape_to_string(shape()));
  }
  if (!node_->requires_grad) {
    throw ContractError("backward() on a tensor that does not require grad");
  }

  // Post-order DFS gives a topological order (inputs before outputs).
  std::vector<detail::Node*> order;
  std::unordered_set<detail::Node*> visited;
  std::vector<std::pair<detail::Node*, std::size_t>> stack;
  stack.emplace_back(node_.get(), 0);
  visited.insert(node_.get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->inputs.size()) {
      detail::Node* child = node->inputs[next++].get();
      if (child->requires_grad && visited.insert(child).second) {
        stack.emplace_back(child, 0);
      }
      continue;
    }
    order.push_back(node);
    stack.pop_back();
  }

  for (detail::Node* n : order) {
    if (n->backward) n->grad.assign(n->value.size(), Real{0});
  }
  node_->grad_buffer()->at(0) += Real{1};

  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    detail::Node* n = *it;
    if (!n->backward) continue;
    n->backward(*n);
    for (const auto& in : n->inputs) {
      if (in->requires_grad && !in->grad.empty()) {
        check_finite(in->grad, "gradient flowing out of " + n->op);
      }
    }
  }
  for (detail::Node* n : order) {
    if (n->backward && n != node_.get()) n->grad.clear();
  }
}

Tensor Tensor::detach() const { return Tensor(shape(), node_->value, false); }

Tensor Tensor::clone(bool requires_grad) const {
  return Tensor(shape(), node_->value, requires_grad);
}

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) {
  g_grad_enabled = false;
}

NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }

bool grad_enabled() { return g_grad_enabled; }

Tensor make_op_result(const char* op, Shape shape, std::vector<Real> values,
                      std::vector<Tensor> inputs,
                      std::function<void(detail::Node&)> backward) {
  check_finite(values, std::string("output of ") + op);
  auto node = std::make_shared<detail::Node>();
  node->shape = std::move(shape);
  node->value = std::move(values);
  node->op = op;
  bool tracked = false;
  if (g_grad_enabled) {
    for (const auto& t : inputs) tracked = tracked || t.requires_grad();
  }
  if (tracked) {
    node->requires_grad = true;
    node->inputs.reserve(inputs.size());
    for (const auto& t : inputs) node->inputs.push_back(t.node());
    node->backward = std::move(backward);
  }
  return Tensor::from_node(std::move(node));
}

}  // namespace cams
