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

#include "cams/optim.hpp"

#include <cmath>
#include <cstring>

#include "cams/errors.hpp"

namespace cams {

Tensor ParameterStore::add(std::string name, Tensor value, bool frozen) {
  if (contains(name)) throw ContractError("duplicate parameter name " + name);
  value.set_requires_grad(!frozen);
  params_.push_back({std::move(name), value, frozen});
  return value;
}

const Parameter& ParameterStore::get(const std::string& name) const {
  for (const auto& p : params_) {
    if (p.name == name) return p;
  }
  throw IndexError("unknown parameter " + name);
}

Parameter& ParameterStore::get(const std::string& name) {
  return const_cast<Parameter&>(std::as_const(*this).get(name));
}

bool ParameterStore::contains(const std::string& name) const {
  for (const auto& p : params_) {
    if (p.name == name) return true;
  }
  return false;
}

void ParameterStore::set_frozen(const std::string& prefix, bool frozen) {
  for (auto& p : params_) {
    if (p.name.rfind(prefix, 0) == 0) {
      p.frozen = frozen;
      p.tensor.set_requires_grad(!frozen);
    }
  }
}

std::vector<Parameter*> ParameterStore::trainable() {
  std::vector<Parameter*> out;
  for (auto& p : params_) {
    if (!p.frozen) out.push_back(&p);
  }
  return out;
}

std::size_t ParameterStore::trainable_count(const std::string& prefix) const {
  std::size_t n = 0;
  for (const auto& p : params_) {
    if (!p.frozen && p.name.rfind(prefix, 0) == 0) ++n;
  }
  return n;
}

std::size_t ParameterStore::trainable_elements(const std::string& prefix) const {
  std::size_t n = 0;
  for (const auto& p : params_) {
    if (!p.frozen && p.name.rfind(prefix, 0) == 0) n += p.tensor.size();
  }
  return n;
}

void ParameterStore::zero_grad() {
  for (auto& p : params_) p.tensor.zero_grad();
}

std::uint64_t ParameterStore::frozen_checksum() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const auto& p : params_) {
    if (!p.frozen) continue;
    for (char c : p.name) {
      h ^= static_cast<unsigned char>(c);
      h *= 0x100000001b3ULL;
    }
    for (Real v : p.tensor.data()) {
      unsigned char bytes[sizeof(Real)];
      std::memcpy(bytes, &v, sizeof(Real));
      for (unsigned char b : bytes) {
        h ^= b;
        h *= 0x100000001b3ULL;
      }
    }
  }
  return h;
}

double StepDecay::lr_at(double base_lr, std::size_t epoch) const {
  if (period == 0) return base_lr;
  return base_lr * std::pow(factor, static_cast<double>(epoch / period));
}

Adam::Adam(std::vector<Parameter*> params, AdamOptions options)
    : params_(std::move(params)), options_(options) {
  for (const Parameter* p : params_) {
    if (p->frozen) {
      throw ContractError("frozen parameter " + p->name +
                          " handed to the optimizer");
    }
    m_.emplace_back(p->tensor.size(), Real{0});
    v_.emplace_back(p->tensor.size(), Real{0});
  }
}

void Adam::step() {
  for (const Parameter* p : params_) {
    if (!p->tensor.has_grad()) {
      throw ContractError("parameter " + p->name + " has no gradient");
    }
  }
  ++steps_;
  const double t = static_cast<double>(steps_);
  const double bc1 = 1.0 - std::pow(options_.beta1, t);
  const double bc2 = 1.0 - std::pow(options_.beta2, t);
  for (std::size_t k = 0; k < params_.size(); ++k) {
    Parameter& p = *params_[k];
    auto w = p.tensor.mutable_data();
    auto g = p.tensor.grad();
    auto& m = m_[k];
    auto& v = v_[k];
    for (std::size_t i = 0; i < w.size(); ++i) {
      m[i] = static_cast<Real>(options_.beta1 * m[i] + (1.0 - options_.beta1) * g[i]);
      v[i] = static_cast<Real>(options_.beta2 * v[i] +
                               (1.0 - options_.beta2) * g[i] * g[i]);
      const double m_hat = m[i] / bc1;
      const double v_hat = v[i] / bc2;
      const double update = m_hat / (std::sqrt(v_hat) + options_.eps) +
                            options_.weight_decay * w[i];
      w[i] = static_cast<Real>(w[i] - options_.lr * update);
    }
    p.tensor.zero_grad();
  }
}

}  // namespace cams
