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

#include "cams/tensor.hpp"

namespace cams {

struct Parameter {
  std::string name;
  Tensor tensor;
  bool frozen = false;
};

// Ordered registry of named parameters. Handles share storage with the layers
// that created them.
class ParameterStore {
 public:
  Tensor add(std::string name, Tensor value, bool frozen = false);

  const std::vector<Parameter>& all() const { return params_; }
  std::vector<Parameter>& all() { return params_; }
  const Parameter& get(const std::string& name) const;
  Parameter& get(const std::string& name);
  bool contains(const std::string& name) const;

  void set_frozen(const std::string& prefix, bool frozen);
  std::vector<Parameter*> trainable();
  std::size_t trainable_count(const std::string& prefix = "") const;
  std::size_t trainable_elements(const std::string& prefix = "") const;
  void zero_grad();

  // FNV-1a over the raw bytes of every frozen parameter.
  std::uint64_t frozen_checksum() const;

 private:
  std::vector<Parameter> params_;
};

struct StepDecay {
  std::size_t period = 10;  // epochs between decays
  double factor = 0.5;

  double lr_at(double base_lr, std::size_t epoch) const;
};

struct AdamOptions {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 1e-5;  // decoupled
};

// Adam with bias correction and decoupled weight decay. Gradients are zeroed
// after every step.
class Adam {
 public:
  Adam(std::vector<Parameter*> params, AdamOptions options);

  void step();
  void set_lr(double lr) { options_.lr = lr; }
  double lr() const { return options_.lr; }
  std::uint64_t step_count() const { return steps_; }
  const std::vector<Real>& first_moment(std::size_t i) const { return m_[i]; }
  const std::vector<Real>& second_moment(std::size_t i) const { return v_[i]; }
  const std::vector<Parameter*>& params() const { return params_; }

 private:
  std::vector<Parameter*> params_;
  AdamOptions options_;
  std::vector<std::vector<Real>> m_;
  std::vector<std::vector<Real>> v_;
  std::uint64_t steps_ = 0;
};

}  // namespace cams
