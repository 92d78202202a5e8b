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

#include <stdexcept>
#include <string>

namespace cams {

// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Tensor shapes that do not agree for an operation.
class DimensionError : public Error {
 public:
  using Error::Error;
};

// Label, row, attribute or object index outside its valid range.
class IndexError : public Error {
 public:
  using Error::Error;
};

// Caller broke an operation precondition (non-scalar loss, missing grad...).
class ContractError : public Error {
 public:
  using Error::Error;
};

// Invalid configuration value.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// A NaN or Inf reached a tensor.
class NumericError : public Error {
 public:
  using Error::Error;
};

// Evaluation table unusable for the calibrated seen/unseen protocol.
class ProtocolError : public Error {
 public:
  using Error::Error;
};

// Seen and unseen composition sets overlap.
class SplitError : public Error {
 public:
  using Error::Error;
};

// Synthetic dataset cannot satisfy its constraints.
class GenerationError : public Error {
 public:
  using Error::Error;
};

// Malformed checkpoint or config file.
class ParseError : public Error {
 public:
  using Error::Error;
};

// Checkpoint written for a different configuration.
class VersionError : public Error {
 public:
  using Error::Error;
};

}  // namespace cams
