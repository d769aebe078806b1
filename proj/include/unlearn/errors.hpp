// Copyright 2026 The Unlearn Lab Authors
// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace unlearn {

/// Invalid configuration or construction parameters.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A caller violated an operation's precondition (frozen policy updated,
/// empty batch, mismatched shapes...).
class ContractError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

class TokenizationError : public std::runtime_error {
 public:
  TokenizationError(const std::string& unit, std::size_t offset)
      : std::runtime_error("unknown token '" + unit + "' at offset " +
                           std::to_string(offset)),
        unit_(unit),
        offset_(offset) {}

  const std::string& unit() const noexcept { return unit_; }
  /// Byte offset of the offending unit in the input text.
  std::size_t offset() const noexcept { return offset_; }

 private:
  std::string unit_;
  std::size_t offset_;
};

/// Checkpoint or artifact files that cannot be read back.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Counterfactual or refusal construction failed for a record.
class GenerationError : public std::runtime_error {
 public:
  GenerationError(const std::string& record_id, const std::string& what)
      : std::runtime_error(record_id + ": " + what), record_id_(record_id) {}

  const std::string& record_id() const noexcept { return record_id_; }

 private:
  std::string record_id_;
};

/// Raised when a training stage ends without meeting its exit gate.
class TrainingFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace unlearn
