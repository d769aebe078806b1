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

#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

namespace unlearn {

struct ModelConfig {
  int n_layers = 2;
  int n_heads = 2;
  int d_model = 64;
  int d_ff = 128;
  int vocab_size = 0;
  int max_seq_len = 128;
  /// Layer whose output feeds the representation losses; -1 picks the
  /// middle layer.
  int rmu_layer = -1;

  /// Throws ConfigError on inconsistent dimensions.
  void validate() const;
  /// Resolves rmu_layer = -1 to (n_layers - 1) / 2.
  ModelConfig resolved() const;

  /// "key=value" lines, the checkpoint header form.
  std::string to_text() const;
  static ModelConfig from_text(std::string_view text);

  bool operator==(const ModelConfig&) const = default;
};

void to_json(nlohmann::json& j, const ModelConfig& c);
void from_json(const nlohmann::json& j, ModelConfig& c);

}  // namespace unlearn
