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

#include "unlearn/model_config.hpp"

#include <map>
#include <sstream>

#include "unlearn/errors.hpp"

namespace unlearn {

void ModelConfig::validate() const {
  if (n_layers < 1) throw ConfigError("n_layers must be positive");
  if (n_heads < 1 || d_model < 1 || d_ff < 1) throw ConfigError("dimensions must be positive");
  if (d_model % n_heads != 0) throw ConfigError("d_model must be divisible by n_heads");
  if (vocab_size < 1) throw ConfigError("vocab_size must be positive");
  if (max_seq_len < 2) throw ConfigError("max_seq_len must be at least 2");
  if (rmu_layer < -1 || rmu_layer >= n_layers) {
    throw ConfigError("rmu_layer must be in [0, n_layers)");
  }
}

ModelConfig ModelConfig::resolved() const {
  ModelConfig c = *this;
  if (c.rmu_layer < 0) c.rmu_layer = (c.n_layers - 1) / 2;
  return c;
}

std::string ModelConfig::to_text() const {
  std::ostringstream out;
  out << "n_layers=" << n_layers << '\n'
      << "n_heads=" << n_heads << '\n'
      << "d_model=" << d_model << '\n'
      << "d_ff=" << d_ff << '\n'
      << "vocab_size=" << vocab_size << '\n'
      << "max_seq_len=" << max_seq_len << '\n'
      << "rmu_layer=" << rmu_layer << '\n';
  return out.str();
}

ModelConfig ModelConfig::from_text(std::string_view text) {
  std::map<std::string, int> kv;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw FormatError("bad config line '" + line + "'");
    try {
      kv[line.substr(0, eq)] = std::stoi(line.substr(eq + 1));
    } catch (const std::exception&) {
      throw FormatError("bad config value in '" + line + "'");
    }
  }
  auto get = [&](const char* key) {
    const auto it = kv.find(key);
    if (it == kv.end()) throw FormatError(std::string("config header missing ") + key);
    return it->second;
  };
  ModelConfig c;
  c.n_layers = get("n_layers");
  c.n_heads = get("n_heads");
  c.d_model = get("d_model");
  c.d_ff = get("d_ff");
  c.vocab_size = get("vocab_size");
  c.max_seq_len = get("max_seq_len");
  c.rmu_layer = get("rmu_layer");
  return c;
}

void to_json(nlohmann::json& j, const ModelConfig& c) {
  j = nlohmann::json{{"n_layers", c.n_layers},     {"n_heads", c.n_heads},
                     {"d_model", c.d_model},       {"d_ff", c.d_ff},
                     {"vocab_size", c.vocab_size}, {"max_seq_len", c.max_seq_len},
                     {"rmu_layer", c.rmu_layer}};
}

void from_json(const nlohmann::json& j, ModelConfig& c) {
  c = ModelConfig{};
  for (const auto& [key, value] : j.items()) {
    if (key == "n_layers") c.n_layers = value.get<int>();
    else if (key == "n_heads") c.n_heads = value.get<int>();
    else if (key == "d_model") c.d_model = value.get<int>();
    else if (key == "d_ff") c.d_ff = value.get<int>();
    else if (key == "vocab_size") c.vocab_size = value.get<int>();
    else if (key == "max_seq_len") c.max_seq_len = value.get<int>();
    else if (key == "rmu_layer") c.rmu_layer = value.get<int>();
    else throw ConfigError("unknown model config key '" + key + "'");
  }
}

}  // namespace unlearn
