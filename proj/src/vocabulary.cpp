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

#include "unlearn/vocabulary.hpp"

#include <algorithm>
#include <array>
#include <fstream>

#include "unlearn/errors.hpp"

namespace unlearn {

namespace {

constexpr std::array<std::string_view, special::kCount> kSpecialTexts = {
    "<pad>", "<bos>", "<eos>", "<unk>", "<think>", "</think>", "<step>"};

bool is_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' ||
         c == '\v';
}

}  // namespace

std::vector<std::string> split_units(std::string_view text) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && is_space(text[i])) ++i;
    const std::size_t start = i;
    while (i < text.size() && !is_space(text[i])) ++i;
    if (i > start) out.emplace_back(text.substr(start, i - start));
  }
  return out;
}

Vocabulary::Vocabulary(std::vector<std::string> tokens)
    : tokens_(std::move(tokens)) {
  index_.reserve(tokens_.size());
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    const auto [_, inserted] =
        index_.emplace(tokens_[i], static_cast<TokenId>(i));
    if (!inserted) throw ConfigError("duplicate vocabulary token '" + tokens_[i] + "'");
  }
}

Vocabulary Vocabulary::build(std::vector<std::string> units) {
  std::sort(units.begin(), units.end());
  units.erase(std::unique(units.begin(), units.end()), units.end());
  std::vector<std::string> tokens;
  tokens.reserve(units.size() + special::kCount);
  for (auto s : kSpecialTexts) tokens.emplace_back(s);
  for (auto& u : units) {
    if (u.empty() || std::any_of(u.begin(), u.end(), is_space)) {
      throw ConfigError("vocabulary unit contains whitespace: '" + u + "'");
    }
    for (auto s : kSpecialTexts) {
      if (u.find(s) != std::string::npos) {
        throw ConfigError("regular token '" + u + "' contains special '" +
                          std::string(s) + "'");
      }
    }
    tokens.push_back(std::move(u));
  }
  return Vocabulary(std::move(tokens));
}

Vocabulary Vocabulary::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open vocabulary " + path.string());
  std::vector<std::string> tokens;
  std::string line;
  while (std::getline(in, line)) tokens.push_back(line);
  if (tokens.size() < special::kCount) {
    throw FormatError("vocabulary too short: " + path.string());
  }
  for (TokenId i = 0; i < special::kCount; ++i) {
    if (tokens[i] != kSpecialTexts[i]) {
      throw FormatError("vocabulary special token mismatch at line " +
                        std::to_string(i));
    }
  }
  return Vocabulary(std::move(tokens));
}

void Vocabulary::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write vocabulary " + path.string());
  for (const auto& t : tokens_) out << t << '\n';
}

std::string_view Vocabulary::special_text(TokenId id) {
  return kSpecialTexts.at(static_cast<std::size_t>(id));
}

const std::string& Vocabulary::token(TokenId id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= tokens_.size()) {
    throw ContractError("token id out of range: " + std::to_string(id));
  }
  return tokens_[static_cast<std::size_t>(id)];
}

bool Vocabulary::contains(std::string_view unit) const {
  return index_.count(std::string(unit)) > 0;
}

TokenId Vocabulary::id(std::string_view unit) const {
  const auto it = index_.find(std::string(unit));
  if (it == index_.end()) throw TokenizationError(std::string(unit), 0);
  return it->second;
}

TokenIds Vocabulary::encode(std::string_view text, EncodeMode mode) const {
  TokenIds ids;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && is_space(text[i])) ++i;
    const std::size_t start = i;
    while (i < text.size() && !is_space(text[i])) ++i;
    if (i == start) continue;
    const std::string unit(text.substr(start, i - start));
    const auto it = index_.find(unit);
    if (it != index_.end()) {
      ids.push_back(it->second);
    } else if (mode == EncodeMode::kPermissive) {
      ids.push_back(special::kUnk);
    } else {
      throw TokenizationError(unit, start);
    }
  }
  return ids;
}

std::string Vocabulary::decode(std::span<const TokenId> ids) const {
  std::string out;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (i) out += ' ';
    out += token(ids[i]);
  }
  return out;
}

}  // namespace unlearn
