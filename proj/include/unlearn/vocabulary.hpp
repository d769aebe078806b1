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

#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace unlearn {

using TokenId = int;
using TokenIds = std::vector<TokenId>;

// Special tokens occupy the lowest ids, in this order.
namespace special {
inline constexpr TokenId kPad = 0;
inline constexpr TokenId kBos = 1;
inline constexpr TokenId kEos = 2;
inline constexpr TokenId kUnk = 3;
inline constexpr TokenId kThinkOpen = 4;
inline constexpr TokenId kThinkClose = 5;
inline constexpr TokenId kStepSep = 6;
inline constexpr TokenId kCount = 7;
}  // namespace special

enum class EncodeMode {
  kStrict,      // unknown units throw TokenizationError
  kPermissive,  // unknown units map to <unk>; for text from outside the corpus
};

/// Closed word-level vocabulary. Text is split on ASCII whitespace; decode
/// joins units with single spaces, so round trips are exact for
/// single-space-separated text.
class Vocabulary {
 public:
  /// Deduplicates and sorts `units`; specials are prepended.
  static Vocabulary build(std::vector<std::string> units);
  static Vocabulary load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;

  static std::string_view special_text(TokenId id);

  std::size_t size() const noexcept { return tokens_.size(); }
  const std::string& token(TokenId id) const;
  bool contains(std::string_view unit) const;
  TokenId id(std::string_view unit) const;

  TokenIds encode(std::string_view text,
                  EncodeMode mode = EncodeMode::kStrict) const;
  std::string decode(std::span<const TokenId> ids) const;

  const std::vector<std::string>& tokens() const noexcept { return tokens_; }

  bool operator==(const Vocabulary& other) const {
    return tokens_ == other.tokens_;
  }

 private:
  explicit Vocabulary(std::vector<std::string> tokens);

  std::vector<std::string> tokens_;
  std::unordered_map<std::string, TokenId> index_;
};

/// Whitespace split without allocation of a vocabulary; used by metrics.
std::vector<std::string> split_units(std::string_view text);

}  // namespace unlearn
