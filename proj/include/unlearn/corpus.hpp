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

#include <cstdint>
#include <filesystem>
#include <map>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "unlearn/vocabulary.hpp"

namespace unlearn {

enum class Split { kForget, kRetain, kRealAuthors, kWorldFacts, kProbe };

std::string_view to_string(Split split);
Split split_from_string(std::string_view name);

/// slot name -> candidate values. Values within a slot should be token
/// disjoint so that counterfactual swaps leak nothing.
using ValuePools = std::map<std::string, std::vector<std::string>>;

struct QARecord {
  std::string id;
  std::string entity_id;
  std::map<std::string, std::string> fact_slots;
  std::string question;
  std::vector<std::string> cot_steps;
  std::string answer;
  Split split = Split::kRetain;

  bool operator==(const QARecord&) const = default;
};

struct Corpus {
  std::vector<QARecord> records;
  std::set<std::string> forget_ids;
  std::set<std::string> retain_ids;
  ValuePools value_pools;

  std::vector<QARecord> forget_records() const;
  std::vector<QARecord> retain_records() const;
  const QARecord& find(std::string_view id) const;
};

/// Surface text for one slot. Placeholders: {name}, {value}.
struct SlotTemplate {
  std::string question;
  std::string answer;
  std::string phrase;  // "the <phrase> of <name>"
};

SlotTemplate slot_template(std::string_view slot);

/// Recovers the entity name by matching the question against its slot's
/// template. Throws FormatError when the record is not template-built.
std::string entity_name(const QARecord& record);

ValuePools default_value_pools();

/// One record per (entity, slot); the first `slots_per_entity` slots of
/// `pools` in key order are used.
Corpus generate_corpus(std::uint64_t seed, int n_entities, int slots_per_entity,
                       const ValuePools& pools);

/// Entity-granular split: round(ratio * entities) whole entities are
/// forgotten.
Corpus split_forget(const Corpus& corpus, double ratio, std::uint64_t seed);

/// Held-out utility splits. They are part of target training but never of
/// the unlearning retain set.
std::vector<QARecord> generate_real_authors_analog(std::uint64_t seed, int n_entities);
std::vector<QARecord> generate_world_facts_analog(std::uint64_t seed, int n_facts);

struct ProbeSet {
  std::vector<QARecord> train;
  std::vector<QARecord> eval;
};

/// Two-step arithmetic chains ("What is 3 plus 4 minus 2 ?") with CoT.
ProbeSet generate_probe_set(std::uint64_t seed, int n_train, int n_eval);

/// Fixed words used by the gold CoT templates.
std::vector<std::string> corpus_template_lexicon();

/// Gold-style CoT for a record about `name`/`value` (exposed for tests).
std::vector<std::string> templated_cot(std::uint64_t seed, std::string_view name,
                                       std::string_view phrase,
                                       std::string_view value);

Vocabulary build_vocabulary(std::span<const QARecord> records,
                            const ValuePools& pools,
                            std::span<const std::string> extra_units);

// ---------------------------------------------------------------------------
// Rendering

/// BOS question THINK_OPEN step (STEP step)* THINK_CLOSE answer EOS.
struct RenderedExample {
  TokenIds tokens;
  std::size_t prompt_length = 0;  // BOS + question
  std::size_t think_open = 0;     // index of THINK_OPEN
  std::size_t think_close = 0;    // index of THINK_CLOSE

  std::span<const TokenId> prompt() const {
    return std::span<const TokenId>(tokens).first(prompt_length);
  }
  std::span<const TokenId> response() const {
    return std::span<const TokenId>(tokens).subspan(prompt_length);
  }
};

TokenIds render_prompt(std::string_view question, const Vocabulary& vocab,
                       EncodeMode mode = EncodeMode::kStrict);
TokenIds render_response(std::span<const std::string> cot_steps,
                         std::string_view answer, const Vocabulary& vocab);
RenderedExample render_trajectory(std::string_view question,
                                  std::span<const std::string> cot_steps,
                                  std::string_view answer,
                                  const Vocabulary& vocab);
RenderedExample render_example(const QARecord& record, const Vocabulary& vocab);

struct ParsedResponse {
  bool has_think = false;
  std::vector<std::string> cot_steps;
  std::string answer;

  /// Steps joined by blank lines, the form step segmentation expects.
  std::string cot_text() const;
};

/// Splits generated ids by the THINK delimiters. Output without delimiters
/// is treated as answer-only; generation stops at the first EOS.
ParsedResponse parse_response(std::span<const TokenId> ids, const Vocabulary& vocab);

// ---------------------------------------------------------------------------
// Persistence

nlohmann::json to_json(const QARecord& record);
QARecord record_from_json(const nlohmann::json& j);

void write_records_jsonl(const std::filesystem::path& path,
                         std::span<const QARecord> records);
std::vector<QARecord> read_records_jsonl(const std::filesystem::path& path);

}  // namespace unlearn
