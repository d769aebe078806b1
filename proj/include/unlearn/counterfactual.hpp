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

// Counterfactual targets (answer swap plus a reasoning trace that argues for
// the swapped value) and the refusal targets of the IDK baselines.

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "unlearn/corpus.hpp"
#include "unlearn/model.hpp"

namespace unlearn {

enum class Provenance { kOracle, kModelAssisted };
std::string_view to_string(Provenance p);

struct CounterfactualRecord {
  std::string source_id;
  std::string question;
  std::string cf_answer;
  std::vector<std::string> cf_cot_steps;
  Provenance provenance = Provenance::kOracle;
  /// slot -> substituted value; empty when the text came from a model.
  std::map<std::string, std::string> swapped;
  /// Model-assisted generation failed validation and the oracle stood in.
  bool fallback = false;

  bool operator==(const CounterfactualRecord&) const = default;
};

enum class RefusalVariant { kDirectIdk, kAnswerIdk, kReasonedIdk };
std::string_view to_string(RefusalVariant v);
RefusalVariant refusal_variant_from_string(std::string_view name);

struct RefusalRecord {
  std::string source_id;
  std::string question;
  std::vector<std::string> idk_cot;
  std::string idk_answer;
  RefusalVariant variant = RefusalVariant::kDirectIdk;

  bool operator==(const RefusalRecord&) const = default;
};

inline constexpr std::string_view kRefusalText = "I don't know.";

/// Text source for model-assisted generation.
class CompletionBackend {
 public:
  virtual ~CompletionBackend() = default;
  virtual std::string complete(const std::string& prompt, std::uint64_t seed) = 0;
};

/// Decodes with a policy. Prompt text is encoded permissively and keeps its
/// last tokens when it would not fit the context.
class PolicyBackend final : public CompletionBackend {
 public:
  PolicyBackend(const Policy<float>& policy, const Vocabulary& vocab, int max_new = 48,
                double temperature = 0.0)
      : policy_(policy), vocab_(vocab), max_new_(max_new), temperature_(temperature) {}

  std::string complete(const std::string& prompt, std::uint64_t seed) override;

 private:
  const Policy<float>& policy_;
  const Vocabulary& vocab_;
  int max_new_;
  double temperature_;
};

/// Replays canned completions in order, then repeats the last one. Counts
/// calls and keeps every prompt it was given.
class ScriptedBackend final : public CompletionBackend {
 public:
  explicit ScriptedBackend(std::vector<std::string> replies) : replies_(std::move(replies)) {}

  std::string complete(const std::string& prompt, std::uint64_t seed) override;

  int calls() const noexcept { return calls_; }
  const std::vector<std::string>& prompts() const noexcept { return prompts_; }

 private:
  std::vector<std::string> replies_;
  std::vector<std::string> prompts_;
  int calls_ = 0;
};

struct CounterfactualOptions {
  Provenance mode = Provenance::kOracle;
  ValuePools pools;
  std::uint64_t seed = 0;
  /// Model mode only.
  CompletionBackend* backend = nullptr;
  int retries = 3;
  /// When set, candidates with units outside it are rejected (they could
  /// not be trained on).
  const Vocabulary* vocab = nullptr;
};

struct Validation {
  bool pass = true;
  std::string reason;
  int step = -1;  // offending CoT step (1-based), -1 for the answer or none
  std::string slot;

  explicit operator bool() const noexcept { return pass; }
};

/// Passes iff no gold fact token of `source` appears in the answer or any
/// CoT step (case-insensitive, edge punctuation ignored).
Validation validate_counterfactual(const QARecord& source, const CounterfactualRecord& candidate);

/// Same leakage test for arbitrary (cot, answer) text.
Validation validate_text(const QARecord& source, std::span<const std::string> cot_steps,
                         std::string_view answer);

/// slot -> replacement value drawn from pool \ {gold}, restricted to values
/// that share no token with the gold value and are no longer in tokens.
std::map<std::string, std::string> oracle_swap(const QARecord& record, const ValuePools& pools,
                                               std::uint64_t seed);

/// Answer text with every gold value replaced by its swap.
std::string counterfactual_answer(const QARecord& record,
                                  const std::map<std::string, std::string>& swapped);

/// Trace that deliberates toward the swapped value and states it last.
std::vector<std::string> backward_reasoning_cot(const QARecord& record,
                                                const std::map<std::string, std::string>& swapped,
                                                std::uint64_t seed);

/// Extracts the new answer from a completion of the answer prompt: the
/// last non-empty line, minus a leading label and surrounding quotes.
std::string extract_answer_completion(std::string_view completion);

/// Reasoning steps from a completion of the CoT prompt: the text inside
/// <think>...</think> when present, segmented into steps.
std::vector<std::string> extract_cot_completion(std::string_view completion);

/// Oracle or model-assisted record. In model mode, a candidate failing
/// validation is retried `retries` times and then replaced by the oracle.
CounterfactualRecord make_counterfactual(const QARecord& record, const CounterfactualOptions& options);

/// One record per forget record; throws GenerationError naming the offending
/// id when a record cannot be built.
std::vector<CounterfactualRecord> build_counterfactual_set(std::span<const QARecord> forget,
                                                           const CounterfactualOptions& options);

std::vector<RefusalRecord> build_refusal_set(std::span<const QARecord> forget, RefusalVariant variant);

/// Units used by the counterfactual and refusal templates.
std::vector<std::string> counterfactual_lexicon();

/// Deterministic content hash of a D_c (order-sensitive).
std::uint64_t hash_counterfactual_set(std::span<const CounterfactualRecord> set);

nlohmann::json to_json(const CounterfactualRecord& r);
CounterfactualRecord counterfactual_from_json(const nlohmann::json& j);
nlohmann::json to_json(const RefusalRecord& r);
RefusalRecord refusal_from_json(const nlohmann::json& j);

void write_counterfactuals_jsonl(const std::filesystem::path& path,
                                 std::span<const CounterfactualRecord> records);
std::vector<CounterfactualRecord> read_counterfactuals_jsonl(const std::filesystem::path& path);
void write_refusals_jsonl(const std::filesystem::path& path, std::span<const RefusalRecord> records);
std::vector<RefusalRecord> read_refusals_jsonl(const std::filesystem::path& path);

}  // namespace unlearn
