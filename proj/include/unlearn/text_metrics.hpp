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

// Lexical metrics over whitespace tokens. All scores land in [0, 1].

#pragma once

#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace unlearn {

/// Lower-cased whitespace units; the token stream every metric reads.
std::vector<std::string> metric_tokens(std::string_view text);

/// Lower-cased unit with leading and trailing punctuation removed; used for
/// fact-token membership so "Plaque." still matches "plaque".
std::string fact_token(std::string_view unit);

/// Fact tokens of every gold slot value, keyed by slot.
std::map<std::string, std::vector<std::string>> fact_tokens(
    const std::map<std::string, std::string>& fact_slots);

/// Paragraphs (blank-line separated) split further after '.', '!' or '?'
/// followed by whitespace. A unit made only of letter-period pairs (J.K.,
/// U.S.) is an abbreviation and never ends a step.
std::vector<std::string> segment_steps(std::string_view cot_text);

std::size_t lcs_length(std::span<const std::string> a, std::span<const std::string> b);

/// LCS(generated, reference) / |reference|; an empty reference scores 0.
double rouge_l_recall(std::string_view generated, std::string_view reference);

/// Unigram Shannon entropy divided by ln(token count); 0 for length <= 1.
double token_entropy(std::string_view generated);

/// max(0, cos) of token-count vectors; 0 when either side is empty.
double cosine_similarity(std::string_view a, std::string_view b);

/// 1 iff every gold value occurs as a contiguous run of fact tokens in the
/// answer.
int entailment_proxy(std::string_view answer, const std::map<std::string, std::string>& fact_slots);

/// Fraction of distinct gold fact tokens present anywhere in `text`.
double fact_token_leakage(std::string_view text, const std::map<std::string, std::string>& fact_slots);

enum class StepMetric { kRouge, kCosine };

/// Mean over gold steps of the best score against any generated step.
double stepwise_best_match(std::span<const std::string> generated_steps,
                           std::span<const std::string> gold_steps, StepMetric metric);

/// n / sum(1 / v); any zero gives zero. Throws ContractError when empty.
double harmonic_mean(std::span<const double> values);

}  // namespace unlearn
