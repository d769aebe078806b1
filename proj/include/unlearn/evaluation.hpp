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
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "unlearn/corpus.hpp"
#include "unlearn/judge.hpp"
#include "unlearn/model.hpp"

namespace unlearn {

struct GenerationRecord {
  std::string id;
  std::string question;
  std::vector<std::string> gold_cot_steps;
  std::string gold_answer;
  std::map<std::string, std::string> fact_slots;
  std::string generated_cot;  // steps separated by blank lines
  std::string generated_answer;
  std::string pre_answer;  // the target model's answer to the same question
  Split split = Split::kRetain;
  bool operator==(const GenerationRecord&) const = default;
};

using GenerationDump = std::vector<GenerationRecord>;

/// Greedy generation for every record. `pre` supplies pre-unlearning
/// answers by id; without it a record's own answer is used, which is the
/// target model's case.
GenerationDump generate_dump(const Policy<float>& policy, std::span<const QARecord> records,
                             const Vocabulary& vocab, int max_new,
                             const GenerationDump* pre = nullptr);

nlohmann::json to_json(const GenerationRecord& r);
GenerationRecord generation_from_json(const nlohmann::json& j);
void write_dump_jsonl(const std::filesystem::path& path, const GenerationDump& dump);
GenerationDump read_dump_jsonl(const std::filesystem::path& path);

/// Scores of one record. Step and judge columns are only filled for the
/// forget split.
struct RecordScores {
  std::string id;
  Split split = Split::kRetain;
  double R = 0, CS = 0, TE = 0, ES = 0;
  double stepR = 0, stepCS = 0, leakage = 0;
  bool es_fallback = true;
  bool leakage_fallback = true;
  bool operator==(const RecordScores&) const = default;
};

struct SplitMeans {
  int count = 0;
  double R = 0, CS = 0, TE = 0, ES = 0, stepR = 0, stepCS = 0, judge = 0;
  bool operator==(const SplitMeans&) const = default;
};

struct ProbeResult {
  double accuracy = 0.0;
  double perplexity = 0.0;
  bool operator==(const ProbeResult&) const = default;
};

struct MetricReport {
  std::optional<double> MU, AFE, CFE;
  std::map<std::string, SplitMeans> splits;  // keyed by split name
  std::vector<RecordScores> records;
  std::vector<std::string> gaps;
  int judge_fallbacks = 0;
  std::optional<ProbeResult> probe;
  bool operator==(const MetricReport&) const = default;
};

/// Splits whose answers enter MU.
inline constexpr Split kUtilitySplits[] = {Split::kRetain, Split::kRealAuthors, Split::kWorldFacts};

RecordScores score_record(const GenerationRecord& g, Judge& judge);

/// Aggregates from a per-record table alone. MU is the harmonic mean of
/// the {R, CS, TE, ES} split means over the utility splits.
MetricReport summarize(std::vector<RecordScores> records);

/// Scores every record then summarizes. Judge calls run on up to
/// max_parallel threads; results are placed by index.
MetricReport aggregate(const GenerationDump& dump, Judge& judge, int max_parallel = 1);

/// Greedy exact-answer accuracy on the probe questions; perplexity from the
/// per-token NLL of their full gold trajectories.
ProbeResult general_ability_probe(const Policy<float>& policy, std::span<const QARecord> probe,
                                  const Vocabulary& vocab, int max_new = 64);

nlohmann::json to_json(const MetricReport& report);
MetricReport report_from_json(const nlohmann::json& j);

}  // namespace unlearn
