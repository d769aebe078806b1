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

#include <map>
#include <optional>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

namespace unlearn {

struct JudgeConfig {
  bool enabled = false;
  std::string endpoint = "http://127.0.0.1:8089/v1/judge";
  std::string model = "judge";
  int max_parallel = 4;
  int retries = 3;
  double timeout_seconds = 10.0;
  double backoff_seconds = 0.05;  // doubled after every failed attempt

  void validate() const;
  /// UNLEARN_JUDGE_ENDPOINT, when set, replaces `endpoint`.
  JudgeConfig with_environment() const;
  bool operator==(const JudgeConfig&) const = default;
};

void to_json(nlohmann::json& j, const JudgeConfig& c);
void from_json(const nlohmann::json& j, JudgeConfig& c);

struct JudgeScore {
  double value = 0.0;
  bool fallback = false;
};

/// Both modes of the model-graded path. Implementations must be safe to
/// call from several threads at once.
class Judge {
 public:
  virtual ~Judge() = default;
  /// 1 if `answer` agrees with `reference`, else 0.
  virtual JudgeScore answer_correctness(const std::string& question, const std::string& reference,
                                        const std::string& answer,
                                        const std::map<std::string, std::string>& fact_slots) = 0;
  /// How much of `gold_answer` survives in `generated_cot`, in [0, 1].
  virtual JudgeScore cot_leakage(const std::string& question, const std::string& gold_answer,
                                 const std::string& generated_cot,
                                 const std::map<std::string, std::string>& fact_slots) = 0;
  virtual bool offline() const { return false; }
};

/// Deterministic oracles only: fact containment for answers and gold fact
/// token coverage for reasoning. Every score is flagged as fallback.
class OfflineJudge : public Judge {
 public:
  JudgeScore answer_correctness(const std::string&, const std::string&, const std::string& answer,
                                const std::map<std::string, std::string>& fact_slots) override;
  JudgeScore cot_leakage(const std::string&, const std::string&, const std::string& generated_cot,
                         const std::map<std::string, std::string>& fact_slots) override;
  bool offline() const override { return true; }
};

/// POSTs {model, prompt} to an HTTP endpoint. Malformed replies and
/// transport errors are retried with exponential backoff, then scored by
/// the offline oracle with the fallback flag set.
class HttpJudge : public Judge {
 public:
  explicit HttpJudge(JudgeConfig config);
  JudgeScore answer_correctness(const std::string& question, const std::string& reference,
                                const std::string& answer,
                                const std::map<std::string, std::string>& fact_slots) override;
  JudgeScore cot_leakage(const std::string& question, const std::string& gold_answer,
                         const std::string& generated_cot,
                         const std::map<std::string, std::string>& fact_slots) override;

 private:
  std::optional<std::string> post(const std::string& prompt) const;
  JudgeConfig config_;
  std::string origin_;  // scheme://host:port
  std::string path_;
};

/// Finds the answer-mode object ({label, score, reason}) in a completion.
std::optional<double> parse_answer_judgement(std::string_view completion);
/// A bare decimal in [0, 1], surrounding whitespace allowed.
std::optional<double> parse_leakage_judgement(std::string_view completion);
/// Completion text from a response body: a JSON object's "response",
/// "completion", "text", "output" or "content" string, else the raw body.
std::string completion_text(std::string_view body);

}  // namespace unlearn
