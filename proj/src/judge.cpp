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

#include "unlearn/judge.hpp"

#include <httplib.h>
#include <spdlog/spdlog.h>

#include <chrono>
#include <functional>
#include <cstdlib>
#include <regex>
#include <thread>

#include "unlearn/errors.hpp"
#include "unlearn/prompts.hpp"
#include "unlearn/text_metrics.hpp"

namespace unlearn {

void JudgeConfig::validate() const {
  if (max_parallel < 1) throw ConfigError("judge max_parallel must be positive");
  if (retries < 0) throw ConfigError("judge retries must be nonnegative");
  if (!(timeout_seconds > 0.0)) throw ConfigError("judge timeout must be positive");
  if (!(backoff_seconds >= 0.0)) throw ConfigError("judge backoff must be nonnegative");
  if (enabled && endpoint.rfind("http://", 0) != 0) {
    throw ConfigError("judge endpoint must be an http:// URL");
  }
}

JudgeConfig JudgeConfig::with_environment() const {
  JudgeConfig c = *this;
  if (const char* env = std::getenv("UNLEARN_JUDGE_ENDPOINT"); env != nullptr && *env != '\0') {
    c.endpoint = env;
  }
  return c;
}

void to_json(nlohmann::json& j, const JudgeConfig& c) {
  j = nlohmann::json{{"enabled", c.enabled},
                     {"endpoint", c.endpoint},
                     {"model", c.model},
                     {"max_parallel", c.max_parallel},
                     {"retries", c.retries},
                     {"timeout_seconds", c.timeout_seconds},
                     {"backoff_seconds", c.backoff_seconds}};
}

void from_json(const nlohmann::json& j, JudgeConfig& c) {
  c = JudgeConfig{};
  for (const auto& [key, value] : j.items()) {
    if (key == "enabled") c.enabled = value.get<bool>();
    else if (key == "endpoint") c.endpoint = value.get<std::string>();
    else if (key == "model") c.model = value.get<std::string>();
    else if (key == "max_parallel") c.max_parallel = value.get<int>();
    else if (key == "retries") c.retries = value.get<int>();
    else if (key == "timeout_seconds") c.timeout_seconds = value.get<double>();
    else if (key == "backoff_seconds") c.backoff_seconds = value.get<double>();
    else throw ConfigError("unknown judge key '" + key + "'");
  }
}

JudgeScore OfflineJudge::answer_correctness(const std::string&, const std::string&,
                                            const std::string& answer,
                                            const std::map<std::string, std::string>& fact_slots) {
  return {static_cast<double>(entailment_proxy(answer, fact_slots)), true};
}

JudgeScore OfflineJudge::cot_leakage(const std::string&, const std::string&,
                                     const std::string& generated_cot,
                                     const std::map<std::string, std::string>& fact_slots) {
  return {fact_token_leakage(generated_cot, fact_slots), true};
}

std::string completion_text(std::string_view body) {
  const auto j = nlohmann::json::parse(body, nullptr, false);
  if (j.is_object()) {
    for (const char* key : {"response", "completion", "text", "output", "content"}) {
      if (const auto it = j.find(key); it != j.end() && it->is_string()) return it->get<std::string>();
    }
  }
  return std::string(body);
}

std::optional<double> parse_answer_judgement(std::string_view completion) {
  for (std::size_t open = completion.find('{'); open != std::string_view::npos;
       open = completion.find('{', open + 1)) {
    int depth = 0;
    for (std::size_t i = open; i < completion.size(); ++i) {
      if (completion[i] == '{') ++depth;
      if (completion[i] == '}' && --depth == 0) {
        const auto j = nlohmann::json::parse(completion.substr(open, i - open + 1), nullptr, false);
        if (j.is_object() && j.contains("score") && j["score"].is_number()) {
          const double s = j["score"].get<double>();
          if (s == 0.0 || s == 1.0) return s;
        }
        break;
      }
    }
  }
  return std::nullopt;
}

std::optional<double> parse_leakage_judgement(std::string_view completion) {
  static const std::regex number(R"(^\s*([01](\.[0-9]+)?|\.[0-9]+)\s*$)");
  std::match_results<std::string_view::const_iterator> m;
  if (!std::regex_match(completion.begin(), completion.end(), m, number)) return std::nullopt;
  const double v = std::stod(m[1].str());
  if (v < 0.0 || v > 1.0) return std::nullopt;
  return v;
}

HttpJudge::HttpJudge(JudgeConfig config) : config_(std::move(config)) {
  config_.validate();
  const std::string& url = config_.endpoint;
  if (url.rfind("http://", 0) != 0) throw ConfigError("judge endpoint must be an http:// URL");
  const auto slash = url.find('/', 7);
  origin_ = slash == std::string::npos ? url : url.substr(0, slash);
  path_ = slash == std::string::npos ? "/" : url.substr(slash);
}

std::optional<std::string> HttpJudge::post(const std::string& prompt) const {
  httplib::Client client(origin_);
  const auto secs = static_cast<time_t>(config_.timeout_seconds);
  const auto usecs = static_cast<time_t>((config_.timeout_seconds - secs) * 1e6);
  client.set_connection_timeout(secs, usecs);
  client.set_read_timeout(secs, usecs);
  client.set_write_timeout(secs, usecs);
  const std::string body = nlohmann::json{{"model", config_.model}, {"prompt", prompt}}.dump();
  auto res = client.Post(path_, body, "application/json");
  if (!res) {
    spdlog::warn("judge request failed: {}", httplib::to_string(res.error()));
    return std::nullopt;
  }
  if (res->status != 200) {
    spdlog::warn("judge returned HTTP {}", res->status);
    return std::nullopt;
  }
  return completion_text(res->body);
}

namespace {

template <typename Parse>
std::optional<double> ask(const JudgeConfig& config, const std::string& prompt, Parse&& parse,
                          const std::function<std::optional<std::string>(const std::string&)>& post) {
  double delay = config.backoff_seconds;
  for (int attempt = 0; attempt <= config.retries; ++attempt) {
    if (attempt > 0) {
      std::this_thread::sleep_for(std::chrono::duration<double>(delay));
      delay *= 2.0;
    }
    if (const auto text = post(prompt)) {
      if (const auto v = parse(*text)) return v;
      spdlog::warn("judge reply malformed (attempt {}): {:.80}", attempt + 1, *text);
    }
  }
  return std::nullopt;
}

}  // namespace

JudgeScore HttpJudge::answer_correctness(const std::string& question, const std::string& reference,
                                         const std::string& answer,
                                         const std::map<std::string, std::string>& fact_slots) {
  const auto prompt = prompts::fill(prompts::judge_answer,
                                    {{"question", question}, {"reference", reference}, {"answer", answer}});
  if (const auto v = ask(config_, prompt, parse_answer_judgement,
                         [this](const std::string& p) { return post(p); })) {
    return {*v, false};
  }
  return OfflineJudge{}.answer_correctness(question, reference, answer, fact_slots);
}

JudgeScore HttpJudge::cot_leakage(const std::string& question, const std::string& gold_answer,
                                  const std::string& generated_cot,
                                  const std::map<std::string, std::string>& fact_slots) {
  const auto prompt = prompts::fill(
      prompts::judge_leakage, {{"answer", gold_answer}, {"question", question}, {"generated_cot", generated_cot}});
  if (const auto v = ask(config_, prompt, parse_leakage_judgement,
                         [this](const std::string& p) { return post(p); })) {
    return {*v, false};
  }
  return OfflineJudge{}.cot_leakage(question, gold_answer, generated_cot, fact_slots);
}

}  // namespace unlearn
