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

#include "unlearn/counterfactual.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>

#include <spdlog/spdlog.h>

#include "unlearn/errors.hpp"
#include "unlearn/prompts.hpp"
#include "unlearn/random.hpp"
#include "unlearn/text_metrics.hpp"

namespace unlearn {

namespace {

const std::vector<std::string> kCfOpenings = {
    "Working back from the likely answer , consider {name} .",
    "Start from what fits the {phrase} of {name} ."};
const std::vector<std::string> kCfMiddles = {
    "Thinking of {name} , {value} comes to mind first .",
    "Nothing else fits {name} as well as {value} .",
    "Checking again , {value} matches everything about {name} ."};
const std::string kCfFinal = "Yes , the {phrase} of {name} is {value} .";

const std::vector<std::string> kHedgedSteps = {
    "Okay , the question asks about the {phrase} of {name} .",
    "I can't recall any source confirming this .",
    "Nothing I have read about {name} settles it .",
    "So I cannot say for sure ."};

std::string replace_all(std::string s, std::string_view key, std::string_view value) {
  std::size_t pos = 0;
  while ((pos = s.find(key, pos)) != std::string::npos) {
    s.replace(pos, key.size(), value);
    pos += value.size();
  }
  return s;
}

std::string fill_slots(std::string s, std::string_view name, std::string_view phrase,
                       std::string_view value) {
  s = replace_all(std::move(s), "{name}", name);
  s = replace_all(std::move(s), "{phrase}", phrase);
  return replace_all(std::move(s), "{value}", value);
}

std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

const std::string& single_slot(const QARecord& record) {
  if (record.fact_slots.size() != 1) {
    throw GenerationError(record.id, "expected exactly one fact slot");
  }
  return record.fact_slots.begin()->first;
}

bool in_vocabulary(const Vocabulary& vocab, std::string_view text) {
  for (const auto& u : split_units(text))
    if (!vocab.contains(u)) return false;
  return true;
}

template <typename T>
void write_jsonl(const std::filesystem::path& path, std::span<const T> records) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write " + path.string());
  for (const auto& r : records) out << to_json(r).dump() << '\n';
}

template <typename F>
auto read_jsonl(const std::filesystem::path& path, F&& parse) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open " + path.string());
  std::vector<decltype(parse(nlohmann::json{}))> out;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty()) out.push_back(parse(nlohmann::json::parse(line)));
  }
  return out;
}

}  // namespace

std::string_view to_string(Provenance p) {
  return p == Provenance::kOracle ? "oracle" : "model-assisted";
}

std::string_view to_string(RefusalVariant v) {
  switch (v) {
    case RefusalVariant::kDirectIdk: return "DirectIDK";
    case RefusalVariant::kAnswerIdk: return "AnswerIDK";
    case RefusalVariant::kReasonedIdk: return "ReasonedIDK";
  }
  return "DirectIDK";
}

RefusalVariant refusal_variant_from_string(std::string_view name) {
  for (auto v : {RefusalVariant::kDirectIdk, RefusalVariant::kAnswerIdk, RefusalVariant::kReasonedIdk}) {
    if (to_string(v) == name) return v;
  }
  throw ConfigError("unknown refusal variant '" + std::string(name) + "'");
}

std::string PolicyBackend::complete(const std::string& prompt, std::uint64_t seed) {
  TokenIds ids{special::kBos};
  const auto body = vocab_.encode(prompt, EncodeMode::kPermissive);
  const auto room = static_cast<std::size_t>(std::max(1, policy_.config.max_seq_len - max_new_ - 1));
  const auto skip = body.size() > room ? body.size() - room : 0;
  ids.insert(ids.end(), body.begin() + static_cast<std::ptrdiff_t>(skip), body.end());
  const auto options = temperature_ > 0.0 ? DecodeOptions::sampled(temperature_, seed, max_new_)
                                          : DecodeOptions::greedy(max_new_);
  auto out = decode(policy_, ids, options);
  if (!out.empty() && out.back() == special::kEos) out.pop_back();
  return vocab_.decode(out);
}

std::string ScriptedBackend::complete(const std::string& prompt, std::uint64_t) {
  prompts_.push_back(prompt);
  const auto i = std::min(static_cast<std::size_t>(calls_), replies_.size() - 1);
  ++calls_;
  if (replies_.empty()) return {};
  return replies_[i];
}

Validation validate_text(const QARecord& source, std::span<const std::string> cot_steps,
                         std::string_view answer) {
  const auto gold = fact_tokens(source.fact_slots);
  auto scan = [&](std::string_view text, int step) -> Validation {
    for (const auto& u : split_units(text)) {
      const auto t = fact_token(u);
      if (t.empty()) continue;
      for (const auto& [slot, toks] : gold) {
        if (std::find(toks.begin(), toks.end(), t) != toks.end()) {
          const std::string where = step < 0 ? "answer" : "step " + std::to_string(step);
          return {false, where + " repeats gold token '" + t + "' of slot '" + slot + "'", step, slot};
        }
      }
    }
    return {};
  };
  if (auto v = scan(answer, -1); !v) return v;
  for (std::size_t i = 0; i < cot_steps.size(); ++i) {
    if (auto v = scan(cot_steps[i], static_cast<int>(i) + 1); !v) return v;
  }
  return {};
}

Validation validate_counterfactual(const QARecord& source, const CounterfactualRecord& candidate) {
  return validate_text(source, candidate.cf_cot_steps, candidate.cf_answer);
}

std::map<std::string, std::string> oracle_swap(const QARecord& record, const ValuePools& pools,
                                               std::uint64_t seed) {
  Rng rng(mix_seed(seed, "swap:" + record.id));
  std::map<std::string, std::string> out;
  for (const auto& [slot, gold] : record.fact_slots) {
    const auto it = pools.find(slot);
    if (it == pools.end()) throw GenerationError(record.id, "no value pool for slot '" + slot + "'");
    std::set<std::string> gold_toks;
    for (const auto& u : split_units(gold)) gold_toks.insert(fact_token(u));
    const auto gold_len = split_units(gold).size();
    std::vector<std::string> candidates;
    for (const auto& v : it->second) {
      if (v == gold) continue;
      const auto units = split_units(v);
      if (units.size() > gold_len) continue;
      const bool overlaps = std::any_of(units.begin(), units.end(), [&](const std::string& u) {
        return gold_toks.count(fact_token(u)) > 0;
      });
      if (!overlaps && std::find(candidates.begin(), candidates.end(), v) == candidates.end()) {
        candidates.push_back(v);
      }
    }
    if (candidates.size() < 2) {
      throw GenerationError(record.id, "value pool for slot '" + slot + "' is exhausted");
    }
    out[slot] = candidates[rng.below(candidates.size())];
  }
  return out;
}

std::string counterfactual_answer(const QARecord& record,
                                  const std::map<std::string, std::string>& swapped) {
  std::string answer = record.answer;
  for (const auto& [slot, gold] : record.fact_slots) {
    const auto it = swapped.find(slot);
    if (it == swapped.end()) throw GenerationError(record.id, "slot '" + slot + "' was not swapped");
    if (answer.find(gold) == std::string::npos) {
      throw GenerationError(record.id, "answer does not contain the gold value of '" + slot + "'");
    }
    answer = replace_all(std::move(answer), gold, it->second);
  }
  return answer;
}

std::vector<std::string> backward_reasoning_cot(const QARecord& record,
                                                const std::map<std::string, std::string>& swapped,
                                                std::uint64_t seed) {
  const std::string& slot = single_slot(record);
  const auto it = swapped.find(slot);
  if (it == swapped.end()) throw GenerationError(record.id, "slot '" + slot + "' was not swapped");
  const std::string name = entity_name(record);
  const std::string phrase = slot_template(slot).phrase;
  const std::string& value = it->second;

  Rng rng(mix_seed(seed, "cf-cot:" + record.id));
  std::vector<std::string> steps;
  steps.push_back(fill_slots(kCfOpenings[rng.below(kCfOpenings.size())], name, phrase, value));
  std::vector<std::string> middles = kCfMiddles;
  rng.shuffle(middles);
  const std::size_t n_middle = rng.below(3);  // total 2..4 steps
  for (std::size_t i = 0; i < n_middle; ++i) steps.push_back(fill_slots(middles[i], name, phrase, value));
  steps.push_back(fill_slots(kCfFinal, name, phrase, value));
  return steps;
}

std::string extract_answer_completion(std::string_view completion) {
  std::vector<std::string> lines;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= completion.size(); ++i) {
    if (i == completion.size() || completion[i] == '\n') {
      auto line = trim(completion.substr(start, i - start));
      if (!line.empty()) lines.push_back(std::move(line));
      start = i + 1;
    }
  }
  if (lines.empty()) return {};
  std::string line = lines.back();
  // Drop a "... Answer:" label if the model echoed one.
  const auto colon = line.find(':');
  if (colon != std::string::npos) {
    std::string label = line.substr(0, colon);
    std::transform(label.begin(), label.end(), label.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    if (label.find("answer") != std::string::npos) line = trim(line.substr(colon + 1));
  }
  auto strip = [&](std::string_view marks) {
    while (line.size() >= 2 && marks.find(line.front()) != std::string_view::npos &&
           line.front() == line.back()) {
      line = trim(std::string_view(line).substr(1, line.size() - 2));
    }
  };
  strip("\"'*`");
  return line;
}

std::vector<std::string> extract_cot_completion(std::string_view completion) {
  std::string_view body = completion;
  const auto open = body.find("<think>");
  if (open != std::string_view::npos) {
    body = body.substr(open + 7);
    const auto close = body.find("</think>");
    if (close != std::string_view::npos) body = body.substr(0, close);
  }
  // Single line breaks separate steps as well as blank lines.
  std::string text(body);
  std::string norm;
  for (std::size_t i = 0; i < text.size(); ++i) {
    norm += text[i];
    if (text[i] == '\n') norm += '\n';
  }
  return segment_steps(norm);
}

CounterfactualRecord make_counterfactual(const QARecord& record, const CounterfactualOptions& options) {
  if (options.mode == Provenance::kModelAssisted) {
    if (options.backend == nullptr) throw ConfigError("model-assisted counterfactuals need a backend");
    const auto answer_len = split_units(record.answer).size();
    for (int attempt = 0; attempt <= options.retries; ++attempt) {
      const std::string tag = record.id + "#" + std::to_string(attempt);
      const std::string a_prompt =
          prompts::fill(prompts::counterfactual_answer, {{"question", record.question}, {"answer", record.answer}});
      CounterfactualRecord cand;
      cand.source_id = record.id;
      cand.question = record.question;
      cand.provenance = Provenance::kModelAssisted;
      cand.cf_answer =
          extract_answer_completion(options.backend->complete(a_prompt, mix_seed(options.seed, "a:" + tag)));
      std::string why;
      if (cand.cf_answer.empty()) {
        why = "empty answer";
      } else if (split_units(cand.cf_answer).size() > answer_len) {
        why = "answer longer than the original";
      } else {
        const std::string c_prompt = prompts::fill(
            prompts::counterfactual_cot, {{"question", record.question}, {"answer", cand.cf_answer}});
        cand.cf_cot_steps = extract_cot_completion(
            options.backend->complete(c_prompt, mix_seed(options.seed, "c:" + tag)));
        if (cand.cf_cot_steps.empty()) {
          why = "empty reasoning";
        } else if (const auto v = validate_counterfactual(record, cand); !v) {
          why = v.reason;
        } else if (options.vocab != nullptr) {
          bool ok = in_vocabulary(*options.vocab, cand.cf_answer);
          for (const auto& s : cand.cf_cot_steps) ok = ok && in_vocabulary(*options.vocab, s);
          if (!ok) why = "units outside the vocabulary";
        }
      }
      if (why.empty()) return cand;
      spdlog::warn("counterfactual {} attempt {} rejected: {}", record.id, attempt + 1, why);
    }
    spdlog::warn("counterfactual {} falls back to the oracle", record.id);
    CounterfactualOptions oracle = options;
    oracle.mode = Provenance::kOracle;
    auto out = make_counterfactual(record, oracle);
    out.fallback = true;
    return out;
  }

  CounterfactualRecord out;
  out.source_id = record.id;
  out.question = record.question;
  out.provenance = Provenance::kOracle;
  out.swapped = oracle_swap(record, options.pools, options.seed);
  out.cf_answer = counterfactual_answer(record, out.swapped);
  out.cf_cot_steps = backward_reasoning_cot(record, out.swapped, options.seed);
  if (const auto v = validate_counterfactual(record, out); !v) {
    throw GenerationError(record.id, "oracle output failed validation: " + v.reason);
  }
  return out;
}

std::vector<CounterfactualRecord> build_counterfactual_set(std::span<const QARecord> forget,
                                                           const CounterfactualOptions& options) {
  if (forget.empty()) throw ContractError("build_counterfactual_set: empty forget set");
  std::vector<CounterfactualRecord> out;
  out.reserve(forget.size());
  for (const auto& r : forget) {
    try {
      out.push_back(make_counterfactual(r, options));
    } catch (const GenerationError&) {
      throw;
    } catch (const std::exception& e) {
      throw GenerationError(r.id, e.what());
    }
  }
  return out;
}

std::vector<RefusalRecord> build_refusal_set(std::span<const QARecord> forget, RefusalVariant variant) {
  std::vector<RefusalRecord> out;
  out.reserve(forget.size());
  for (const auto& r : forget) {
    RefusalRecord idk;
    idk.source_id = r.id;
    idk.question = r.question;
    idk.variant = variant;
    idk.idk_answer = std::string(kRefusalText);
    switch (variant) {
      case RefusalVariant::kDirectIdk:
        idk.idk_cot = {std::string(kRefusalText)};
        break;
      case RefusalVariant::kAnswerIdk:
        idk.idk_cot = r.cot_steps;
        break;
      case RefusalVariant::kReasonedIdk: {
        const std::string name = entity_name(r);
        const std::string phrase = slot_template(single_slot(r)).phrase;
        for (const auto& s : kHedgedSteps) idk.idk_cot.push_back(fill_slots(s, name, phrase, ""));
        break;
      }
    }
    out.push_back(std::move(idk));
  }
  return out;
}

std::vector<std::string> counterfactual_lexicon() {
  std::vector<std::string> texts = kCfOpenings;
  texts.insert(texts.end(), kCfMiddles.begin(), kCfMiddles.end());
  texts.push_back(kCfFinal);
  texts.insert(texts.end(), kHedgedSteps.begin(), kHedgedSteps.end());
  texts.emplace_back(kRefusalText);
  std::vector<std::string> units;
  for (const auto& t : texts)
    for (auto& u : split_units(t))
      if (u.find('{') == std::string::npos) units.push_back(std::move(u));
  std::sort(units.begin(), units.end());
  units.erase(std::unique(units.begin(), units.end()), units.end());
  return units;
}

std::uint64_t hash_counterfactual_set(std::span<const CounterfactualRecord> set) {
  std::uint64_t h = fnv1a("dc");
  for (const auto& r : set) h = fnv1a(to_json(r).dump(), h);
  return h;
}

nlohmann::json to_json(const CounterfactualRecord& r) {
  return nlohmann::json{{"id", r.source_id},
                        {"source_id", r.source_id},
                        {"question", r.question},
                        {"cot_steps", r.cf_cot_steps},
                        {"answer", r.cf_answer},
                        {"fact_slots", r.swapped},
                        {"split", "forget"},
                        {"provenance", std::string(to_string(r.provenance))},
                        {"fallback", r.fallback}};
}

CounterfactualRecord counterfactual_from_json(const nlohmann::json& j) {
  CounterfactualRecord r;
  r.source_id = j.at("source_id").get<std::string>();
  r.question = j.at("question").get<std::string>();
  r.cf_cot_steps = j.at("cot_steps").get<std::vector<std::string>>();
  r.cf_answer = j.at("answer").get<std::string>();
  r.swapped = j.at("fact_slots").get<std::map<std::string, std::string>>();
  const auto p = j.at("provenance").get<std::string>();
  if (p == "oracle") r.provenance = Provenance::kOracle;
  else if (p == "model-assisted") r.provenance = Provenance::kModelAssisted;
  else throw FormatError("unknown provenance '" + p + "'");
  r.fallback = j.value("fallback", false);
  return r;
}

nlohmann::json to_json(const RefusalRecord& r) {
  return nlohmann::json{{"id", r.source_id},
                        {"source_id", r.source_id},
                        {"question", r.question},
                        {"cot_steps", r.idk_cot},
                        {"answer", r.idk_answer},
                        {"split", "forget"},
                        {"variant", std::string(to_string(r.variant))}};
}

RefusalRecord refusal_from_json(const nlohmann::json& j) {
  RefusalRecord r;
  r.source_id = j.at("source_id").get<std::string>();
  r.question = j.at("question").get<std::string>();
  r.idk_cot = j.at("cot_steps").get<std::vector<std::string>>();
  r.idk_answer = j.at("answer").get<std::string>();
  r.variant = refusal_variant_from_string(j.at("variant").get<std::string>());
  return r;
}

void write_counterfactuals_jsonl(const std::filesystem::path& path,
                                 std::span<const CounterfactualRecord> records) {
  write_jsonl(path, records);
}

std::vector<CounterfactualRecord> read_counterfactuals_jsonl(const std::filesystem::path& path) {
  return read_jsonl(path, [](const nlohmann::json& j) { return counterfactual_from_json(j); });
}

void write_refusals_jsonl(const std::filesystem::path& path, std::span<const RefusalRecord> records) {
  write_jsonl(path, records);
}

std::vector<RefusalRecord> read_refusals_jsonl(const std::filesystem::path& path) {
  return read_jsonl(path, [](const nlohmann::json& j) { return refusal_from_json(j); });
}

}  // namespace unlearn
