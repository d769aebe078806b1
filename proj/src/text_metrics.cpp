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

#include "unlearn/text_metrics.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <set>

#include <spdlog/spdlog.h>

#include "unlearn/errors.hpp"
#include "unlearn/vocabulary.hpp"

namespace unlearn {

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

bool is_terminator(char c) { return c == '.' || c == '!' || c == '?'; }

// "J.K." or "U.S." style unit.
bool is_abbreviation(std::string_view unit) {
  if (unit.size() < 4 || unit.size() % 2 != 0) return false;
  for (std::size_t i = 0; i < unit.size(); i += 2) {
    if (!std::isalpha(static_cast<unsigned char>(unit[i])) || unit[i + 1] != '.') return false;
  }
  return true;
}

std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

void split_paragraph(std::string_view para, std::vector<std::string>& out) {
  std::size_t start = 0;
  for (std::size_t i = 0; i < para.size(); ++i) {
    if (!is_terminator(para[i])) continue;
    const bool boundary = i + 1 == para.size() || std::isspace(static_cast<unsigned char>(para[i + 1]));
    if (!boundary) continue;
    std::size_t unit_begin = i;
    while (unit_begin > 0 && !std::isspace(static_cast<unsigned char>(para[unit_begin - 1]))) --unit_begin;
    if (is_abbreviation(para.substr(unit_begin, i + 1 - unit_begin))) continue;
    auto step = trim(para.substr(start, i + 1 - start));
    if (!step.empty()) out.push_back(std::move(step));
    start = i + 1;
  }
  auto rest = trim(para.substr(start));
  if (!rest.empty()) out.push_back(std::move(rest));
}

}  // namespace

std::vector<std::string> metric_tokens(std::string_view text) {
  auto units = split_units(text);
  for (auto& u : units) u = lower(u);
  return units;
}

std::string fact_token(std::string_view unit) {
  std::size_t b = 0, e = unit.size();
  while (b < e && std::ispunct(static_cast<unsigned char>(unit[b]))) ++b;
  while (e > b && std::ispunct(static_cast<unsigned char>(unit[e - 1]))) --e;
  return lower(unit.substr(b, e - b));
}

std::map<std::string, std::vector<std::string>> fact_tokens(
    const std::map<std::string, std::string>& fact_slots) {
  std::map<std::string, std::vector<std::string>> out;
  for (const auto& [slot, value] : fact_slots) {
    auto& toks = out[slot];
    for (const auto& u : split_units(value)) {
      auto t = fact_token(u);
      if (!t.empty()) toks.push_back(std::move(t));
    }
  }
  return out;
}

std::vector<std::string> segment_steps(std::string_view cot_text) {
  std::vector<std::string> out;
  // Paragraph breaks: a newline, optional horizontal space, another newline.
  std::size_t start = 0;
  std::size_t i = 0;
  while (i < cot_text.size()) {
    if (cot_text[i] == '\n') {
      std::size_t j = i + 1;
      while (j < cot_text.size() && (cot_text[j] == ' ' || cot_text[j] == '\t' || cot_text[j] == '\r')) ++j;
      if (j < cot_text.size() && cot_text[j] == '\n') {
        split_paragraph(cot_text.substr(start, i - start), out);
        while (j < cot_text.size() && std::isspace(static_cast<unsigned char>(cot_text[j]))) ++j;
        start = i = j;
        continue;
      }
    }
    ++i;
  }
  split_paragraph(cot_text.substr(start), out);
  return out;
}

std::size_t lcs_length(std::span<const std::string> a, std::span<const std::string> b) {
  std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

double rouge_l_recall(std::string_view generated, std::string_view reference) {
  const auto ref = metric_tokens(reference);
  if (ref.empty()) {
    spdlog::debug("rouge_l_recall: empty reference scored as 0");
    return 0.0;
  }
  const auto gen = metric_tokens(generated);
  return static_cast<double>(lcs_length(gen, ref)) / static_cast<double>(ref.size());
}

double token_entropy(std::string_view generated) {
  const auto toks = metric_tokens(generated);
  if (toks.size() <= 1) return 0.0;
  std::map<std::string, std::size_t> counts;
  for (const auto& t : toks) ++counts[t];
  const double n = static_cast<double>(toks.size());
  double h = 0.0;
  for (const auto& [_, c] : counts) {
    const double p = static_cast<double>(c) / n;
    h -= p * std::log(p);
  }
  return std::clamp(h / std::log(n), 0.0, 1.0);
}

double cosine_similarity(std::string_view a, std::string_view b) {
  const auto ta = metric_tokens(a);
  const auto tb = metric_tokens(b);
  if (ta.empty() || tb.empty()) return 0.0;
  std::map<std::string, double> ca, cb;
  for (const auto& t : ta) ca[t] += 1.0;
  for (const auto& t : tb) cb[t] += 1.0;
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (const auto& [t, x] : ca) {
    na += x * x;
    const auto it = cb.find(t);
    if (it != cb.end()) dot += x * it->second;
  }
  for (const auto& [_, y] : cb) nb += y * y;
  return std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), 0.0, 1.0);
}

int entailment_proxy(std::string_view answer, const std::map<std::string, std::string>& fact_slots) {
  if (fact_slots.empty()) throw ContractError("entailment_proxy: no fact slots");
  std::vector<std::string> toks;
  for (const auto& u : split_units(answer)) toks.push_back(fact_token(u));
  for (const auto& [slot, value_toks] : fact_tokens(fact_slots)) {
    if (value_toks.empty()) continue;
    const auto it = std::search(toks.begin(), toks.end(), value_toks.begin(), value_toks.end());
    if (it == toks.end()) return 0;
  }
  return 1;
}

double fact_token_leakage(std::string_view text, const std::map<std::string, std::string>& fact_slots) {
  std::set<std::string> gold;
  for (const auto& [_, toks] : fact_tokens(fact_slots)) gold.insert(toks.begin(), toks.end());
  if (gold.empty()) return 0.0;
  std::set<std::string> present;
  for (const auto& u : split_units(text)) {
    auto t = fact_token(u);
    if (gold.count(t)) present.insert(std::move(t));
  }
  return static_cast<double>(present.size()) / static_cast<double>(gold.size());
}

double stepwise_best_match(std::span<const std::string> generated_steps,
                           std::span<const std::string> gold_steps, StepMetric metric) {
  if (gold_steps.empty()) throw ContractError("stepwise_best_match: no gold steps");
  if (generated_steps.empty()) return 0.0;
  double total = 0.0;
  for (const auto& gold : gold_steps) {
    double best = 0.0;
    for (const auto& gen : generated_steps) {
      const double s = metric == StepMetric::kRouge ? rouge_l_recall(gen, gold)
                                                    : cosine_similarity(gen, gold);
      best = std::max(best, s);
    }
    total += best;
  }
  return total / static_cast<double>(gold_steps.size());
}

double harmonic_mean(std::span<const double> values) {
  if (values.empty()) throw ContractError("harmonic_mean: empty list");
  double inv = 0.0;
  for (double v : values) {
    if (v <= 0.0) return 0.0;
    inv += 1.0 / v;
  }
  return static_cast<double>(values.size()) / inv;
}

}  // namespace unlearn
