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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <set>

#include "unlearn/corpus.hpp"
#include "unlearn/counterfactual.hpp"
#include "unlearn/errors.hpp"
#include "unlearn/text_metrics.hpp"

using namespace unlearn;

namespace {

std::vector<QARecord> everything(std::uint64_t seed) {
  auto corpus = generate_corpus(seed, 20, 4, default_value_pools());
  auto all = corpus.records;
  for (auto& r : generate_real_authors_analog(seed, 5)) all.push_back(r);
  for (auto& r : generate_world_facts_analog(seed, 10)) all.push_back(r);
  for (auto& r : generate_probe_set(seed, 10, 5).train) all.push_back(r);
  return all;
}

std::set<std::string> lowered_units(const std::vector<std::string>& texts) {
  std::set<std::string> out;
  for (const auto& t : texts)
    for (const auto& u : split_units(t)) out.insert(fact_token(u));
  return out;
}

}  // namespace

TEST_CASE("vocabulary codec") {
  const auto vocab = Vocabulary::build({"b", "a", "c", "a"});
  CHECK(vocab.size() == special::kCount + 3);
  CHECK(vocab.token(special::kThinkOpen) == "<think>");
  CHECK(vocab.token(special::kThinkClose) == "</think>");
  CHECK(vocab.id("a") == special::kCount);
  const auto ids = vocab.encode("a b");
  CHECK(ids == TokenIds{vocab.id("a"), vocab.id("b")});
  CHECK(vocab.decode(ids) == "a b");
  CHECK(vocab.encode("").empty());
  for (auto id : vocab.encode("c b a c")) CHECK(static_cast<std::size_t>(id) < vocab.size());

  try {
    vocab.encode("a zz b");
    FAIL("expected a tokenization error");
  } catch (const TokenizationError& e) {
    CHECK(e.unit() == "zz");
    CHECK(e.offset() == 2);
  }
  CHECK(vocab.encode("a zz", EncodeMode::kPermissive) == TokenIds{vocab.id("a"), special::kUnk});
  CHECK_THROWS_AS(Vocabulary::build({"x<think>"}), ConfigError);
  CHECK_THROWS_AS(Vocabulary::build({"two words"}), ConfigError);
}

TEST_CASE("vocabulary file round trip") {
  const auto path = std::filesystem::temp_directory_path() / "unlearn_vocab_test.txt";
  const auto vocab = Vocabulary::build({"alpha", "beta"});
  vocab.save(path);
  CHECK(Vocabulary::load(path) == vocab);
  std::filesystem::remove(path);
}

TEST_CASE("generate_corpus") {
  const auto pools = default_value_pools();
  const auto c = generate_corpus(7, 20, 2, pools);
  CHECK(c.records.size() == 40);
  std::set<std::string> entities;
  for (const auto& r : c.records) entities.insert(r.entity_id);
  CHECK(entities.size() == 20);
  CHECK(generate_corpus(7, 20, 2, pools).records == c.records);

  const auto other = generate_corpus(8, 20, 2, pools);
  CHECK(other.records.size() == c.records.size());
  int differing = 0;
  for (std::size_t i = 0; i < c.records.size(); ++i) {
    differing += entity_name(c.records[i]) != entity_name(other.records[i]) ? 1 : 0;
    CHECK(other.records[i].fact_slots.size() == 1);
  }
  CHECK(differing > 0);

  for (const auto& r : c.records) {
    CHECK(!r.cot_steps.empty());
    CHECK(r.cot_steps.size() >= 2);
    CHECK(r.cot_steps.size() <= 5);
    for (const auto& [slot, value] : r.fact_slots) {
      CHECK(r.answer.find(value) != std::string::npos);
      CHECK(r.cot_steps.back().find(value) != std::string::npos);
    }
    const std::string name = entity_name(r);
    for (const auto& s : r.cot_steps) CHECK(s.find(name) != std::string::npos);
  }

  ValuePools small = pools;
  small["award"] = {"A", "B", "C"};
  try {
    generate_corpus(1, 10, 1, small);
    FAIL("expected a config error");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("award") != std::string::npos);
  }
  CHECK_THROWS_AS(generate_corpus(1, 9, 1, pools), ConfigError);
}

TEST_CASE("value pools and templates do not collide") {
  const auto pools = default_value_pools();
  std::vector<std::string> template_texts = corpus_template_lexicon();
  for (const auto& u : counterfactual_lexicon()) template_texts.push_back(u);
  const auto template_units = lowered_units(template_texts);
  std::set<std::string> name_units;
  for (const auto& r : everything(7)) {
    if (r.split == Split::kProbe) continue;
    for (const auto& u : split_units(entity_name(r))) name_units.insert(fact_token(u));
  }
  for (const auto& [slot, values] : pools) {
    std::set<std::string> seen;
    const auto width = split_units(values.front()).size();
    for (const auto& v : values) {
      CHECK_MESSAGE(split_units(v).size() == width, slot << ": " << v);
      for (const auto& u : split_units(v)) {
        const auto t = fact_token(u);
        CHECK_MESSAGE(seen.insert(t).second, slot << " repeats token " << t);
        CHECK_MESSAGE(template_units.count(t) == 0, slot << " token in templates: " << t);
        CHECK_MESSAGE(name_units.count(t) == 0, slot << " token in names: " << t);
      }
    }
  }
}

TEST_CASE("split_forget") {
  const auto pools = default_value_pools();
  SUBCASE("ratio arithmetic") {
    const auto c = split_forget(generate_corpus(3, 20, 10, pools), 0.10, 5);
    CHECK(c.records.size() == 200);
    CHECK(c.forget_ids.size() == 20);
    std::set<std::string> forgotten;
    for (const auto& r : c.forget_records()) forgotten.insert(r.entity_id);
    CHECK(forgotten.size() == 2);
  }
  SUBCASE("entity granular and exhaustive for many sizes") {
    for (int n = 10; n <= 100; n += 15) {
      const auto c = split_forget(generate_corpus(static_cast<std::uint64_t>(n), n, 2, pools), 0.1, 9);
      std::set<std::string> fe, re;
      for (const auto& r : c.records) {
        const bool f = c.forget_ids.count(r.id) > 0;
        const bool k = c.retain_ids.count(r.id) > 0;
        CHECK(f != k);
        (f ? fe : re).insert(r.entity_id);
        CHECK((r.split == Split::kForget) == f);
      }
      for (const auto& e : fe) CHECK(re.count(e) == 0);
      CHECK(c.forget_ids.size() + c.retain_ids.size() == c.records.size());
      const double expected = 0.1 * static_cast<double>(c.records.size());
      CHECK(std::abs(static_cast<double>(c.forget_ids.size()) - expected) <= 2.0 + 1e-12);
    }
  }
  SUBCASE("determinism and errors") {
    const auto base = generate_corpus(3, 20, 2, pools);
    CHECK(split_forget(base, 0.1, 4).forget_ids == split_forget(base, 0.1, 4).forget_ids);
    CHECK_THROWS_AS(split_forget(base, 0.01, 4), ConfigError);
    CHECK_THROWS_AS(split_forget(base, 0.0, 4), ConfigError);
    CHECK_THROWS_AS(split_forget(base, 1.0, 4), ConfigError);
  }
}

TEST_CASE("rendering and parsing") {
  const auto all = everything(7);
  const auto vocab = build_vocabulary(all, default_value_pools(), counterfactual_lexicon());
  for (const auto& r : all) {
    const auto ex = render_example(r, vocab);
    CHECK(ex.tokens.front() == special::kBos);
    CHECK(ex.tokens.back() == special::kEos);
    CHECK(std::count(ex.tokens.begin(), ex.tokens.end(), special::kThinkOpen) == 1);
    CHECK(std::count(ex.tokens.begin(), ex.tokens.end(), special::kThinkClose) == 1);
    CHECK(static_cast<std::size_t>(std::count(ex.tokens.begin(), ex.tokens.end(), special::kStepSep)) ==
          r.cot_steps.size() - 1);
    CHECK(ex.tokens[ex.think_open] == special::kThinkOpen);
    CHECK(ex.tokens[ex.think_close] == special::kThinkClose);

    // Removing the THINK span recovers question + answer.
    TokenIds outside(ex.tokens.begin() + 1, ex.tokens.begin() + static_cast<std::ptrdiff_t>(ex.think_open));
    outside.insert(outside.end(), ex.tokens.begin() + static_cast<std::ptrdiff_t>(ex.think_close) + 1,
                   ex.tokens.end() - 1);
    CHECK(vocab.decode(outside) == r.question + " " + r.answer);

    const auto parsed = parse_response(ex.response(), vocab);
    CHECK(parsed.has_think);
    CHECK(parsed.cot_steps == r.cot_steps);
    CHECK(parsed.answer == r.answer);
  }
  SUBCASE("fallbacks") {
    const auto a = vocab.encode("the award");
    auto p = parse_response(a, vocab);
    CHECK(!p.has_think);
    CHECK(p.answer == "the award");
    TokenIds unclosed{special::kThinkOpen};
    unclosed.insert(unclosed.end(), a.begin(), a.end());
    p = parse_response(unclosed, vocab);
    CHECK(p.has_think);
    CHECK(p.cot_steps == std::vector<std::string>{"the award"});
    CHECK(p.answer.empty());
    TokenIds after_eos = render_response(std::vector<std::string>{"the award"}, "the", vocab);
    after_eos.push_back(vocab.id("award"));
    CHECK(parse_response(after_eos, vocab).answer == "the");
  }
}

TEST_CASE("probe set is arithmetic and disjoint from entities") {
  const auto probe = generate_probe_set(3, 40, 20);
  CHECK(probe.train.size() == 40);
  CHECK(probe.eval.size() == 20);
  std::set<std::string> questions;
  for (const auto& r : probe.train) questions.insert(r.question);
  for (const auto& r : probe.eval) {
    CHECK(questions.count(r.question) == 0);
    const auto units = split_units(r.question);
    int a = std::stoi(units[2]), b = std::stoi(units[4]), c = std::stoi(units[6]);
    int s = units[3] == "plus" ? a + b : a - b;
    int res = units[5] == "plus" ? s + c : s - c;
    CHECK(r.fact_slots.at("result") == std::to_string(res));
    CHECK(r.answer == "The result is " + std::to_string(res) + " .");
  }
}

TEST_CASE("jsonl persistence") {
  const auto path = std::filesystem::temp_directory_path() / "unlearn_corpus_test.jsonl";
  const auto c = split_forget(generate_corpus(2, 10, 2, default_value_pools()), 0.2, 1);
  write_records_jsonl(path, c.records);
  const auto back = read_records_jsonl(path);
  CHECK(back == c.records);
  const auto j = to_json(c.records.front());
  for (const char* key : {"id", "entity_id", "fact_slots", "question", "cot_steps", "answer", "split"}) {
    CHECK(j.contains(key));
  }
  CHECK(j.size() == 7);
  std::filesystem::remove(path);
}
