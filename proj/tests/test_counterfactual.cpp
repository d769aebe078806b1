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

#include <spdlog/spdlog.h>

#include <filesystem>

#include "unlearn/counterfactual.hpp"
#include "unlearn/errors.hpp"
#include "unlearn/prompts.hpp"
#include "unlearn/text_metrics.hpp"

using namespace unlearn;

namespace {

struct Quiet {
  Quiet() { spdlog::set_level(spdlog::level::off); }
} quiet;

Corpus forty_records() { return generate_corpus(7, 20, 2, default_value_pools()); }

CounterfactualOptions oracle_options(std::uint64_t seed = 11) {
  CounterfactualOptions o;
  o.pools = default_value_pools();
  o.seed = seed;
  return o;
}

}  // namespace

TEST_CASE("oracle counterfactual set") {
  const auto corpus = forty_records();
  const auto& forget = corpus.records;
  const auto dc = build_counterfactual_set(forget, oracle_options());
  const auto pools = default_value_pools();
  REQUIRE(dc.size() == forget.size());
  int passed = 0;
  for (std::size_t i = 0; i < dc.size(); ++i) {
    const auto& src = forget[i];
    const auto& cf = dc[i];
    CHECK(cf.source_id == src.id);
    CHECK(cf.question == src.question);
    CHECK(cf.provenance == Provenance::kOracle);
    passed += validate_counterfactual(src, cf) ? 1 : 0;
    CHECK(split_units(cf.cf_answer).size() <= split_units(src.answer).size());
    CHECK(cf.cf_cot_steps.size() >= 2);
    CHECK(cf.cf_cot_steps.size() <= 4);
    for (const auto& [slot, value] : cf.swapped) {
      const auto& pool = pools.at(slot);
      CHECK(std::find(pool.begin(), pool.end(), value) != pool.end());
      CHECK(value != src.fact_slots.at(slot));
      CHECK(cf.cf_answer.find(value) != std::string::npos);
      CHECK(cf.cf_cot_steps.back().find(value) != std::string::npos);
      CHECK(entailment_proxy(cf.cf_answer, src.fact_slots) == 0);
    }
    std::string cot;
    for (const auto& s : cf.cf_cot_steps) cot += s + " ";
    CHECK(fact_token_leakage(cot, src.fact_slots) == 0.0);
  }
  CHECK(passed == 40);
  CHECK(build_counterfactual_set(forget, oracle_options()) == dc);
  CHECK(hash_counterfactual_set(build_counterfactual_set(forget, oracle_options())) ==
        hash_counterfactual_set(dc));
  CHECK(build_counterfactual_set(forget, oracle_options(12)) != dc);
  CHECK_THROWS_AS(build_counterfactual_set(std::span<const QARecord>{}, oracle_options()), ContractError);
}

TEST_CASE("validator") {
  const auto corpus = forty_records();
  const QARecord& src = corpus.records.front();  // award slot
  REQUIRE(src.fact_slots.begin()->first == "award");
  auto cf = make_counterfactual(src, oracle_options());
  CHECK(validate_counterfactual(src, cf));
  cf.cf_cot_steps.at(1) += " " + src.fact_slots.at("award");
  const auto v = validate_counterfactual(src, cf);
  CHECK(!v);
  CHECK(v.step == 2);
  CHECK(v.slot == "award");
}

TEST_CASE("oracle pool exhaustion") {
  const auto corpus = forty_records();
  const QARecord& src = corpus.records.front();
  auto o = oracle_options();
  o.pools["award"] = {src.fact_slots.at("award"), "Jade Summit Chalice"};
  CHECK_THROWS_AS(make_counterfactual(src, o), GenerationError);
  try {
    build_counterfactual_set(std::span<const QARecord>(corpus.records).first(1), o);
  } catch (const GenerationError& e) {
    CHECK(e.record_id() == src.id);
  }
}

TEST_CASE("refusal sets") {
  const auto corpus = forty_records();
  const auto& forget = corpus.records;
  const auto direct = build_refusal_set(forget, RefusalVariant::kDirectIdk);
  const auto answer = build_refusal_set(forget, RefusalVariant::kAnswerIdk);
  const auto reasoned = build_refusal_set(forget, RefusalVariant::kReasonedIdk);
  REQUIRE(direct.size() == forget.size());
  for (std::size_t i = 0; i < forget.size(); ++i) {
    CHECK(direct[i].idk_cot == std::vector<std::string>{"I don't know."});
    CHECK(direct[i].idk_answer == "I don't know.");
    CHECK(validate_text(forget[i], direct[i].idk_cot, direct[i].idk_answer));
    CHECK(answer[i].idk_cot == forget[i].cot_steps);
    CHECK(answer[i].idk_answer == "I don't know.");
    CHECK(validate_text(forget[i], reasoned[i].idk_cot, reasoned[i].idk_answer));
    CHECK(reasoned[i].idk_cot.size() >= 3);
    CHECK(reasoned[i].idk_answer == "I don't know.");
  }
  CHECK(reasoned[0].idk_cot[1] == "I can't recall any source confirming this .");
}

TEST_CASE("model-assisted generation") {
  const auto corpus = forty_records();
  const QARecord& src = corpus.records.front();
  const std::string name = entity_name(src);
  auto o = oracle_options();
  o.mode = Provenance::kModelAssisted;

  SUBCASE("clean completion is accepted as is") {
    const std::string new_answer = name + " received the Jade Summit Chalice .";
    ScriptedBackend backend({"New Counterfactual Answer: " + new_answer,
                             "<think>\nThinking of " + name + " , a chalice stands out .\nYes , it is the Jade Summit Chalice .\n</think>"});
    o.backend = &backend;
    const auto cf = make_counterfactual(src, o);
    CHECK(cf.provenance == Provenance::kModelAssisted);
    CHECK(!cf.fallback);
    CHECK(cf.cf_answer == new_answer);
    CHECK(cf.cf_cot_steps.size() == 2);
    CHECK(backend.calls() == 2);
    CHECK(backend.prompts()[0] ==
          prompts::fill(prompts::counterfactual_answer, {{"question", src.question}, {"answer", src.answer}}));
    CHECK(backend.prompts()[1] ==
          prompts::fill(prompts::counterfactual_cot, {{"question", src.question}, {"answer", new_answer}}));
    CHECK(validate_counterfactual(src, cf));
  }
  SUBCASE("leaky completions are retried then replaced by the oracle") {
    ScriptedBackend backend({src.answer});
    o.backend = &backend;
    const auto cf = make_counterfactual(src, o);
    CHECK(cf.fallback);
    CHECK(cf.provenance == Provenance::kOracle);
    CHECK(backend.calls() == 8);  // four attempts, each asking for an answer and a reasoning trace
    CHECK(validate_counterfactual(src, cf));
    CHECK(cf == [&] {
      auto expected = make_counterfactual(src, oracle_options());
      expected.fallback = true;
      return expected;
    }());
  }
  SUBCASE("a whole forget set passes through the retry path") {
    ScriptedBackend backend({"", "garbage"});
    o.backend = &backend;
    const auto dc = build_counterfactual_set(corpus.records, o);
    for (std::size_t i = 0; i < dc.size(); ++i) CHECK(validate_counterfactual(corpus.records[i], dc[i]));
  }
  SUBCASE("out-of-vocabulary candidates are rejected when a vocabulary is given") {
    const auto vocab = build_vocabulary(corpus.records, default_value_pools(), counterfactual_lexicon());
    ScriptedBackend backend({name + " received the Zephyr Crown .", "<think>Surely the Zephyr Crown .</think>"});
    o.backend = &backend;
    o.vocab = &vocab;
    CHECK(make_counterfactual(src, o).fallback);
  }
  SUBCASE("policy backend decodes through the model") {
    const auto vocab = build_vocabulary(corpus.records, default_value_pools(), counterfactual_lexicon());
    ModelConfig mc;
    mc.vocab_size = static_cast<int>(vocab.size());
    mc.d_model = 16;
    mc.d_ff = 32;
    const auto policy = init_policy<float>(mc, 3);
    PolicyBackend backend(policy, vocab, 8);
    const auto text = backend.complete(prompts::fill(prompts::counterfactual_answer,
                                                     {{"question", src.question}, {"answer", src.answer}}),
                                       1);
    CHECK(split_units(text).size() <= 8);
    o.backend = &backend;
    o.vocab = &vocab;
    CHECK(validate_counterfactual(src, make_counterfactual(src, o)));
  }
}

TEST_CASE("completion extraction") {
  CHECK(extract_answer_completion("New Counterfactual Answer: \"Blue Hill\"\n") == "Blue Hill");
  CHECK(extract_answer_completion("Sure.\n\n**Blue Hill**") == "Blue Hill");
  CHECK(extract_answer_completion("") == "");
  CHECK(extract_cot_completion("<think>One . Two .</think> junk") ==
        std::vector<std::string>{"One .", "Two ."});
  CHECK(extract_cot_completion("Line one\nLine two") == std::vector<std::string>{"Line one", "Line two"});

  // The generated award example from the counterfactual figure: extraction
  // works, but the strict validator rejects it because the two names share
  // the token "Literature".
  const std::string completion = "African Union Prize for Literature";
  CHECK(extract_answer_completion("Return your exact New Counterfactual Answer: " + completion) == completion);
  QARecord src;
  src.id = "X-award";
  src.fact_slots = {{"award", "International Health Literature Award"}};
  src.answer = "The International Health Literature Award .";
  CounterfactualRecord cand;
  cand.cf_answer = completion;
  cand.cf_cot_steps = {"Some step ."};
  const auto v = validate_counterfactual(src, cand);
  CHECK(!v);
  CHECK(v.reason.find("literature") != std::string::npos);
}

TEST_CASE("jsonl round trip") {
  const auto dir = std::filesystem::temp_directory_path() / "unlearn_cf_test";
  std::filesystem::remove_all(dir);
  const auto corpus = forty_records();
  const auto dc = build_counterfactual_set(corpus.records, oracle_options());
  write_counterfactuals_jsonl(dir / "dc.jsonl", dc);
  CHECK(read_counterfactuals_jsonl(dir / "dc.jsonl") == dc);
  const auto idk = build_refusal_set(corpus.records, RefusalVariant::kReasonedIdk);
  write_refusals_jsonl(dir / "idk.jsonl", idk);
  CHECK(read_refusals_jsonl(dir / "idk.jsonl") == idk);
  const auto j = to_json(dc.front());
  CHECK(j.at("provenance") == "oracle");
  CHECK(to_json(idk.front()).at("variant") == "ReasonedIDK");
  std::filesystem::remove_all(dir);
}
