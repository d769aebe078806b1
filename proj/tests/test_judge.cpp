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

#include <atomic>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "unlearn/errors.hpp"
#include "unlearn/evaluation.hpp"
#include "unlearn/judge.hpp"
// After the Eigen headers: <resolv.h> defines a _res macro.
#include "mock_judge.hpp"

using namespace unlearn;
using namespace unlearn::testing;

namespace {

nlohmann::json fixture(const std::string& name) {
  std::ifstream in(std::string(UNLEARN_SOURCE_DIR) + "/tests/fixtures/" + name);
  REQUIRE(in);
  return nlohmann::json::parse(in);
}

JudgeConfig mock_config(const MockJudgeServer& server, int retries = 2) {
  JudgeConfig c;
  c.enabled = true;
  c.endpoint = server.endpoint();
  c.model = "mock-judge";
  c.retries = retries;
  c.timeout_seconds = 2.0;
  c.backoff_seconds = 0.001;
  return c;
}

const std::string kQuestion = "Which award did Lena Varga receive ?";
const std::map<std::string, std::string> kFacts = {{"award", "Golden Lantern Award"}};

}  // namespace

TEST_CASE("answer judgement parsing") {
  CHECK(parse_answer_judgement(R"({"label":"correct","score":1,"reason":"same"})") == 1.0);
  CHECK(parse_answer_judgement("Sure.\n{\"label\":\"incorrect\",\"score\":0,\"reason\":\"no\"} done") == 0.0);
  CHECK(!parse_answer_judgement(R"({"label":"correct","score":0.5,"reason":"?"})"));
  CHECK(!parse_answer_judgement(R"({"label":"correct","reason":"?"})"));
  CHECK(!parse_answer_judgement("correct"));
  CHECK(!parse_answer_judgement("{broken"));
  CHECK(!parse_answer_judgement(""));
}

TEST_CASE("leakage judgement parsing") {
  CHECK(parse_leakage_judgement("0.34") == doctest::Approx(0.34));
  CHECK(parse_leakage_judgement(" 1.00\n") == 1.0);
  CHECK(parse_leakage_judgement("0") == 0.0);
  CHECK(!parse_leakage_judgement("1.5"));
  CHECK(!parse_leakage_judgement("Score: 0.3"));
  CHECK(!parse_leakage_judgement("-0.2"));
  CHECK(!parse_leakage_judgement(""));
}

TEST_CASE("completion text extraction") {
  CHECK(completion_text(R"({"response":"0.25"})") == "0.25");
  CHECK(completion_text(R"({"text":"x"})") == "x");
  CHECK(completion_text("0.5") == "0.5");
  CHECK(completion_text(R"({"other":1})") == R"({"other":1})");
}

TEST_CASE("judge config") {
  JudgeConfig c;
  CHECK_NOTHROW(c.validate());
  c.enabled = true;
  c.endpoint = "https://judge.example/v1";
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c.endpoint = "http://127.0.0.1:1/v1";
  c.retries = -1;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  CHECK_THROWS_AS((nlohmann::json{{"enabled", true}, {"extra", 1}}.get<JudgeConfig>()), ConfigError);
  const JudgeConfig d;
  CHECK(nlohmann::json(d).get<JudgeConfig>() == d);

  ::setenv("UNLEARN_JUDGE_ENDPOINT", "http://10.0.0.7:9000/score", 1);
  CHECK(JudgeConfig{}.with_environment().endpoint == "http://10.0.0.7:9000/score");
  ::unsetenv("UNLEARN_JUDGE_ENDPOINT");
  CHECK(JudgeConfig{}.with_environment().endpoint == JudgeConfig{}.endpoint);
}

TEST_CASE("offline judge") {
  OfflineJudge j;
  CHECK(j.offline());
  const auto full = j.cot_leakage(kQuestion, "Golden Lantern Award", "She won the Golden Lantern Award .", kFacts);
  CHECK(full.value == 1.0);
  CHECK(full.fallback);
  CHECK(j.cot_leakage(kQuestion, "", "She won the Silver Quill Prize .", kFacts).value == 0.0);
  CHECK(j.answer_correctness(kQuestion, "", "the Golden Lantern Award", kFacts).value == 1.0);
  CHECK(j.answer_correctness(kQuestion, "", "Golden Award", kFacts).value == 0.0);
}

TEST_CASE("request bodies match the golden fixtures") {
  MockJudgeServer server([](const std::string& body, int) {
    const auto j = nlohmann::json::parse(body);
    const bool answer_mode = j.at("prompt").get<std::string>().rfind("You are an expert judge", 0) == 0;
    return MockReply{200, answer_mode ? R"({"response":"{\"label\":\"incorrect\",\"score\":0,\"reason\":\"differs\"}"})"
                                      : R"({"response":"0.00"})"};
  });
  HttpJudge judge(mock_config(server));
  CHECK(!judge.offline());
  const auto a = judge.answer_correctness(kQuestion, "Golden Lantern Award", "Silver Quill Prize", kFacts);
  const auto l = judge.cot_leakage(kQuestion, "Golden Lantern Award", "Lena Varga writes poetry .\n\nShe won a prize .",
                                   kFacts);
  CHECK(a.value == 0.0);
  CHECK(!a.fallback);
  CHECK(l.value == 0.0);
  CHECK(!l.fallback);
  const auto bodies = server.bodies();
  REQUIRE(bodies.size() == 2);
  CHECK(nlohmann::json::parse(bodies[0]) == fixture("judge_answer_request.json"));
  CHECK(nlohmann::json::parse(bodies[1]) == fixture("judge_leakage_request.json"));
}

TEST_CASE("malformed replies are retried then scored by the fallback") {
  SUBCASE("always malformed") {
    MockJudgeServer server([](const std::string&, int) { return MockReply{200, R"({"response":"I think 0.3"})"}; });
    HttpJudge judge(mock_config(server, 2));
    const auto l = judge.cot_leakage(kQuestion, "Golden Lantern Award", "She won the Golden Lantern Award .", kFacts);
    CHECK(l.fallback);
    CHECK(l.value == 1.0);
    CHECK(server.bodies().size() == 3);
  }
  SUBCASE("server errors") {
    MockJudgeServer server([](const std::string&, int) { return MockReply{500, "oops"}; });
    HttpJudge judge(mock_config(server, 1));
    const auto a = judge.answer_correctness(kQuestion, "Golden Lantern Award", "Silver Quill Prize", kFacts);
    CHECK(a.fallback);
    CHECK(a.value == 0.0);
    CHECK(server.bodies().size() == 2);
  }
  SUBCASE("recovers on a later attempt") {
    MockJudgeServer server([](const std::string&, int call) {
      return call < 3 ? MockReply{200, "garbage"} : MockReply{200, "0.42"};
    });
    HttpJudge judge(mock_config(server, 3));
    const auto l = judge.cot_leakage(kQuestion, "Golden Lantern Award", "Lena writes .", kFacts);
    CHECK(!l.fallback);
    CHECK(l.value == doctest::Approx(0.42));
    CHECK(server.bodies().size() == 3);
  }
  SUBCASE("unreachable endpoint") {
    JudgeConfig c;
    c.enabled = true;
    c.endpoint = "http://127.0.0.1:1/v1/judge";
    c.retries = 1;
    c.timeout_seconds = 0.5;
    c.backoff_seconds = 0.001;
    HttpJudge judge(c);
    CHECK(judge.cot_leakage(kQuestion, "Golden Lantern Award", "nothing here", kFacts).fallback);
  }
}

TEST_CASE("aggregate flags fallback records and runs judge calls in parallel") {
  std::atomic<int> in_flight{0}, peak{0};
  MockJudgeServer server([&](const std::string& body, int) {
    const int now = ++in_flight;
    int seen = peak.load();
    while (now > seen && !peak.compare_exchange_weak(seen, now)) {
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(20));
    --in_flight;
    const auto prompt = nlohmann::json::parse(body).at("prompt").get<std::string>();
    if (prompt.find("Forgotten Knowledge") != std::string::npos) {
      // Leakage replies are malformed for one record only.
      return prompt.find("f2") != std::string::npos ? MockReply{200, "n/a"} : MockReply{200, "0.50"};
    }
    return MockReply{200, R"({"label":"correct","score":1,"reason":"ok"})"};
  });
  GenerationDump dump;
  for (const std::string id : {"f1", "f2", "f3", "f4"}) {
    GenerationRecord g;
    g.id = id;
    g.question = "Question " + id + " ?";
    g.gold_answer = "Golden Lantern Award";
    g.gold_cot_steps = {"Step ."};
    g.fact_slots = kFacts;
    g.generated_answer = "Silver Quill Prize";
    g.generated_cot = "Some reasoning .";
    g.pre_answer = "Golden Lantern Award";
    g.split = Split::kForget;
    dump.push_back(g);
  }
  auto cfg = mock_config(server, 1);
  HttpJudge judge(cfg);
  const auto rep = aggregate(dump, judge, 4);
  REQUIRE(rep.records.size() == 4);
  for (std::size_t i = 0; i < 4; ++i) {
    const auto& r = rep.records[i];
    CHECK(r.id == dump[i].id);
    CHECK(r.ES == 1.0);
    CHECK(!r.es_fallback);
    CHECK(r.leakage_fallback == (r.id == "f2"));
    CHECK(r.leakage == (r.id == "f2" ? 0.0 : 0.5));
  }
  CHECK(rep.judge_fallbacks == 1);
  CHECK(peak.load() > 1);
  CHECK(peak.load() <= 4);
}
