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

#include "unlearn/evaluation.hpp"

#include <atomic>
#include <cmath>
#include <fstream>
#include <thread>

#include "unlearn/errors.hpp"
#include "unlearn/text_metrics.hpp"

namespace unlearn {

GenerationDump generate_dump(const Policy<float>& policy, std::span<const QARecord> records,
                             const Vocabulary& vocab, int max_new, const GenerationDump* pre) {
  std::map<std::string, const GenerationRecord*> before;
  if (pre != nullptr) {
    for (const auto& g : *pre) before[g.id] = &g;
  }
  GenerationDump out;
  out.reserve(records.size());
  for (const auto& r : records) {
    const auto ids = decode(policy, std::span<const TokenId>(render_prompt(r.question, vocab)),
                            DecodeOptions::greedy(max_new));
    const auto parsed = parse_response(ids, vocab);
    GenerationRecord g;
    g.id = r.id;
    g.question = r.question;
    g.gold_cot_steps = r.cot_steps;
    g.gold_answer = r.answer;
    g.fact_slots = r.fact_slots;
    g.generated_cot = parsed.cot_text();
    g.generated_answer = parsed.answer;
    g.split = r.split;
    if (pre == nullptr) {
      g.pre_answer = g.generated_answer;
    } else {
      const auto it = before.find(r.id);
      if (it == before.end()) throw ContractError("no pre-unlearning generation for " + r.id);
      g.pre_answer = it->second->generated_answer;
    }
    out.push_back(std::move(g));
  }
  return out;
}

nlohmann::json to_json(const GenerationRecord& r) {
  return {{"id", r.id},
          {"question", r.question},
          {"gold_cot_steps", r.gold_cot_steps},
          {"gold_answer", r.gold_answer},
          {"fact_slots", r.fact_slots},
          {"generated_cot", r.generated_cot},
          {"generated_answer", r.generated_answer},
          {"pre_answer", r.pre_answer},
          {"split", to_string(r.split)}};
}

GenerationRecord generation_from_json(const nlohmann::json& j) {
  GenerationRecord r;
  r.id = j.at("id").get<std::string>();
  r.question = j.at("question").get<std::string>();
  r.gold_cot_steps = j.at("gold_cot_steps").get<std::vector<std::string>>();
  r.gold_answer = j.at("gold_answer").get<std::string>();
  r.fact_slots = j.at("fact_slots").get<std::map<std::string, std::string>>();
  r.generated_cot = j.at("generated_cot").get<std::string>();
  r.generated_answer = j.at("generated_answer").get<std::string>();
  r.pre_answer = j.at("pre_answer").get<std::string>();
  r.split = split_from_string(j.at("split").get<std::string>());
  return r;
}

void write_dump_jsonl(const std::filesystem::path& path, const GenerationDump& dump) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write " + path.string());
  for (const auto& g : dump) out << to_json(g).dump() << '\n';
}

GenerationDump read_dump_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open " + path.string());
  GenerationDump out;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty()) out.push_back(generation_from_json(nlohmann::json::parse(line)));
  }
  return out;
}

RecordScores score_record(const GenerationRecord& g, Judge& judge) {
  RecordScores s;
  s.id = g.id;
  s.split = g.split;
  s.R = rouge_l_recall(g.generated_answer, g.gold_answer);
  s.CS = cosine_similarity(g.pre_answer, g.generated_answer);
  s.TE = token_entropy(g.generated_answer);
  const auto es = judge.answer_correctness(g.question, g.gold_answer, g.generated_answer, g.fact_slots);
  s.ES = es.value;
  s.es_fallback = es.fallback;
  if (g.split == Split::kForget) {
    const auto steps = segment_steps(g.generated_cot);
    s.stepR = stepwise_best_match(steps, g.gold_cot_steps, StepMetric::kRouge);
    s.stepCS = stepwise_best_match(steps, g.gold_cot_steps, StepMetric::kCosine);
    const auto leak = judge.cot_leakage(g.question, g.gold_answer, g.generated_cot, g.fact_slots);
    s.leakage = leak.value;
    s.leakage_fallback = leak.fallback;
  }
  return s;
}

MetricReport summarize(std::vector<RecordScores> records) {
  MetricReport rep;
  std::map<Split, SplitMeans> sums;
  for (const auto& s : records) {
    auto& m = sums[s.split];
    ++m.count;
    m.R += s.R;
    m.CS += s.CS;
    m.TE += s.TE;
    m.ES += s.ES;
    m.stepR += s.stepR;
    m.stepCS += s.stepCS;
    m.judge += s.leakage;
    rep.judge_fallbacks += (s.es_fallback ? 1 : 0) + (s.split == Split::kForget && s.leakage_fallback ? 1 : 0);
  }
  for (auto& [split, m] : sums) {
    const double n = m.count;
    for (double* v : {&m.R, &m.CS, &m.TE, &m.ES, &m.stepR, &m.stepCS, &m.judge}) *v /= n;
    rep.splits[std::string(to_string(split))] = m;
  }

  std::vector<double> mu;
  bool complete = true;
  for (Split split : kUtilitySplits) {
    const auto it = sums.find(split);
    if (it == sums.end()) {
      rep.gaps.push_back("missing split " + std::string(to_string(split)) + ": MU not computed");
      complete = false;
      continue;
    }
    const auto& m = it->second;
    mu.insert(mu.end(), {m.R, m.CS, m.TE, m.ES});
  }
  if (complete) rep.MU = harmonic_mean(mu);

  if (const auto it = sums.find(Split::kForget); it != sums.end()) {
    const auto& m = it->second;
    rep.AFE = harmonic_mean(std::vector<double>{1.0 - m.R, 1.0 - m.CS, 1.0 - m.ES});
    rep.CFE = harmonic_mean(std::vector<double>{1.0 - m.stepR, 1.0 - m.stepCS, 1.0 - m.judge});
  } else {
    rep.gaps.push_back("missing split forget: AFE and CFE not computed");
  }
  rep.records = std::move(records);
  return rep;
}

MetricReport aggregate(const GenerationDump& dump, Judge& judge, int max_parallel) {
  std::vector<RecordScores> rows(dump.size());
  const int workers = judge.offline() ? 1 : std::max(1, max_parallel);
  if (workers == 1) {
    for (std::size_t i = 0; i < dump.size(); ++i) rows[i] = score_record(dump[i], judge);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(workers));
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        try {
          for (std::size_t i = next++; i < dump.size(); i = next++) rows[i] = score_record(dump[i], judge);
        } catch (...) {
          errors[static_cast<std::size_t>(w)] = std::current_exception();
        }
      });
    }
    for (auto& t : pool) t.join();
    for (const auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  }
  return summarize(std::move(rows));
}

ProbeResult general_ability_probe(const Policy<float>& policy, std::span<const QARecord> probe,
                                  const Vocabulary& vocab, int max_new) {
  if (probe.empty()) throw ContractError("general_ability_probe: empty probe set");
  int correct = 0;
  double nll = 0.0;
  std::size_t tokens = 0;
  for (const auto& r : probe) {
    const auto e = render_example(r, vocab);
    const auto out = decode(policy, e.prompt(), DecodeOptions::greedy(max_new));
    correct += parse_response(out, vocab).answer == r.answer ? 1 : 0;
    const auto logp = log_softmax_rows(forward_logits(policy, std::span<const TokenId>(e.tokens)));
    for (std::size_t i = e.prompt_length; i < e.tokens.size(); ++i) {
      nll -= static_cast<double>(logp(static_cast<Eigen::Index>(i - 1), e.tokens[i]));
      ++tokens;
    }
  }
  return {static_cast<double>(correct) / static_cast<double>(probe.size()),
          std::exp(nll / static_cast<double>(tokens))};
}

namespace {

nlohmann::json opt(const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); }

std::optional<double> opt_from(const nlohmann::json& j) {
  if (j.is_null()) return std::nullopt;
  return j.get<double>();
}

}  // namespace

nlohmann::json to_json(const MetricReport& report) {
  nlohmann::json splits = nlohmann::json::object();
  for (const auto& [name, m] : report.splits) {
    splits[name] = {{"count", m.count}, {"R", m.R},         {"CS", m.CS},         {"TE", m.TE},
                    {"ES", m.ES},       {"stepR", m.stepR}, {"stepCS", m.stepCS}, {"judge", m.judge}};
  }
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& s : report.records) {
    rows.push_back({{"id", s.id},
                    {"split", to_string(s.split)},
                    {"R", s.R},
                    {"CS", s.CS},
                    {"TE", s.TE},
                    {"ES", s.ES},
                    {"stepR", s.stepR},
                    {"stepCS", s.stepCS},
                    {"leakage", s.leakage},
                    {"es_fallback", s.es_fallback},
                    {"leakage_fallback", s.leakage_fallback}});
  }
  nlohmann::json probe = nullptr;
  if (report.probe) probe = {{"accuracy", report.probe->accuracy}, {"perplexity", report.probe->perplexity}};
  return {{"MU", opt(report.MU)},
          {"AFE", opt(report.AFE)},
          {"CFE", opt(report.CFE)},
          {"splits", splits},
          {"records", rows},
          {"gaps", report.gaps},
          {"judge_fallbacks", report.judge_fallbacks},
          {"probe", probe},
          {"metric_notes",
           {"CS is a bag-of-token cosine", "ES is a fact-containment oracle unless a judge is configured",
            "real-authors and world-facts are synthetic analog splits"}}};
}

MetricReport report_from_json(const nlohmann::json& j) {
  MetricReport r;
  r.MU = opt_from(j.at("MU"));
  r.AFE = opt_from(j.at("AFE"));
  r.CFE = opt_from(j.at("CFE"));
  for (const auto& [name, m] : j.at("splits").items()) {
    r.splits[name] = {m.at("count").get<int>(),   m.at("R").get<double>(),     m.at("CS").get<double>(),
                      m.at("TE").get<double>(),   m.at("ES").get<double>(),    m.at("stepR").get<double>(),
                      m.at("stepCS").get<double>(), m.at("judge").get<double>()};
  }
  for (const auto& row : j.at("records")) {
    RecordScores s;
    s.id = row.at("id").get<std::string>();
    s.split = split_from_string(row.at("split").get<std::string>());
    s.R = row.at("R").get<double>();
    s.CS = row.at("CS").get<double>();
    s.TE = row.at("TE").get<double>();
    s.ES = row.at("ES").get<double>();
    s.stepR = row.at("stepR").get<double>();
    s.stepCS = row.at("stepCS").get<double>();
    s.leakage = row.at("leakage").get<double>();
    s.es_fallback = row.at("es_fallback").get<bool>();
    s.leakage_fallback = row.at("leakage_fallback").get<bool>();
    r.records.push_back(std::move(s));
  }
  r.gaps = j.at("gaps").get<std::vector<std::string>>();
  r.judge_fallbacks = j.at("judge_fallbacks").get<int>();
  if (!j.at("probe").is_null()) {
    r.probe = ProbeResult{j["probe"].at("accuracy").get<double>(), j["probe"].at("perplexity").get<double>()};
  }
  return r;
}

}  // namespace unlearn
