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

// Acceptance suite: one PASS/FAIL line per criterion, tolerances pinned
// below. Exit status is nonzero when any criterion fails.

#include <CLI11.hpp>
#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>

#include "gradcheck.hpp"
#include "unlearn/counterfactual.hpp"
#include "unlearn/evaluation.hpp"
#include "unlearn/pipeline.hpp"
#include "unlearn/prompts.hpp"
#include "unlearn/text_metrics.hpp"
#include "unlearn/trainer.hpp"
// After the Eigen headers: <resolv.h> defines a _res macro.
#include "mock_judge.hpp"

namespace fs = std::filesystem;
using namespace unlearn;
using unlearn::testing::LossFixture;

namespace {

// Pinned tolerances.
constexpr double kGradRelTol = 1e-4;
constexpr double kGradBudgetSeconds = 120.0;
constexpr double kFixedPointTol = 1e-9;
constexpr double kMetricTol = 1e-9;
constexpr double kForgetGain = 0.3;
constexpr double kRetainRougeDrop = 0.1;
constexpr double kProbePplRise = 0.25;
constexpr double kGaRetainCeiling = 0.2;
constexpr int kSeeds = 3;

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Options {
  std::set<int> only;
  fs::path source_dir;
  fs::path cli;
  fs::path work_dir;
  fs::path json_out;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

// ---------------------------------------------------------------------------
// 1. Gradient suite

Outcome gradient_suite() {
  const auto t0 = std::chrono::steady_clock::now();
  LossFixture f;
  const std::span<const SequencePair> forget(f.forget), retain(f.retain);
  const std::span<const PreferencePair> pairs(f.pairs);
  const std::span<const RepresentationSample> rf(f.reps_forget), rr(f.reps_retain), cf(f.cot_forget),
      cr(f.cot_retain);
  ObjectiveConfig r2;
  r2.rmu_scale = 2.0;
  r2.rmu_lambda = 0.6;
  r2.alpha_unthink = 0.7;
  r2.beta_cot = 1.3;
  ObjectiveConfig cipo;
  cipo.warmup_T = 3;
  cipo.total_E = 5;
  ObjectiveConfig cipo_kl = cipo;
  cipo_kl.retain_loss = RetainLoss::kKl;

  using Fn = testing::LossFn;
  const std::vector<std::pair<std::string, Fn>> losses = {
      {"nll", [&](const Policy<double>& p) { return nll_loss(p, forget); }},
      {"ga_gd", [&](const Policy<double>& p) { return gd_loss(p, forget, retain, 0.7); }},
      {"kl_retain", [&](const Policy<double>& p) { return kl_retain_loss(p, f.reference, retain); }},
      {"dpo", [&](const Policy<double>& p) { return dpo_loss(p, f.reference, pairs, 1.5); }},
      {"npo", [&](const Policy<double>& p) { return npo_loss(p, f.reference, forget, 0.8); }},
      {"rmu", [&](const Policy<double>& p) { return rmu_loss(p, f.reference, rf, rr, f.state, 2.0, 0.6); }},
      {"unthink", [&](const Policy<double>& p) { return unthink_loss(p, cf, f.state, 2.0); }},
      {"r2mu", [&](const Policy<double>& p) { return r2mu_loss(p, f.reference, rf, rr, cf, cr, f.state, r2); }},
      {"idk", [&](const Policy<double>& p) { return idk_loss(p, forget, retain, 0.9); }},
      {"simpo", [&](const Policy<double>& p) { return simpo_loss(p, pairs, 2.0, 0.5); }},
      {"cipo", [&](const Policy<double>& p) { return cipo_loss(p, pairs, forget, retain, 4, cipo); }},
      {"cipo_kl", [&](const Policy<double>& p) { return cipo_loss(p, pairs, forget, retain, 4, cipo_kl, &f.reference); }},
  };
  double worst = 0.0;
  std::string worst_name;
  bool ok = true;
  for (const auto& [name, fn] : losses) {
    const auto g = testing::check_gradient(f.policy, fn, 1e-5, 1);
    if (g.rel_error > worst) {
      worst = g.rel_error;
      worst_name = name;
    }
    ok = ok && g.rel_error <= kGradRelTol && g.analytic_norm > 0.0;
  }
  const double secs = seconds_since(t0);
  ok = ok && secs < kGradBudgetSeconds;
  return {ok, fmt::format("{} losses, every coordinate, V={} d_model={} layers={}; worst rel error {:.2e} ({}); {:.1f} s",
                          losses.size(), f.config.vocab_size, f.config.d_model, f.config.n_layers, worst, worst_name,
                          secs)};
}

// ---------------------------------------------------------------------------
// 2. Fixed points

Outcome fixed_points() {
  LossFixture f;
  const auto same = snapshot_frozen(f.policy);
  const std::span<const SequencePair> forget(f.forget), retain(f.retain);
  const std::span<const PreferencePair> pairs(f.pairs);
  std::vector<PreferencePair> mirrored = f.pairs;
  for (auto& p : mirrored) p.dispreferred = p.preferred;
  double worst = 0.0;
  for (double beta : {0.1, 0.5, 1.0, 2.5, 10.0}) {
    worst = std::max(worst, std::abs(dpo_loss(f.policy, same, pairs, beta).value - std::log(2.0) / beta));
    worst = std::max(worst, std::abs(npo_loss(f.policy, same, forget, beta).value - 2.0 * std::log(2.0) / beta));
    worst = std::max(worst, std::abs(simpo_loss(f.policy, std::span<const PreferencePair>(mirrored), beta, 0.0).value -
                                     std::log(2.0)));
  }
  worst = std::max(worst, std::abs(kl_retain_loss(f.policy, same, retain).value));
  return {worst <= kFixedPointTol, fmt::format("DPO, NPO, SimPO over 5 betas and KL at identity; max deviation {:.1e}", worst)};
}

// ---------------------------------------------------------------------------
// 3. Metric oracles

// Longest common subsequence by enumerating every subsequence of `a`.
std::size_t brute_lcs(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  std::size_t best = 0;
  const std::size_t n = a.size();
  for (std::size_t mask = 0; mask < (std::size_t{1} << n); ++mask) {
    std::size_t len = 0, j = 0;
    bool sub = true;
    for (std::size_t i = 0; i < n && sub; ++i) {
      if (!(mask >> i & 1U)) continue;
      ++len;
      while (j < b.size() && b[j] != a[i]) ++j;
      if (j == b.size()) sub = false;
      else ++j;
    }
    if (sub) best = std::max(best, len);
  }
  return best;
}

Outcome metric_oracles() {
  std::mt19937_64 rng(20260101);
  const std::vector<std::string> alphabet = {"a", "b", "c", "d", "e"};
  int mismatches = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    auto draw = [&](std::size_t lo) {
      std::vector<std::string> w(lo + rng() % (9 - lo));
      for (auto& x : w) x = alphabet[rng() % alphabet.size()];
      return w;
    };
    const auto gen = draw(0);
    const auto ref = draw(1);
    auto join = [](const std::vector<std::string>& w) {
      std::string s;
      for (const auto& x : w) s += (s.empty() ? "" : " ") + x;
      return s;
    };
    const double expected = static_cast<double>(brute_lcs(gen, ref)) / static_cast<double>(ref.size());
    if (rouge_l_recall(join(gen), join(ref)) != expected) ++mismatches;
  }
  const double te_expected = (-(1.0 / 3.0) * std::log(1.0 / 3.0) - (2.0 / 3.0) * std::log(2.0 / 3.0)) / std::log(6.0);
  const std::vector<std::pair<double, double>> hand = {
      {harmonic_mean(std::vector<double>{0.5, 0.5}), 0.5},
      {harmonic_mean(std::vector<double>{1.0, 0.0}), 0.0},
      {harmonic_mean(std::vector<double>{0.2, 0.8}), 2.0 / 6.25},
      {token_entropy("a a a a"), 0.0},
      {token_entropy("a b c d"), 1.0},
      {token_entropy("a a b b b b"), te_expected},
      {cosine_similarity("a b", "a c"), 0.5},
      {cosine_similarity("x y", "x y"), 1.0},
      {cosine_similarity("x y", "p q"), 0.0},
      {rouge_l_recall("a c", "a b c"), 2.0 / 3.0},
  };
  double worst = 0.0;
  for (const auto& [got, want] : hand) worst = std::max(worst, std::abs(got - want));
  const bool pinned = std::abs(te_expected - 0.3552) < 1e-4;
  return {mismatches == 0 && worst <= kMetricTol && pinned,
          fmt::format("ROUGE-L vs brute-force LCS: {} mismatches in 1000; hand examples max error {:.1e}", mismatches,
                      worst)};
}

// ---------------------------------------------------------------------------
// 4. Counterfactual independence

/// Stands in for a chat model. The first answer for each question repeats
/// the gold answer; later ones swap every fact. One question always leaks.
class MockCounterfactualModel final : public CompletionBackend {
 public:
  MockCounterfactualModel(std::span<const QARecord> records, ValuePools pools, std::string stubborn)
      : pools_(std::move(pools)), stubborn_(std::move(stubborn)) {
    for (const auto& r : records) by_question_[r.question] = &r;
  }

  std::string complete(const std::string& prompt, std::uint64_t) override {
    ++calls_;
    const QARecord* r = nullptr;
    for (const auto& [q, rec] : by_question_) {
      if (prompt.find(q) != std::string::npos) r = rec;
    }
    if (r == nullptr) return "";
    const bool answer_prompt = prompt.find("\nOriginal Answer: ") != std::string::npos;
    if (answer_prompt) {
      const int n = ++attempts_[r->id];
      if (n == 1 || r->id == stubborn_) return "New answer: " + r->answer;
      swaps_[r->id] = oracle_swap(*r, pools_, 1000 + static_cast<std::uint64_t>(n));
      return "New answer: " + counterfactual_answer(*r, swaps_[r->id]);
    }
    const auto it = swaps_.find(r->id);
    if (it == swaps_.end()) return "<think>" + r->answer + " .</think>";
    std::string cot;
    for (const auto& s : backward_reasoning_cot(*r, it->second, 77)) cot += s + "\n\n";
    return "<think>\n" + cot + "</think>";
  }

  int calls() const { return calls_; }

 private:
  ValuePools pools_;
  std::string stubborn_;
  std::map<std::string, const QARecord*> by_question_;
  std::map<std::string, int> attempts_;
  std::map<std::string, std::map<std::string, std::string>> swaps_;
  int calls_ = 0;
};

Outcome counterfactual_independence() {
  const auto corpus = generate_corpus(7, 20, 2, default_value_pools());
  const auto& forget = corpus.records;
  CounterfactualOptions o;
  o.pools = corpus.value_pools;
  o.seed = 11;
  const auto oracle = build_counterfactual_set(forget, o);
  int oracle_pass = 0;
  for (std::size_t i = 0; i < forget.size(); ++i) oracle_pass += validate_counterfactual(forget[i], oracle[i]) ? 1 : 0;

  MockCounterfactualModel model(forget, corpus.value_pools, forget.front().id);
  CounterfactualOptions m = o;
  m.mode = Provenance::kModelAssisted;
  m.backend = &model;
  m.retries = 3;
  const auto assisted = build_counterfactual_set(forget, m);
  int model_pass = 0, from_model = 0, fallbacks = 0;
  for (std::size_t i = 0; i < forget.size(); ++i) {
    model_pass += validate_counterfactual(forget[i], assisted[i]) ? 1 : 0;
    from_model += assisted[i].fallback ? 0 : 1;
    fallbacks += assisted[i].fallback ? 1 : 0;
  }
  // Every question leaks on its first try, so the retry path runs for all.
  const bool retried = model.calls() > static_cast<int>(forget.size());
  const bool ok = forget.size() == 40 && oracle_pass == 40 && model_pass == 40 && retried && fallbacks >= 1 &&
                  from_model >= 1;
  return {ok, fmt::format("oracle {}/{} valid; model-assisted {}/{} valid ({} from the mock model after retry, {} "
                          "oracle fallbacks, {} backend calls)",
                          oracle_pass, forget.size(), model_pass, forget.size(), from_model, fallbacks, model.calls())};
}

// ---------------------------------------------------------------------------
// Toy benchmark shared by criteria 5 to 8

class ToyBench {
 public:
  explicit ToyBench(const fs::path& config_path) : config_(ExperimentConfig::load(config_path)) {
    bundle_ = build_corpus(config_);
    ModelConfig mc = config_.model;
    mc.vocab_size = static_cast<int>(bundle_.vocab.size());
    const auto t0 = std::chrono::steady_clock::now();
    target_ = train_target(bundle_.training_records(), bundle_.vocab, mc, config_.target, &target_report_);
    target_seconds_ = seconds_since(t0);
    eval_records_ = bundle_.evaluation_records();
    pre_ = generate_dump(target_, eval_records_, bundle_.vocab, config_.max_new);
    target_metrics_ = score(target_, pre_);

    data_.vocab = &bundle_.vocab;
    data_.forget = bundle_.corpus.forget_records();
    data_.retain = bundle_.corpus.retain_records();
    CounterfactualOptions co;
    co.pools = bundle_.corpus.value_pools;
    co.seed = mix_seed(config_.seed, "counterfactual");
    co.vocab = &bundle_.vocab;
    data_.counterfactuals = build_counterfactual_set(data_.forget, co);
  }

  TrainerConfig method(Method m) const {
    for (const auto& spec : config_.methods) {
      if (spec.trainer.method == m) {
        auto t = spec.trainer;
        t.learning_rate = spec.learning_rates.front();
        return t;
      }
    }
    throw std::runtime_error("acceptance config lacks " + std::string(to_string(m)));
  }

  struct Result {
    MetricReport metrics;
    RunArtifacts artifacts;
  };

  Result run(const TrainerConfig& t) {
    auto arts = run_unlearning(target_, data_, t);
    const auto dump = generate_dump(arts.policy, eval_records_, bundle_.vocab, config_.max_new, &pre_);
    return {score(arts.policy, dump), std::move(arts)};
  }

  const MetricReport& target_metrics() const { return target_metrics_; }
  double target_memorization() const { return target_report_.memorization; }
  double target_seconds() const { return target_seconds_; }

 private:
  MetricReport score(const TrainPolicy& p, const GenerationDump& dump) {
    OfflineJudge judge;
    auto rep = aggregate(dump, judge);
    rep.probe = general_ability_probe(p, bundle_.probe.eval, bundle_.vocab);
    return rep;
  }

  ExperimentConfig config_;
  CorpusBundle bundle_;
  TrainPolicy target_;
  TargetReport target_report_;
  double target_seconds_ = 0.0;
  std::vector<QARecord> eval_records_;
  GenerationDump pre_;
  MetricReport target_metrics_;
  UnlearningData data_;
};

std::string fmt_report(const MetricReport& m) {
  return fmt::format("MU {:.4f} AFE {:.4f} CFE {:.4f} retain-R {:.4f} ppl {:.4f}", m.MU.value_or(-1),
                     m.AFE.value_or(-1), m.CFE.value_or(-1), m.splits.at("retain").R, m.probe->perplexity);
}

struct Ablation {
  std::string name;
  std::function<void(TrainerConfig&)> apply;
};

const std::vector<Ablation>& ablations() {
  static const std::vector<Ablation> a = {
      {"full", [](TrainerConfig&) {}},
      {"w/o Warmup", [](TrainerConfig& t) { t.warmup = 0; }},
      {"w/o SimPO", [](TrainerConfig& t) { t.warmup = t.epochs; }},
      {"w/o NLL", [](TrainerConfig& t) { t.objective.alpha_nll = 0.0; }},
      {"w/o Iterative", [](TrainerConfig& t) { t.iterative = false; }},
  };
  return a;
}

struct ToyResults {
  MetricReport target;
  // variant name -> per seed
  std::map<std::string, std::vector<MetricReport>> variants;
  MetricReport ga;
  std::vector<std::optional<double>> long_margins;
  std::string log;
};

ToyResults run_toy(const fs::path& config_path, const std::set<int>& wanted) {
  ToyResults out;
  ToyBench bench(config_path);
  out.target = bench.target_metrics();
  out.log += fmt::format("  target: memorization {:.3f}, {:.0f} s, {}\n", bench.target_memorization(),
                         bench.target_seconds(), fmt_report(out.target));
  const auto base = bench.method(Method::kCiPO);
  const bool need_ablations = wanted.count(6) || wanted.count(8);
  for (int s = 1; s <= kSeeds; ++s) {
    for (const auto& a : ablations()) {
      if (!need_ablations && !(a.name == "full" && s == 1)) continue;
      if (!wanted.count(6) && a.name != "full" && a.name != "w/o Warmup") continue;
      auto t = base;
      t.seed = static_cast<std::uint64_t>(s);
      a.apply(t);
      auto r = bench.run(t);
      out.log += fmt::format("  seed {} {:14s} {}\n", s, a.name, fmt_report(r.metrics));
      out.variants[a.name].push_back(std::move(r.metrics));
    }
  }
  if (wanted.count(5)) {
    auto ga = bench.method(Method::kGA);
    ga.seed = 1;
    out.ga = bench.run(ga).metrics;
    out.log += fmt::format("  seed 1 {:14s} {}\n", "GA", fmt_report(out.ga));
  }
  if (wanted.count(7)) {
    auto t = base;
    t.seed = 1;
    t.warmup = 3;
    t.epochs = 8;
    auto r = bench.run(t);
    out.long_margins = r.artifacts.margin_trace;
    out.log += fmt::format("  seed 1 CiPO T=3 E=8   {}\n", fmt_report(r.metrics));
  }
  return out;
}

Outcome toy_reproduction(const ToyResults& r) {
  const auto& t = r.target;
  const auto& c = r.variants.at("full").front();
  const double d_afe = *c.AFE - *t.AFE;
  const double d_cfe = *c.CFE - *t.CFE;
  const double drop = t.splits.at("retain").R - c.splits.at("retain").R;
  const double rise = c.probe->perplexity / t.probe->perplexity - 1.0;
  const double ga_r = r.ga.splits.at("retain").R;
  const bool ok = d_afe >= kForgetGain && d_cfe >= kForgetGain && drop <= kRetainRougeDrop && rise <= kProbePplRise &&
                  ga_r < kGaRetainCeiling;
  return {ok, fmt::format("CiPO: dAFE {:+.4f}, dCFE {:+.4f} (need >= {}), retain-R drop {:.4f} (<= {}), probe ppl "
                          "{:+.1f}% (<= {:.0f}%); GA retain-R {:.4f} (< {})",
                          d_afe, d_cfe, kForgetGain, drop, kRetainRougeDrop, 100 * rise, 100 * kProbePplRise, ga_r,
                          kGaRetainCeiling)};
}

Outcome ablation_ordering(const ToyResults& r) {
  const auto& full = r.variants.at("full");
  bool ok = true;
  std::string detail;
  for (const auto& a : ablations()) {
    if (a.name == "full") continue;
    const auto& v = r.variants.at(a.name);
    int wins = 0;
    for (int s = 0; s < kSeeds; ++s) wins += *full[s].MU >= *v[s].MU ? 1 : 0;
    ok = ok && wins >= 2;
    detail += fmt::format("MU >= {} on {}/{}; ", a.name, wins, kSeeds);
  }
  const auto& fixed = r.variants.at("w/o Iterative");
  int lower = 0;
  for (int s = 0; s < kSeeds; ++s) lower += *fixed[s].AFE < *full[s].AFE ? 1 : 0;
  ok = ok && lower >= 2;
  detail += fmt::format("w/o Iterative AFE strictly lower on {}/{}", lower, kSeeds);
  return {ok, detail};
}

Outcome margin_property(const ToyResults& r) {
  std::vector<double> post;
  for (const auto& m : r.long_margins) {
    if (m) post.push_back(*m);
  }
  if (post.size() < 5) return {false, fmt::format("only {} post-warmup margins recorded", post.size())};
  int best = 0;
  for (std::size_t start = 0; start + 4 < post.size(); ++start) {
    int up = 0;
    for (std::size_t i = start; i < start + 4; ++i) up += post[i + 1] >= post[i] ? 1 : 0;
    best = std::max(best, up);
  }
  std::string trace;
  for (double m : post) trace += fmt::format(" {:.4f}", m);
  return {best >= 3, fmt::format("post-warmup margins{}; {} of 4 consecutive steps non-decreasing", trace, best)};
}

Outcome warmup_necessity(const ToyResults& r) {
  const auto& full = r.variants.at("full");
  const auto& cold = r.variants.at("w/o Warmup");
  int wins = 0;
  std::string detail;
  for (int s = 0; s < kSeeds; ++s) {
    wins += *full[s].MU > *cold[s].MU ? 1 : 0;
    detail += fmt::format("seed {}: T=3 {:.4f} vs T=0 {:.4f}; ", s + 1, *full[s].MU, *cold[s].MU);
  }
  return {wins >= 2, detail + fmt::format("T=3 strictly higher on {}/{}", wins, kSeeds)};
}

// ---------------------------------------------------------------------------
// 9. Determinism

Outcome determinism(const Options& o) {
  const fs::path root = o.work_dir / "determinism";
  fs::remove_all(root);
  auto doc = nlohmann::json::parse(slurp(o.source_dir / "configs" / "toy.json"));
  std::vector<std::map<std::string, std::string>> reports;
  for (int pass = 0; pass < 2; ++pass) {
    const fs::path dir = root / ("pass" + std::to_string(pass));
    fs::create_directories(dir);
    doc["output_dir"] = (dir / "out").string();
    std::ofstream(dir / "config.json") << doc.dump(2);
    const std::string cmd = fmt::format("\"{}\" run-all --config \"{}\" --log-level off > \"{}\" 2>&1", o.cli.string(),
                                        (dir / "config.json").string(), (dir / "stdout.txt").string());
    if (std::system(cmd.c_str()) != 0) return {false, "run-all failed, see " + (dir / "stdout.txt").string()};
    std::map<std::string, std::string> files;
    for (const auto& e : fs::recursive_directory_iterator(dir / "out")) {
      if (e.path().filename() == "metrics.json") {
        files[fs::relative(e.path(), dir / "out").string()] = slurp(e.path());
      }
    }
    reports.push_back(std::move(files));
  }
  const bool same = !reports[0].empty() && reports[0] == reports[1];
  fs::remove_all(root);
  return {same, fmt::format("{} MetricReport files per run, byte-identical: {}", reports[0].size(), same ? "yes" : "no")};
}

// ---------------------------------------------------------------------------
// 10. Judge client contract

Outcome judge_contract(const Options& o) {
  const std::string question = "Which award did Lena Varga receive ?";
  const std::map<std::string, std::string> facts = {{"award", "Golden Lantern Award"}};
  bool malformed_phase = false;
  testing::MockJudgeServer server([&](const std::string& body, int) {
    if (malformed_phase) return testing::MockReply{200, R"({"response":"the score is high"})"};
    const auto prompt = nlohmann::json::parse(body).at("prompt").get<std::string>();
    return prompt.find("Forgotten Knowledge") != std::string::npos
               ? testing::MockReply{200, R"({"response":"0.00"})"}
               : testing::MockReply{200, R"({"response":"{\"label\":\"incorrect\",\"score\":0,\"reason\":\"x\"}"})"};
  });
  JudgeConfig c;
  c.enabled = true;
  c.endpoint = server.endpoint();
  c.model = "mock-judge";
  c.retries = 2;
  c.timeout_seconds = 2.0;
  c.backoff_seconds = 0.001;
  HttpJudge judge(c);
  const auto a = judge.answer_correctness(question, "Golden Lantern Award", "Silver Quill Prize", facts);
  const auto l = judge.cot_leakage(question, "Golden Lantern Award", "Lena Varga writes poetry .\n\nShe won a prize .", facts);
  auto bodies = server.bodies();
  auto golden = [&](const std::string& name) {
    return nlohmann::json::parse(slurp(o.source_dir / "tests" / "fixtures" / name));
  };
  const bool match = bodies.size() == 2 && nlohmann::json::parse(bodies[0]) == golden("judge_answer_request.json") &&
                     nlohmann::json::parse(bodies[1]) == golden("judge_leakage_request.json");
  malformed_phase = true;
  const auto fa = judge.answer_correctness(question, "Golden Lantern Award", "the Golden Lantern Award", facts);
  const auto fl = judge.cot_leakage(question, "Golden Lantern Award", "She won the Golden Lantern Award .", facts);
  const std::size_t calls = server.bodies().size();
  const bool fallback = fa.fallback && fa.value == 1.0 && fl.fallback && fl.value == 1.0 && calls == 2 + 2 * 3;
  const bool online_ok = !a.fallback && !l.fallback;
  // Every shipped config keeps the judge disabled and on loopback.
  bool offline_configs = true;
  for (const auto& e : fs::directory_iterator(o.source_dir / "configs")) {
    const auto cfg = ExperimentConfig::load(e.path());
    offline_configs = offline_configs && !cfg.judge.enabled && cfg.judge.endpoint.rfind("http://127.0.0.1", 0) == 0;
  }
  return {match && fallback && online_ok && offline_configs,
          fmt::format("golden request match: {}; malformed replies retried and flagged fallback: {}; shipped configs "
                      "offline: {}",
                      match ? "yes" : "no", fallback ? "yes" : "no", offline_configs ? "yes" : "no")};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance criteria 1 to 10"};
  Options o;
  std::vector<int> only;
  app.add_option("--only", only, "Criteria to run (default: all)");
  app.add_option("--source-dir", o.source_dir, "Repository root")->required()->check(CLI::ExistingDirectory);
  app.add_option("--cli", o.cli, "Path to the unlearn executable")->required()->check(CLI::ExistingFile);
  app.add_option("--work-dir", o.work_dir, "Scratch directory")->required();
  app.add_option("--json-out", o.json_out, "Write the outcomes as JSON");
  CLI11_PARSE(app, argc, argv);
  spdlog::set_level(spdlog::level::err);
  o.only = only.empty() ? std::set<int>{1, 2, 3, 4, 5, 6, 7, 8, 9, 10} : std::set<int>(only.begin(), only.end());
  fs::create_directories(o.work_dir);

  std::map<int, Outcome> results;
  const std::map<int, std::string> names = {
      {1, "gradient suite"},          {2, "fixed-point identities"}, {3, "metric oracles"},
      {4, "counterfactual independence"}, {5, "toy qualitative reproduction"}, {6, "ablation ordering"},
      {7, "iterative margin"},        {8, "warmup necessity"},     {9, "determinism"},
      {10, "judge client contract"}};
  auto record = [&](int id, const std::function<Outcome()>& fn) {
    if (!o.only.count(id)) return;
    Outcome r;
    try {
      r = fn();
    } catch (const std::exception& e) {
      r = {false, std::string("threw: ") + e.what()};
    }
    results[id] = r;
    std::cout << fmt::format("criterion {:2d} {} [{}] {}", id, r.pass ? "PASS" : "FAIL", names.at(id), r.detail)
              << std::endl;
  };

  record(1, gradient_suite);
  record(2, fixed_points);
  record(3, metric_oracles);
  record(4, counterfactual_independence);
  std::set<int> toy;
  for (int id : {5, 6, 7, 8}) {
    if (o.only.count(id)) toy.insert(id);
  }
  if (!toy.empty()) {
    std::optional<ToyResults> r;
    std::string failure;
    try {
      r = run_toy(o.source_dir / "configs" / "acceptance.json", toy);
      std::cout << r->log << std::flush;
    } catch (const std::exception& e) {
      failure = e.what();
    }
    auto guarded = [&](Outcome (*fn)(const ToyResults&)) {
      return [&, fn] { return r ? fn(*r) : Outcome{false, "toy run failed: " + failure}; };
    };
    record(5, guarded(toy_reproduction));
    record(6, guarded(ablation_ordering));
    record(7, guarded(margin_property));
    record(8, guarded(warmup_necessity));
  }
  record(9, [&] { return determinism(o); });
  record(10, [&] { return judge_contract(o); });

  int failed = 0;
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [id, r] : results) {
    failed += r.pass ? 0 : 1;
    j[std::to_string(id)] = {{"name", names.at(id)}, {"pass", r.pass}, {"detail", r.detail}};
  }
  if (!o.json_out.empty()) std::ofstream(o.json_out) << j.dump(2) << '\n';
  std::cout << fmt::format("{} of {} criteria passed", results.size() - failed, results.size()) << std::endl;
  return failed == 0 ? 0 : 1;
}
