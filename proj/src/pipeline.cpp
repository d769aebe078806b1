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

#include "unlearn/pipeline.hpp"

#include <spdlog/spdlog.h>

#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "unlearn/checkpoint.hpp"
#include "unlearn/errors.hpp"
#include "unlearn/random.hpp"
#include "unlearn/report.hpp"
#include "unlearn/text_metrics.hpp"

namespace fs = std::filesystem;

namespace unlearn {

namespace {

constexpr std::pair<Stage, std::string_view> kStageNames[] = {
    {Stage::kGenCorpus, "gen-corpus"}, {Stage::kTrainTarget, "train-target"},
    {Stage::kUnlearn, "unlearn"},      {Stage::kGenerate, "generate"},
    {Stage::kEval, "eval"},            {Stage::kReport, "report"},
};

nlohmann::json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open " + path.string());
  return nlohmann::json::parse(in);
}

void write_text(const fs::path& path, const std::string& text) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw FormatError("cannot write " + tmp.string());
    out << text;
  }
  fs::rename(tmp, path);
}

void write_json(const fs::path& path, const nlohmann::json& j) { write_text(path, j.dump(2) + "\n"); }

/// Builds a directory under a temporary name and renames it into place,
/// so a failed stage never leaves a half-written directory behind.
template <typename Fill>
void build_directory(const fs::path& dir, Fill&& fill) {
  const fs::path tmp = dir.string() + ".partial";
  fs::remove_all(tmp);
  fs::create_directories(tmp);
  fill(tmp);
  fs::remove_all(dir);
  fs::rename(tmp, dir);
}

std::string slug(std::string_view label) {
  std::string out;
  for (char c : label) {
    if (std::isalnum(static_cast<unsigned char>(c))) out += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    else if (!out.empty() && out.back() != '-') out += '-';
  }
  while (!out.empty() && out.back() == '-') out.pop_back();
  return out;
}

template <typename T>
T get_as(const nlohmann::json& j, const char* what) {
  try {
    return j.get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string(what) + ": " + e.what());
  }
}

CorpusParams parse_corpus(const nlohmann::json& j) {
  CorpusParams p;
  for (const auto& [key, value] : j.items()) {
    if (key == "n_entities") p.n_entities = get_as<int>(value, "corpus.n_entities");
    else if (key == "slots_per_entity") p.slots_per_entity = get_as<int>(value, "corpus.slots_per_entity");
    else if (key == "real_authors") p.real_authors = get_as<int>(value, "corpus.real_authors");
    else if (key == "world_facts") p.world_facts = get_as<int>(value, "corpus.world_facts");
    else if (key == "probe_train") p.probe_train = get_as<int>(value, "corpus.probe_train");
    else if (key == "probe_eval") p.probe_eval = get_as<int>(value, "corpus.probe_eval");
    else throw ConfigError("unknown corpus key '" + key + "'");
  }
  return p;
}

nlohmann::json corpus_json(const CorpusParams& p) {
  return {{"n_entities", p.n_entities}, {"slots_per_entity", p.slots_per_entity},
          {"real_authors", p.real_authors}, {"world_facts", p.world_facts},
          {"probe_train", p.probe_train}, {"probe_eval", p.probe_eval}};
}

std::unique_ptr<Judge> make_judge(const JudgeConfig& config) {
  const JudgeConfig c = config.with_environment();
  if (!c.enabled) return std::make_unique<OfflineJudge>();
  return std::make_unique<HttpJudge>(c);
}

}  // namespace

std::string_view to_string(Stage stage) {
  for (const auto& [s, name] : kStageNames) {
    if (s == stage) return name;
  }
  return "unknown";
}

std::string content_id(const nlohmann::json& j) { return fmt::format("{:016x}", fnv1a(j.dump())); }

// ---------------------------------------------------------------------------
// Configuration

ExperimentConfig ExperimentConfig::parse(std::string_view text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw ConfigError("config must be a JSON object");

  ExperimentConfig c;
  c.source = doc;
  c.source_text = std::string(text);
  nlohmann::json objective = nlohmann::json::object();
  if (doc.contains("objective")) objective = doc["objective"];
  if (!objective.is_object()) throw ConfigError("objective must be an object");
  const nlohmann::json* methods = nullptr;
  const nlohmann::json* target = nullptr;

  for (const auto& [key, value] : doc.items()) {
    if (key == "seed") c.seed = get_as<std::uint64_t>(value, "seed");
    else if (key == "output_dir") c.output_dir = get_as<std::string>(value, "output_dir");
    else if (key == "corpus") c.corpus = parse_corpus(value);
    else if (key == "forget_ratio") c.forget_ratio = get_as<double>(value, "forget_ratio");
    else if (key == "model") c.model = get_as<ModelConfig>(value, "model");
    else if (key == "target") target = &value;
    else if (key == "objective") continue;
    else if (key == "counterfactual") {
      for (const auto& [k, v] : value.items()) {
        if (k == "mode") {
          const auto m = get_as<std::string>(v, "counterfactual.mode");
          if (m == "oracle") c.counterfactual.mode = Provenance::kOracle;
          else if (m == "model-assisted") c.counterfactual.mode = Provenance::kModelAssisted;
          else throw ConfigError("counterfactual.mode must be \"oracle\" or \"model-assisted\"");
        } else if (k == "retries") {
          c.counterfactual.retries = get_as<int>(v, "counterfactual.retries");
        } else {
          throw ConfigError("unknown counterfactual key '" + k + "'");
        }
      }
    } else if (key == "judge") c.judge = get_as<JudgeConfig>(value, "judge");
    else if (key == "max_new") c.max_new = get_as<int>(value, "max_new");
    else if (key == "methods") methods = &value;
    else throw ConfigError("unknown config key '" + key + "'");
  }

  nlohmann::json t = target != nullptr ? *target : nlohmann::json::object();
  if (!t.is_object()) throw ConfigError("target must be an object");
  if (t.contains("method") && t["method"] != "target-sft") throw ConfigError("target.method must be target-sft");
  t["method"] = "target-sft";
  if (!t.contains("seed")) t["seed"] = c.seed;
  c.target = get_as<TrainerConfig>(t, "target");

  if (methods == nullptr || !methods->is_array() || methods->empty()) {
    throw ConfigError("methods must be a non-empty array");
  }
  for (const auto& entry : *methods) {
    if (!entry.is_object()) throw ConfigError("each method entry must be an object");
    nlohmann::json trainer = entry;
    MethodSpec spec;
    if (entry.contains("label")) spec.label = get_as<std::string>(entry["label"], "label");
    if (entry.contains("learning_rates")) {
      spec.learning_rates = get_as<std::vector<double>>(entry["learning_rates"], "learning_rates");
    }
    trainer.erase("label");
    trainer.erase("learning_rates");
    nlohmann::json obj = objective;
    if (entry.contains("objective")) {
      if (!entry["objective"].is_object()) throw ConfigError("method objective must be an object");
      obj.update(entry["objective"]);
    }
    trainer["objective"] = obj;
    if (!trainer.contains("seed")) trainer["seed"] = c.seed;
    spec.trainer = get_as<TrainerConfig>(trainer, "method");
    if (spec.trainer.method == Method::kTargetSft) throw ConfigError("target-sft is not an unlearning method");
    if (spec.label.empty()) spec.label = std::string(to_string(spec.trainer.method));
    if (spec.learning_rates.empty()) spec.learning_rates = {spec.trainer.learning_rate};
    c.methods.push_back(std::move(spec));
  }
  c.validate();
  return c;
}

ExperimentConfig ExperimentConfig::load(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

ExperimentConfig ExperimentConfig::with_seed(std::uint64_t seed) const {
  nlohmann::json doc = source;
  doc["seed"] = seed;
  return parse(doc.dump());
}

void ExperimentConfig::validate() const {
  constexpr double kRatios[] = {0.01, 0.05, 0.10};
  if (std::none_of(std::begin(kRatios), std::end(kRatios),
                   [&](double r) { return std::abs(r - forget_ratio) < 1e-12; })) {
    throw ConfigError("forget_ratio must be one of 0.01, 0.05, 0.10");
  }
  for (int v : {corpus.n_entities, corpus.slots_per_entity, corpus.real_authors, corpus.world_facts,
                corpus.probe_train, corpus.probe_eval}) {
    if (v < 1) throw ConfigError("corpus sizes must be positive");
  }
  if (max_new < 1) throw ConfigError("max_new must be positive");
  if (counterfactual.retries < 0) throw ConfigError("counterfactual.retries must be nonnegative");
  if (output_dir.empty()) throw ConfigError("output_dir must not be empty");
  ModelConfig m = model;
  if (m.vocab_size == 0) m.vocab_size = special::kCount + 1;
  m.validate();
  target.validate();
  judge.validate();
  std::set<std::string> labels;
  for (const auto& spec : methods) {
    spec.trainer.validate();
    if (!labels.insert(spec.label).second) throw ConfigError("duplicate method label '" + spec.label + "'");
    for (double lr : spec.learning_rates) {
      if (!(lr > 0.0)) throw ConfigError("learning rates must be positive");
    }
  }
}

// ---------------------------------------------------------------------------
// Corpus bundle

std::vector<QARecord> CorpusBundle::training_records() const {
  std::vector<QARecord> all = corpus.records;
  all.insert(all.end(), real_authors.begin(), real_authors.end());
  all.insert(all.end(), world_facts.begin(), world_facts.end());
  all.insert(all.end(), probe.train.begin(), probe.train.end());
  return all;
}

std::vector<QARecord> CorpusBundle::evaluation_records() const {
  std::vector<QARecord> all = corpus.forget_records();
  const auto retain = corpus.retain_records();
  all.insert(all.end(), retain.begin(), retain.end());
  all.insert(all.end(), real_authors.begin(), real_authors.end());
  all.insert(all.end(), world_facts.begin(), world_facts.end());
  return all;
}

CorpusBundle build_corpus(const ExperimentConfig& config) {
  CorpusBundle b;
  const auto& p = config.corpus;
  const auto base = generate_corpus(mix_seed(config.seed, "corpus"), p.n_entities, p.slots_per_entity,
                                    default_value_pools());
  b.corpus = split_forget(base, config.forget_ratio, mix_seed(config.seed, "forget-split"));
  b.real_authors = generate_real_authors_analog(mix_seed(config.seed, "real-authors"), p.real_authors);
  b.world_facts = generate_world_facts_analog(mix_seed(config.seed, "world-facts"), p.world_facts);
  b.probe = generate_probe_set(mix_seed(config.seed, "probe"), p.probe_train, p.probe_eval);
  auto all = b.training_records();
  all.insert(all.end(), b.probe.eval.begin(), b.probe.eval.end());
  b.vocab = build_vocabulary(all, b.corpus.value_pools, counterfactual_lexicon());
  return b;
}

double validation_score(const GenerationDump& dump) {
  GenerationDump slice;
  std::map<Split, int> seen;
  for (const auto& g : dump) {
    if (g.split == Split::kForget || seen[g.split]++ % 2 == 0) slice.push_back(g);
  }
  OfflineJudge judge;
  const auto rep = aggregate(slice, judge);
  if (!rep.MU || !rep.AFE) return 0.0;
  return harmonic_mean(std::vector<double>{*rep.AFE, *rep.MU});
}

// ---------------------------------------------------------------------------
// Stages

Pipeline::Pipeline(ExperimentConfig config) : config_(std::move(config)) {
  config_.validate();
  corpus_id_ = content_id({{"seed", config_.seed},
                           {"corpus", corpus_json(config_.corpus)},
                           {"forget_ratio", config_.forget_ratio}});
  nlohmann::json target = config_.target;
  target_id_ = content_id({{"corpus", corpus_id_},
                           {"model", config_.model},
                           {"target", target},
                           {"counterfactual",
                            {{"mode", to_string(config_.counterfactual.mode)},
                             {"retries", config_.counterfactual.retries}}},
                           {"max_new", config_.max_new}});
}

fs::path Pipeline::corpus_dir() const { return config_.output_dir / ("corpus-" + corpus_id_); }
fs::path Pipeline::target_dir() const { return config_.output_dir / ("target-" + target_id_); }

fs::path Pipeline::run_dir(const MethodSpec& method, double learning_rate) const {
  TrainerConfig t = method.trainer;
  t.learning_rate = learning_rate;
  const nlohmann::json tj = t;
  const std::string id = content_id({{"target", target_id_}, {"label", method.label}, {"trainer", tj}});
  return config_.output_dir / "runs" / (slug(method.label) + "-" + id);
}

std::vector<RunEntry> Pipeline::entries() const {
  std::vector<RunEntry> out;
  for (const auto& m : config_.methods) {
    for (double lr : m.learning_rates) out.push_back({m.label, lr, run_dir(m, lr)});
  }
  return out;
}

fs::path Pipeline::corpus_stage() {
  const fs::path dir = corpus_dir();
  if (fs::exists(dir / "manifest.json")) {
    spdlog::info("corpus {} exists", dir.string());
    return dir;
  }
  try {
    const CorpusBundle b = build_corpus(config_);
    build_directory(dir, [&](const fs::path& tmp) {
      write_records_jsonl(tmp / "corpus.jsonl", b.corpus.records);
      write_records_jsonl(tmp / "real_authors.jsonl", b.real_authors);
      write_records_jsonl(tmp / "world_facts.jsonl", b.world_facts);
      write_records_jsonl(tmp / "probe_train.jsonl", b.probe.train);
      write_records_jsonl(tmp / "probe_eval.jsonl", b.probe.eval);
      b.vocab.save(tmp / "vocab.txt");
      write_json(tmp / "manifest.json", {{"id", corpus_id_},
                                         {"seed", config_.seed},
                                         {"corpus", corpus_json(config_.corpus)},
                                         {"forget_ratio", config_.forget_ratio},
                                         {"forget", b.corpus.forget_ids},
                                         {"vocab_size", b.vocab.size()}});
    });
    bundle_ = b;
  } catch (const std::exception& e) {
    throw StageFailure(Stage::kGenCorpus, e.what());
  }
  return dir;
}

const CorpusBundle& Pipeline::bundle() {
  if (bundle_) return *bundle_;
  const fs::path dir = corpus_stage();
  if (bundle_) return *bundle_;
  CorpusBundle b;
  b.corpus.records = read_records_jsonl(dir / "corpus.jsonl");
  b.corpus.value_pools = default_value_pools();
  for (const auto& r : b.corpus.records) (r.split == Split::kForget ? b.corpus.forget_ids : b.corpus.retain_ids).insert(r.id);
  b.real_authors = read_records_jsonl(dir / "real_authors.jsonl");
  b.world_facts = read_records_jsonl(dir / "world_facts.jsonl");
  b.probe.train = read_records_jsonl(dir / "probe_train.jsonl");
  b.probe.eval = read_records_jsonl(dir / "probe_eval.jsonl");
  b.vocab = Vocabulary::load(dir / "vocab.txt");
  bundle_ = std::move(b);
  return *bundle_;
}

fs::path Pipeline::target_stage() {
  const fs::path dir = target_dir();
  const auto& b = bundle();
  if (fs::exists(dir / "manifest.json")) {
    spdlog::info("target {} exists", dir.string());
    return dir;
  }
  try {
    ModelConfig mc = config_.model;
    mc.vocab_size = static_cast<int>(b.vocab.size());
    TargetReport report;
    const auto train = b.training_records();
    TrainPolicy policy;
    try {
      policy = train_target(train, b.vocab, mc, config_.target, &report);
    } catch (const TrainingFailure&) {
      fs::create_directories(config_.output_dir);
      write_json(config_.output_dir / "target_failure.json",
                 {{"target", target_id_}, {"loss_trace", report.loss_trace}, {"memorization", report.memorization}});
      throw;
    }
    const auto forget = b.corpus.forget_records();
    CounterfactualOptions co;
    co.mode = config_.counterfactual.mode;
    co.pools = b.corpus.value_pools;
    co.seed = mix_seed(config_.seed, "counterfactual");
    co.retries = config_.counterfactual.retries;
    co.vocab = &b.vocab;
    std::optional<PolicyBackend> backend;
    if (co.mode == Provenance::kModelAssisted) {
      backend.emplace(policy, b.vocab);
      co.backend = &*backend;
    }
    const auto dc = build_counterfactual_set(forget, co);
    build_directory(dir, [&](const fs::path& tmp) {
      save_checkpoint(policy, tmp / "target.ckpt");
      write_counterfactuals_jsonl(tmp / "counterfactuals.jsonl", dc);
      write_json(tmp / "manifest.json", {{"id", target_id_},
                                         {"corpus", corpus_id_},
                                         {"model", mc},
                                         {"trainer", nlohmann::json(config_.target)},
                                         {"loss_trace", report.loss_trace},
                                         {"memorization", report.memorization},
                                         {"counterfactual_hash", fmt::format("{:016x}", hash_counterfactual_set(dc))}});
    });
    target_ = std::move(policy);
  } catch (const StageFailure&) {
    throw;
  } catch (const std::exception& e) {
    throw StageFailure(Stage::kTrainTarget, e.what());
  }
  return dir;
}

const TrainPolicy& Pipeline::target() {
  if (target_) return *target_;
  const fs::path dir = target_stage();
  if (!target_) target_ = load_checkpoint<float>(dir / "target.ckpt", nullptr);
  return *target_;
}

std::vector<RunEntry> Pipeline::unlearn_stage() {
  const auto& b = bundle();
  const auto& pi0 = target();
  const auto all = entries();
  try {
    UnlearningData data;
    data.vocab = &b.vocab;
    data.forget = b.corpus.forget_records();
    data.retain = b.corpus.retain_records();
    data.counterfactuals = read_counterfactuals_jsonl(target_dir() / "counterfactuals.jsonl");
    for (const auto& spec : config_.methods) {
      for (double lr : spec.learning_rates) {
        const fs::path dir = run_dir(spec, lr);
        if (fs::exists(dir / "final.ckpt")) {
          spdlog::info("run {} exists", dir.string());
          continue;
        }
        TrainerConfig t = spec.trainer;
        t.learning_rate = lr;
        spdlog::info("unlearning with {} (lr {})", spec.label, lr);
        build_directory(dir, [&](const fs::path& tmp) {
          write_json(tmp / "run.json", {{"label", spec.label},
                                        {"learning_rate", lr},
                                        {"target", target_id_},
                                        {"trainer", nlohmann::json(t)}});
          fs::create_directories(tmp / "checkpoints");
          const auto arts = run_unlearning(pi0, data, t, tmp / "checkpoints");
          std::string trace;
          for (std::size_t e = 0; e < arts.loss_trace.size(); ++e) {
            nlohmann::json row = {{"epoch", e + 1},
                                  {"loss", arts.loss_trace[e]},
                                  {"margin", arts.margin_trace[e] ? nlohmann::json(*arts.margin_trace[e]) : nlohmann::json(nullptr)},
                                  {"decode_calls", arts.decode_calls[e]}};
            if (e < arts.counterfactual_hash.size()) {
              row["counterfactual_hash"] = fmt::format("{:016x}", arts.counterfactual_hash[e]);
            }
            trace += row.dump() + "\n";
          }
          write_text(tmp / "trace.jsonl", trace);
          write_json(tmp / "summary.json", arts.summary());
          save_checkpoint(arts.policy, tmp / "final.ckpt");
        });
      }
    }
  } catch (const std::exception& e) {
    throw StageFailure(Stage::kUnlearn, e.what());
  }
  return all;
}

std::vector<RunEntry> Pipeline::generate_stage() {
  const auto runs = unlearn_stage();
  const auto& b = bundle();
  try {
    const auto records = b.evaluation_records();
    const fs::path target_dump = target_dir() / "dump.jsonl";
    if (!fs::exists(target_dump)) {
      const auto dump = generate_dump(target(), records, b.vocab, config_.max_new);
      write_dump_jsonl(target_dump.string() + ".tmp", dump);
      fs::rename(target_dump.string() + ".tmp", target_dump);
    }
    const auto pre = read_dump_jsonl(target_dump);
    for (const auto& run : runs) {
      const fs::path path = run.dir / "dump.jsonl";
      if (fs::exists(path)) continue;
      const auto policy = load_checkpoint<float>(run.dir / "final.ckpt", &target().config);
      const auto dump = generate_dump(policy, records, b.vocab, config_.max_new, &pre);
      write_dump_jsonl(path.string() + ".tmp", dump);
      fs::rename(path.string() + ".tmp", path);
    }
  } catch (const std::exception& e) {
    throw StageFailure(Stage::kGenerate, e.what());
  }
  return runs;
}

std::vector<RunEntry> Pipeline::eval_stage() {
  const auto runs = generate_stage();
  const auto& b = bundle();
  try {
    auto judge = make_judge(config_.judge);
    auto evaluate = [&](const fs::path& dir, const fs::path& ckpt) {
      if (fs::exists(dir / "metrics.json")) return;
      const auto dump = read_dump_jsonl(dir / "dump.jsonl");
      auto report = aggregate(dump, *judge, config_.judge.max_parallel);
      const auto policy = load_checkpoint<float>(ckpt, nullptr);
      report.probe = general_ability_probe(policy, b.probe.eval, b.vocab);
      write_json(dir / "validation.json", {{"score", validation_score(dump)}});
      write_json(dir / "metrics.json", to_json(report));
    };
    evaluate(target_dir(), target_dir() / "target.ckpt");
    for (const auto& run : runs) evaluate(run.dir, run.dir / "final.ckpt");
  } catch (const std::exception& e) {
    throw StageFailure(Stage::kEval, e.what());
  }
  return runs;
}

fs::path Pipeline::report_stage() {
  const auto runs = eval_stage();
  try {
    std::vector<ReportRow> rows;
    rows.push_back(load_report_row(target_dir(), "Target", true));
    for (const auto& spec : config_.methods) {
      std::optional<ReportRow> best;
      double best_score = -1.0;
      for (const auto& run : runs) {
        if (run.label != spec.label) continue;
        const double score = read_json(run.dir / "validation.json").at("score").get<double>();
        if (score > best_score) {
          best_score = score;
          best = load_report_row(run.dir, spec.label, false);
          best->learning_rate = run.learning_rate;
          best->validation_score = score;
        }
      }
      rows.push_back(*best);
    }
    write_text(config_.output_dir / "report.md", render_markdown(rows));
    write_json(config_.output_dir / "report.json", report_json(rows));
  } catch (const std::exception& e) {
    throw StageFailure(Stage::kReport, e.what());
  }
  return config_.output_dir / "report.md";
}

std::vector<fs::path> Pipeline::run(Stage last) {
  fs::create_directories(config_.output_dir);
  write_text(config_.output_dir / "config.echo.json", config_.source_text);
  std::vector<fs::path> paths;
  auto add_runs = [&](const std::vector<RunEntry>& runs) {
    for (const auto& r : runs) paths.push_back(r.dir);
  };
  switch (last) {
    case Stage::kGenCorpus: paths.push_back(corpus_stage()); break;
    case Stage::kTrainTarget:
      paths.push_back(corpus_stage());
      paths.push_back(target_stage());
      break;
    case Stage::kUnlearn:
    case Stage::kGenerate:
    case Stage::kEval: {
      paths.push_back(corpus_stage());
      paths.push_back(target_stage());
      add_runs(last == Stage::kUnlearn ? unlearn_stage() : last == Stage::kGenerate ? generate_stage() : eval_stage());
      break;
    }
    case Stage::kReport: {
      paths.push_back(corpus_stage());
      paths.push_back(target_stage());
      const auto report = report_stage();
      add_runs(entries());
      paths.push_back(report);
      paths.push_back(config_.output_dir / "report.json");
      break;
    }
  }
  return paths;
}

int run_pipeline_main(const fs::path& config_path, std::optional<std::uint64_t> seed, Stage last,
                      std::ostream& out) {
  ExperimentConfig config;
  try {
    config = ExperimentConfig::load(config_path);
    if (seed) config = config.with_seed(*seed);
  } catch (const ConfigError& e) {
    spdlog::error("config error: {}", e.what());
    return 2;
  }
  try {
    Pipeline pipeline(config);
    for (const auto& p : pipeline.run(last)) out << p.string() << '\n';
  } catch (const StageFailure& e) {
    spdlog::error("stage {} failed: {}", to_string(e.stage()), e.what());
    return 3;
  } catch (const ConfigError& e) {
    spdlog::error("config error: {}", e.what());
    return 2;
  } catch (const std::exception& e) {
    spdlog::error("failure: {}", e.what());
    return 3;
  }
  return 0;
}

}  // namespace unlearn
