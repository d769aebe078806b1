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

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "unlearn/evaluation.hpp"
#include "unlearn/judge.hpp"
#include "unlearn/model_config.hpp"
#include "unlearn/trainer.hpp"

namespace unlearn {

struct CorpusParams {
  int n_entities = 20;
  int slots_per_entity = 4;
  int real_authors = 10;
  int world_facts = 20;
  int probe_train = 40;
  int probe_eval = 20;
  bool operator==(const CorpusParams&) const = default;
};

struct CounterfactualParams {
  Provenance mode = Provenance::kOracle;
  int retries = 3;
  bool operator==(const CounterfactualParams&) const = default;
};

/// One unlearning method of an experiment. Several learning rates form a
/// sweep; the report keeps the one with the best validation score.
struct MethodSpec {
  std::string label;
  TrainerConfig trainer;
  std::vector<double> learning_rates;
  bool operator==(const MethodSpec&) const = default;
};

struct ExperimentConfig {
  std::uint64_t seed = 7;
  std::filesystem::path output_dir = "runs";
  CorpusParams corpus;
  double forget_ratio = 0.1;
  ModelConfig model;
  TrainerConfig target;
  CounterfactualParams counterfactual;
  JudgeConfig judge;
  int max_new = 96;
  std::vector<MethodSpec> methods;
  nlohmann::json source;
  /// The document exactly as given, echoed into the output directory.
  std::string source_text;

  /// Strict parse: unknown keys and ill-typed values throw ConfigError.
  /// Method entries inherit the top-level "objective" key by key.
  static ExperimentConfig parse(std::string_view text);
  static ExperimentConfig load(const std::filesystem::path& path);
  /// Replaces the global seed and every run seed not given explicitly.
  ExperimentConfig with_seed(std::uint64_t seed) const;
  void validate() const;
};

enum class Stage { kGenCorpus, kTrainTarget, kUnlearn, kGenerate, kEval, kReport };
std::string_view to_string(Stage stage);

class StageFailure : public std::runtime_error {
 public:
  StageFailure(Stage stage, const std::string& what)
      : std::runtime_error(std::string(to_string(stage)) + ": " + what), stage_(stage) {}
  Stage stage() const noexcept { return stage_; }

 private:
  Stage stage_;
};

/// Hex digest of a JSON document's canonical dump.
std::string content_id(const nlohmann::json& j);

struct CorpusBundle {
  Corpus corpus;
  std::vector<QARecord> real_authors;
  std::vector<QARecord> world_facts;
  ProbeSet probe;
  Vocabulary vocab = Vocabulary::build({});

  std::vector<QARecord> training_records() const;
  /// Forget, retain and both analog splits: the records every dump covers.
  std::vector<QARecord> evaluation_records() const;
};

CorpusBundle build_corpus(const ExperimentConfig& config);

/// Validation slice: the forget split plus every other record of the
/// utility splits. Selection score = harmonic mean of (AFE, MU).
double validation_score(const GenerationDump& dump);

struct RunEntry {
  std::string label;
  double learning_rate = 0.0;
  std::filesystem::path dir;
};

/// Stage-by-stage driver. Every stage first runs the ones it depends on;
/// stages whose outputs exist are loaded, not recomputed.
class Pipeline {
 public:
  explicit Pipeline(ExperimentConfig config);

  std::filesystem::path corpus_stage();
  std::filesystem::path target_stage();
  std::vector<RunEntry> unlearn_stage();
  std::vector<RunEntry> generate_stage();
  std::vector<RunEntry> eval_stage();
  std::filesystem::path report_stage();

  /// Runs up to and including `last`; returns the artifact paths.
  std::vector<std::filesystem::path> run(Stage last);

  const ExperimentConfig& config() const { return config_; }
  std::filesystem::path corpus_dir() const;
  std::filesystem::path target_dir() const;
  std::filesystem::path run_dir(const MethodSpec& method, double learning_rate) const;

 private:
  const CorpusBundle& bundle();
  const TrainPolicy& target();
  std::vector<RunEntry> entries() const;

  ExperimentConfig config_;
  std::string corpus_id_;
  std::string target_id_;
  std::optional<CorpusBundle> bundle_;
  std::optional<TrainPolicy> target_;
};

/// Parses, runs and maps failures to exit codes: 0 success, 2 config
/// error, 3 stage failure. Artifact paths are printed last.
int run_pipeline_main(const std::filesystem::path& config_path, std::optional<std::uint64_t> seed,
                      Stage last, std::ostream& out);

}  // namespace unlearn
