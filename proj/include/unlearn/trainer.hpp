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
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "unlearn/corpus.hpp"
#include "unlearn/counterfactual.hpp"
#include "unlearn/model.hpp"
#include "unlearn/objectives.hpp"

namespace unlearn {

enum class Method {
  kTargetSft,
  kGA,
  kGD,
  kKL,
  kNPO,
  kDPO,
  kDirectIdk,
  kAnswerIdk,
  kReasonedIdk,
  kRMU,
  kR2MU,
  kCiPO,
};

std::string_view to_string(Method method);
Method method_from_string(std::string_view name);

struct SamplingConfig {
  double temperature = 1.0;
  int max_new = 96;
  bool operator==(const SamplingConfig&) const = default;
};

struct TrainerConfig {
  Method method = Method::kCiPO;
  int epochs = 5;
  int warmup = 3;  // CiPO only
  double learning_rate = 1e-3;
  /// Minibatch size for target training and for the retain side of every
  /// unlearning step. The forget side is always the full forget set.
  int batch_size = 16;
  int steps_per_epoch = 10;
  std::uint64_t seed = 0;
  ObjectiveConfig objective;
  SamplingConfig sampling;
  /// false freezes the dispreferred side at the original trajectory.
  bool iterative = true;
  double memorization_gate = 0.9;  // target-sft only

  void validate() const;
  /// objective with warmup_T / total_E taken from this config.
  ObjectiveConfig resolved_objective() const;
  bool operator==(const TrainerConfig&) const = default;
};

void to_json(nlohmann::json& j, const TrainerConfig& c);
/// Strict: unknown keys, and warmup_T / total_E inside "objective", throw
/// ConfigError.
void from_json(const nlohmann::json& j, TrainerConfig& c);

using TrainPolicy = Policy<float>;

struct RunArtifacts {
  TrainPolicy policy;
  std::vector<double> loss_trace;                   // one per epoch
  std::vector<std::optional<double>> margin_trace;  // one per epoch, set after warmup
  std::vector<double> step_losses;
  std::vector<int> decode_calls;                    // sampling decodes per epoch
  std::vector<std::uint64_t> counterfactual_hash;   // D_c hash seen at each epoch
  std::vector<std::filesystem::path> checkpoints;
  nlohmann::json config_echo;
  std::uint64_t seed = 0;

  int sampling_rounds() const;
  int warmup_decode_calls(int warmup) const;
  /// Every trace as JSON (the policy itself is not included).
  nlohmann::json summary() const;
};

struct TargetReport {
  std::vector<double> loss_trace;
  double memorization = 0.0;
};

/// Fraction of records whose greedy answer contains every gold fact value.
double memorization_rate(const TrainPolicy& policy, std::span<const QARecord> records,
                         const Vocabulary& vocab, int max_new = 96);

/// Supervised fine-tuning from a fresh initialization on every record.
/// Throws TrainingFailure when the memorization gate is missed.
TrainPolicy train_target(std::span<const QARecord> train, const Vocabulary& vocab,
                         const ModelConfig& model, const TrainerConfig& config,
                         TargetReport* report = nullptr);

struct Trajectory {
  std::string id;
  TokenIds prompt;
  TokenIds response;  // sampled ids, EOS included when emitted
  ParsedResponse parsed;
};

/// One sampled trajectory per question. Each record draws from
/// mix_seed(epoch_seed, id), so results do not depend on order.
std::vector<Trajectory> sample_dispreferred(const TrainPolicy& policy,
                                            std::span<const QARecord> forget,
                                            const Vocabulary& vocab,
                                            const SamplingConfig& sampling,
                                            std::uint64_t epoch_seed,
                                            int* decode_counter = nullptr);

std::uint64_t epoch_seed(std::uint64_t run_seed, int epoch);

/// Preferred = counterfactual, dispreferred = trajectory with the same id.
std::vector<PreferencePair> build_pairs(std::span<const CounterfactualRecord> counterfactuals,
                                        std::span<const Trajectory> dispreferred,
                                        const Vocabulary& vocab);

struct UnlearningData {
  const Vocabulary* vocab = nullptr;
  std::vector<QARecord> forget;
  std::vector<QARecord> retain;
  std::vector<CounterfactualRecord> counterfactuals;  // CiPO only
};

/// Warm start on D_c, then on-policy SimPO rounds. `checkpoint_dir`
/// empty disables per-epoch checkpoints.
RunArtifacts cipo_unlearn(const TrainPolicy& target, const UnlearningData& data,
                          const TrainerConfig& config,
                          const std::filesystem::path& checkpoint_dir = {});

RunArtifacts run_baseline(const TrainPolicy& target, const UnlearningData& data,
                          const TrainerConfig& config,
                          const std::filesystem::path& checkpoint_dir = {});

/// Dispatches on config.method.
RunArtifacts run_unlearning(const TrainPolicy& target, const UnlearningData& data,
                     const TrainerConfig& config,
                     const std::filesystem::path& checkpoint_dir = {});

}  // namespace unlearn
