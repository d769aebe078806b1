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

#include "unlearn/trainer.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <fmt/format.h>

#include "unlearn/checkpoint.hpp"
#include "unlearn/optimizer.hpp"
#include "unlearn/text_metrics.hpp"

namespace unlearn {

namespace {

constexpr std::pair<Method, std::string_view> kMethodNames[] = {
    {Method::kTargetSft, "target-sft"}, {Method::kGA, "GA"},
    {Method::kGD, "GD"},                {Method::kKL, "KL"},
    {Method::kNPO, "NPO"},              {Method::kDPO, "DPO"},
    {Method::kDirectIdk, "DirectIDK"},  {Method::kAnswerIdk, "AnswerIDK"},
    {Method::kReasonedIdk, "ReasonedIDK"}, {Method::kRMU, "RMU"},
    {Method::kR2MU, "R2MU"},            {Method::kCiPO, "CiPO"},
};

SequencePair as_pair(const RenderedExample& e) {
  return {TokenIds(e.prompt().begin(), e.prompt().end()),
          TokenIds(e.response().begin(), e.response().end())};
}

std::vector<SequencePair> record_pairs(std::span<const QARecord> records, const Vocabulary& vocab) {
  std::vector<SequencePair> out;
  out.reserve(records.size());
  for (const auto& r : records) out.push_back(as_pair(render_example(r, vocab)));
  return out;
}

RepresentationSample response_span(const RenderedExample& e) {
  return {e.tokens, e.prompt_length, e.tokens.size()};
}

RepresentationSample cot_span(const RenderedExample& e) {
  return {e.tokens, e.think_open + 1, e.think_close};
}

template <typename T>
std::vector<T> pick(std::span<const T> all, std::span<const std::size_t> idx) {
  std::vector<T> out;
  for (auto i : idx) out.push_back(all[i]);
  return out;
}

/// Deterministic retain minibatch: a fresh shuffle per (seed, epoch, step).
std::vector<std::size_t> retain_indices(std::size_t n, int size, std::uint64_t seed, int epoch,
                                        int step) {
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  Rng rng(mix_seed(seed, fmt::format("retain:{}:{}", epoch, step)));
  rng.shuffle(idx);
  idx.resize(std::min(n, static_cast<std::size_t>(size)));
  std::sort(idx.begin(), idx.end());
  return idx;
}

std::vector<SequencePair> retain_batch(std::span<const SequencePair> retain, int size,
                                       std::uint64_t seed, int epoch, int step) {
  return pick(retain, retain_indices(retain.size(), size, seed, epoch, step));
}

void require_data(const UnlearningData& data) {
  if (data.vocab == nullptr) throw ContractError("unlearning data has no vocabulary");
  if (data.forget.empty()) throw ContractError("unlearning data has an empty forget set");
}

class EpochLoop {
 public:
  EpochLoop(const TrainPolicy& target, const TrainerConfig& config,
            const std::filesystem::path& checkpoint_dir)
      : config_(config), checkpoint_dir_(checkpoint_dir) {
    config.validate();
    arts_.policy = target;
    arts_.policy.role = PolicyRole::kTrainable;
    arts_.config_echo = config;
    arts_.seed = config.seed;
    adam_ = AdamState<float>::for_policy(arts_.policy);
  }

  TrainPolicy& policy() { return arts_.policy; }
  RunArtifacts& artifacts() { return arts_; }

  /// Runs steps_per_epoch updates of `step(step_index)` and records the mean.
  template <typename StepFn>
  void run_epoch(int epoch, std::string_view phase, StepFn&& step) {
    double total = 0.0;
    try {
      for (int s = 0; s < config_.steps_per_epoch; ++s) {
        const LossResult<float> loss = step(s);
        if (!std::isfinite(loss.value)) throw TrainingFailure("non-finite loss");
        apply_update(arts_.policy, loss.grad, adam_, config_.learning_rate);
        arts_.step_losses.push_back(loss.value);
        total += loss.value;
      }
    } catch (const std::exception& e) {
      throw TrainingFailure(fmt::format("{} run failed at epoch {} ({} phase): {}",
                                        to_string(config_.method), epoch, phase, e.what()));
    }
    arts_.loss_trace.push_back(total / config_.steps_per_epoch);
    spdlog::info("{} epoch {}/{} [{}] loss {:.5f}", to_string(config_.method), epoch,
                 config_.epochs, phase, arts_.loss_trace.back());
    if (!checkpoint_dir_.empty()) {
      const auto path = checkpoint_dir_ / fmt::format("epoch-{:02d}.ckpt", epoch);
      save_checkpoint(arts_.policy, path);
      arts_.checkpoints.push_back(path);
    }
  }

 private:
  TrainerConfig config_;
  std::filesystem::path checkpoint_dir_;
  RunArtifacts arts_;
  AdamState<float> adam_;
};

}  // namespace

std::string_view to_string(Method method) {
  for (const auto& [m, name] : kMethodNames) {
    if (m == method) return name;
  }
  throw ContractError("unknown method");
}

Method method_from_string(std::string_view name) {
  for (const auto& [m, n] : kMethodNames) {
    if (n == name) return m;
  }
  throw ConfigError("unknown method '" + std::string(name) + "'");
}

void TrainerConfig::validate() const {
  if (epochs < 1) throw ConfigError("epochs must be positive");
  if (method == Method::kCiPO && (warmup < 0 || warmup > epochs)) {
    throw ConfigError("warmup must lie in [0, epochs]");
  }
  if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be positive");
  if (batch_size < 1) throw ConfigError("batch_size must be positive");
  if (steps_per_epoch < 1) throw ConfigError("steps_per_epoch must be positive");
  if (!(sampling.temperature >= 0.0)) throw ConfigError("sampling temperature must be nonnegative");
  if (sampling.max_new < 1) throw ConfigError("sampling max_new must be positive");
  if (!(memorization_gate >= 0.0 && memorization_gate <= 1.0)) {
    throw ConfigError("memorization_gate must lie in [0, 1]");
  }
  resolved_objective().validate();
}

ObjectiveConfig TrainerConfig::resolved_objective() const {
  ObjectiveConfig o = objective;
  o.total_E = epochs;
  o.warmup_T = method == Method::kCiPO ? warmup : 0;
  return o;
}

void to_json(nlohmann::json& j, const TrainerConfig& c) {
  nlohmann::json objective = c.objective;
  objective.erase("warmup_T");
  objective.erase("total_E");
  j = nlohmann::json{{"method", to_string(c.method)},
                     {"epochs", c.epochs},
                     {"warmup", c.warmup},
                     {"learning_rate", c.learning_rate},
                     {"batch_size", c.batch_size},
                     {"steps_per_epoch", c.steps_per_epoch},
                     {"seed", c.seed},
                     {"objective", objective},
                     {"sampling", {{"temperature", c.sampling.temperature}, {"max_new", c.sampling.max_new}}},
                     {"iterative", c.iterative},
                     {"memorization_gate", c.memorization_gate}};
}

void from_json(const nlohmann::json& j, TrainerConfig& c) {
  c = TrainerConfig{};
  if (!j.is_object()) throw ConfigError("trainer config must be an object");
  for (const auto& [key, value] : j.items()) {
    if (key == "method") c.method = method_from_string(value.get<std::string>());
    else if (key == "epochs") c.epochs = value.get<int>();
    else if (key == "warmup") c.warmup = value.get<int>();
    else if (key == "learning_rate") c.learning_rate = value.get<double>();
    else if (key == "batch_size") c.batch_size = value.get<int>();
    else if (key == "steps_per_epoch") c.steps_per_epoch = value.get<int>();
    else if (key == "seed") c.seed = value.get<std::uint64_t>();
    else if (key == "iterative") c.iterative = value.get<bool>();
    else if (key == "memorization_gate") c.memorization_gate = value.get<double>();
    else if (key == "objective") {
      if (value.contains("warmup_T") || value.contains("total_E")) {
        throw ConfigError("set epochs and warmup on the trainer, not inside objective");
      }
      c.objective = value.get<ObjectiveConfig>();
    } else if (key == "sampling") {
      for (const auto& [k, v] : value.items()) {
        if (k == "temperature") c.sampling.temperature = v.get<double>();
        else if (k == "max_new") c.sampling.max_new = v.get<int>();
        else throw ConfigError("unknown sampling key '" + k + "'");
      }
    } else {
      throw ConfigError("unknown trainer key '" + key + "'");
    }
  }
  c.objective = c.resolved_objective();
}

int RunArtifacts::sampling_rounds() const {
  return static_cast<int>(std::count_if(decode_calls.begin(), decode_calls.end(),
                                        [](int n) { return n > 0; }));
}

int RunArtifacts::warmup_decode_calls(int warmup) const {
  int n = 0;
  for (int e = 0; e < warmup && e < static_cast<int>(decode_calls.size()); ++e) n += decode_calls[e];
  return n;
}

nlohmann::json RunArtifacts::summary() const {
  nlohmann::json margins = nlohmann::json::array();
  for (const auto& m : margin_trace) margins.push_back(m ? nlohmann::json(*m) : nlohmann::json(nullptr));
  nlohmann::json ckpts = nlohmann::json::array();
  for (const auto& p : checkpoints) ckpts.push_back(p.filename().string());
  return {{"config", config_echo},   {"seed", seed},
          {"loss_trace", loss_trace}, {"margin_trace", margins},
          {"decode_calls", decode_calls}, {"counterfactual_hash", counterfactual_hash},
          {"checkpoints", ckpts}};
}

double memorization_rate(const TrainPolicy& policy, std::span<const QARecord> records,
                         const Vocabulary& vocab, int max_new) {
  if (records.empty()) throw ContractError("memorization_rate: no records");
  int hits = 0;
  for (const auto& r : records) {
    const auto out = decode(policy, std::span<const TokenId>(render_prompt(r.question, vocab)),
                            DecodeOptions::greedy(max_new));
    hits += entailment_proxy(parse_response(out, vocab).answer, r.fact_slots);
  }
  return static_cast<double>(hits) / static_cast<double>(records.size());
}

TrainPolicy train_target(std::span<const QARecord> train, const Vocabulary& vocab,
                         const ModelConfig& model, const TrainerConfig& config,
                         TargetReport* report) {
  config.validate();
  if (config.method != Method::kTargetSft) throw ConfigError("train_target needs method target-sft");
  if (train.empty()) throw ContractError("train_target: empty training set");
  ModelConfig mc = model;
  mc.vocab_size = static_cast<int>(vocab.size());
  mc.validate();
  const auto data = record_pairs(train, vocab);
  for (const auto& p : data) {
    if (p.prompt.size() + p.response.size() > static_cast<std::size_t>(mc.max_seq_len)) {
      throw ConfigError(fmt::format("a rendered example has {} tokens, above max_seq_len {}",
                                    p.prompt.size() + p.response.size(), mc.max_seq_len));
    }
  }
  TrainPolicy policy = init_policy<float>(mc, mix_seed(config.seed, "target-init"));
  auto adam = AdamState<float>::for_policy(policy);
  TargetReport local;
  const auto bs = static_cast<std::size_t>(config.batch_size);
  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    std::vector<std::size_t> order(data.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    Rng rng(mix_seed(config.seed, fmt::format("sft:{}", epoch)));
    rng.shuffle(order);
    double total = 0.0;
    int batches = 0;
    for (std::size_t b = 0; b < order.size(); b += bs) {
      const auto idx = std::span<const std::size_t>(order).subspan(b, std::min(bs, order.size() - b));
      const auto batch = pick(std::span<const SequencePair>(data), idx);
      const auto loss = nll_loss(policy, std::span<const SequencePair>(batch));
      apply_update(policy, loss.grad, adam, config.learning_rate);
      total += loss.value;
      ++batches;
    }
    local.loss_trace.push_back(total / batches);
    spdlog::info("target epoch {}/{} nll {:.5f}", epoch, config.epochs, local.loss_trace.back());
  }
  local.memorization = memorization_rate(policy, train, vocab, config.sampling.max_new);
  spdlog::info("target memorization {:.3f}", local.memorization);
  if (report != nullptr) *report = local;
  if (local.memorization < config.memorization_gate) {
    throw TrainingFailure(fmt::format("target memorization {:.3f} below the gate {:.3f} after {} epochs",
                                      local.memorization, config.memorization_gate, config.epochs));
  }
  return policy;
}

std::uint64_t epoch_seed(std::uint64_t run_seed, int epoch) {
  return run_seed ^ static_cast<std::uint64_t>(epoch);
}

std::vector<Trajectory> sample_dispreferred(const TrainPolicy& policy,
                                            std::span<const QARecord> forget,
                                            const Vocabulary& vocab,
                                            const SamplingConfig& sampling,
                                            std::uint64_t seed, int* decode_counter) {
  std::vector<Trajectory> out;
  out.reserve(forget.size());
  for (const auto& r : forget) {
    Trajectory t;
    t.id = r.id;
    t.prompt = render_prompt(r.question, vocab);
    t.response = decode(policy, std::span<const TokenId>(t.prompt),
                        DecodeOptions::sampled(sampling.temperature, mix_seed(seed, r.id), sampling.max_new));
    if (decode_counter != nullptr) ++*decode_counter;
    t.parsed = parse_response(t.response, vocab);
    out.push_back(std::move(t));
  }
  return out;
}

std::vector<PreferencePair> build_pairs(std::span<const CounterfactualRecord> counterfactuals,
                                        std::span<const Trajectory> dispreferred,
                                        const Vocabulary& vocab) {
  if (counterfactuals.size() != dispreferred.size()) {
    throw ContractError(fmt::format("build_pairs: {} counterfactuals but {} sampled trajectories",
                                    counterfactuals.size(), dispreferred.size()));
  }
  std::vector<PreferencePair> out;
  out.reserve(counterfactuals.size());
  for (const auto& cf : counterfactuals) {
    const auto it = std::find_if(dispreferred.begin(), dispreferred.end(),
                                 [&](const Trajectory& t) { return t.id == cf.source_id; });
    if (it == dispreferred.end()) throw ContractError("build_pairs: no trajectory for " + cf.source_id);
    out.push_back({cf.source_id, render_prompt(cf.question, vocab),
                   render_response(cf.cf_cot_steps, cf.cf_answer, vocab), it->response});
  }
  return out;
}

RunArtifacts cipo_unlearn(const TrainPolicy& target, const UnlearningData& data,
                          const TrainerConfig& config, const std::filesystem::path& checkpoint_dir) {
  require_data(data);
  if (config.method != Method::kCiPO) throw ConfigError("cipo_unlearn needs method CiPO");
  if (data.counterfactuals.size() != data.forget.size()) {
    throw ContractError("cipo_unlearn: the counterfactual set must cover the forget set");
  }
  const Vocabulary& vocab = *data.vocab;
  const ObjectiveConfig objective = config.resolved_objective();
  const std::span<const CounterfactualRecord> dc(data.counterfactuals);
  const std::uint64_t dc_hash = hash_counterfactual_set(dc);

  std::vector<SequencePair> dc_pairs;
  for (const auto& cf : dc) {
    dc_pairs.push_back({render_prompt(cf.question, vocab), render_response(cf.cf_cot_steps, cf.cf_answer, vocab)});
  }
  const auto retain = record_pairs(data.retain, vocab);
  std::vector<Trajectory> original;
  if (!config.iterative) {
    for (const auto& r : data.forget) {
      const auto e = render_example(r, vocab);
      original.push_back({r.id, TokenIds(e.prompt().begin(), e.prompt().end()),
                          TokenIds(e.response().begin(), e.response().end()), {}});
    }
  }
  const TrainPolicy reference = snapshot_frozen(target);

  EpochLoop loop(target, config, checkpoint_dir);
  auto& arts = loop.artifacts();
  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    if (hash_counterfactual_set(dc) != dc_hash) {
      throw TrainingFailure(fmt::format("counterfactual set changed before epoch {}", epoch));
    }
    arts.counterfactual_hash.push_back(dc_hash);
    int decodes = 0;
    std::vector<PreferencePair> paired;
    const bool preference = epoch > config.warmup;
    if (preference) {
      try {
        const auto negatives = config.iterative
                                   ? sample_dispreferred(loop.policy(), data.forget, vocab, config.sampling,
                                                         epoch_seed(config.seed, epoch), &decodes)
                                   : original;
        paired = build_pairs(dc, negatives, vocab);
      } catch (const std::exception& e) {
        throw TrainingFailure(fmt::format("CiPO run failed at epoch {} (sampling phase): {}", epoch, e.what()));
      }
    }
    arts.decode_calls.push_back(decodes);
    loop.run_epoch(epoch, preference ? "preference" : "warmup", [&](int step) {
      const auto rb = retain_batch(retain, config.batch_size, config.seed, epoch, step);
      return cipo_loss(loop.policy(), std::span<const PreferencePair>(paired),
                       std::span<const SequencePair>(dc_pairs), std::span<const SequencePair>(rb), epoch,
                       objective, &reference);
    });
    if (preference) {
      arts.margin_trace.emplace_back(
          static_cast<double>(simpo_margin(loop.policy(), std::span<const PreferencePair>(paired), objective.beta)));
    } else {
      arts.margin_trace.emplace_back(std::nullopt);
    }
  }
  return std::move(arts);
}

RunArtifacts run_baseline(const TrainPolicy& target, const UnlearningData& data,
                          const TrainerConfig& config, const std::filesystem::path& checkpoint_dir) {
  require_data(data);
  if (config.method == Method::kCiPO || config.method == Method::kTargetSft) {
    throw ConfigError(fmt::format("run_baseline cannot run method {}", to_string(config.method)));
  }
  const Vocabulary& vocab = *data.vocab;
  const ObjectiveConfig objective = config.resolved_objective();
  const double lambda = objective.lambda_retain;

  const auto forget = record_pairs(data.forget, vocab);
  const auto retain = record_pairs(data.retain, vocab);
  const TrainPolicy reference = snapshot_frozen(target);

  std::vector<SequencePair> refusals;
  std::vector<PreferencePair> dpo_pairs;
  auto refusal_pairs = [&](RefusalVariant variant) {
    std::vector<SequencePair> out;
    for (const auto& r : build_refusal_set(data.forget, variant)) {
      out.push_back({render_prompt(r.question, vocab), render_response(r.idk_cot, r.idk_answer, vocab)});
    }
    return out;
  };
  switch (config.method) {
    case Method::kDirectIdk: refusals = refusal_pairs(RefusalVariant::kDirectIdk); break;
    case Method::kAnswerIdk: refusals = refusal_pairs(RefusalVariant::kAnswerIdk); break;
    case Method::kReasonedIdk: refusals = refusal_pairs(RefusalVariant::kReasonedIdk); break;
    case Method::kDPO: {
      const auto idk = refusal_pairs(RefusalVariant::kDirectIdk);
      for (std::size_t i = 0; i < forget.size(); ++i) {
        dpo_pairs.push_back({data.forget[i].id, forget[i].prompt, idk[i].response, forget[i].response});
      }
      break;
    }
    default: break;
  }

  std::vector<RepresentationSample> forget_reps, forget_cot, retain_reps, retain_cot;
  std::optional<RMUState<float>> rmu;
  if (config.method == Method::kRMU || config.method == Method::kR2MU) {
    rmu = RMUState<float>::make(target.config, config.seed);
    for (const auto& r : data.forget) {
      const auto e = render_example(r, vocab);
      forget_reps.push_back(response_span(e));
      forget_cot.push_back(cot_span(e));
    }
    for (const auto& r : data.retain) {
      const auto e = render_example(r, vocab);
      retain_reps.push_back(response_span(e));
      retain_cot.push_back(cot_span(e));
    }
  }

  EpochLoop loop(target, config, checkpoint_dir);
  auto& arts = loop.artifacts();
  const std::span<const SequencePair> f(forget);
  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    arts.decode_calls.push_back(0);
    arts.margin_trace.emplace_back(std::nullopt);
    loop.run_epoch(epoch, "unlearning", [&](int step) -> LossResult<float> {
      const auto& p = loop.policy();
      const auto idx = retain_indices(retain.size(), config.batch_size, config.seed, epoch, step);
      const auto rb = pick(std::span<const SequencePair>(retain), idx);
      const std::span<const SequencePair> r(rb);
      auto add_retain = [&](LossResult<float> out) {
        if (lambda > 0.0 && !r.empty()) {
          const auto term = nll_loss(p, r);
          out.value += static_cast<float>(lambda) * term.value;
          out.grad.add_scaled(term.grad, static_cast<float>(lambda));
        }
        return out;
      };
      switch (config.method) {
        case Method::kGA: return ga_loss(p, f);
        case Method::kGD: return gd_loss(p, f, r, lambda);
        case Method::kKL: {
          auto out = ga_loss(p, f);
          if (lambda > 0.0) {
            const auto term = kl_retain_loss(p, reference, r);
            out.value += static_cast<float>(lambda) * term.value;
            out.grad.add_scaled(term.grad, static_cast<float>(lambda));
          }
          return out;
        }
        case Method::kNPO: return add_retain(npo_loss(p, reference, f, objective.beta));
        case Method::kDPO:
          return add_retain(dpo_loss(p, reference, std::span<const PreferencePair>(dpo_pairs), objective.beta));
        case Method::kDirectIdk:
        case Method::kAnswerIdk:
        case Method::kReasonedIdk:
          return idk_loss(p, std::span<const SequencePair>(refusals), r, lambda);
        case Method::kRMU:
          return rmu_loss(p, reference, std::span<const RepresentationSample>(forget_reps),
                          std::span<const RepresentationSample>(pick(std::span<const RepresentationSample>(retain_reps), idx)),
                          *rmu, objective.rmu_scale, objective.rmu_lambda);
        case Method::kR2MU: {
          const auto rr = pick(std::span<const RepresentationSample>(retain_reps), idx);
          const auto rc = pick(std::span<const RepresentationSample>(retain_cot), idx);
          return r2mu_loss(p, reference, std::span<const RepresentationSample>(forget_reps),
                           std::span<const RepresentationSample>(rr),
                           std::span<const RepresentationSample>(forget_cot),
                           std::span<const RepresentationSample>(rc), *rmu, objective);
        }
        default: throw ContractError("unreachable method");
      }
    });
  }
  return std::move(arts);
}

RunArtifacts run_unlearning(const TrainPolicy& target, const UnlearningData& data, const TrainerConfig& config,
                     const std::filesystem::path& checkpoint_dir) {
  return config.method == Method::kCiPO ? cipo_unlearn(target, data, config, checkpoint_dir)
                                        : run_baseline(target, data, config, checkpoint_dir);
}

}  // namespace unlearn
