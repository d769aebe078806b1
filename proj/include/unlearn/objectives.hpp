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

// Unlearning objectives. Each returns the batch-mean loss and its gradient
// with respect to the trainable policy's parameters.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "unlearn/model.hpp"

namespace unlearn {

template <typename Scalar>
struct LossResult {
  Scalar value = 0;
  Parameters<Scalar> grad;
  /// Samples skipped for lacking the span a loss needs (unthinking loss).
  int skipped = 0;
};

/// (prompt, target) for likelihood-based losses.
struct SequencePair {
  TokenIds prompt;
  TokenIds response;
};

/// One element of a paired preference set: preferred = y_c, dispreferred =
/// y_{t-1}. Responses are full rendered trajectories, delimiters included.
struct PreferencePair {
  std::string id;
  TokenIds prompt;
  TokenIds preferred;
  TokenIds dispreferred;
};

/// Token sequence plus the half-open position range [begin, end) whose
/// activations a representation loss reads.
struct RepresentationSample {
  TokenIds tokens;
  std::size_t begin = 0;
  std::size_t end = 0;
};

enum class RetainLoss { kNll, kKl };

struct ObjectiveConfig {
  double beta = 2.5;    // DPO / NPO / SimPO scale
  double gamma = 0.5;   // SimPO margin
  double lambda_retain = 1.0;
  double alpha_nll = 1.0;     // CiPO NLL weight on the counterfactual set
  double omega_retain = 1.0;  // CiPO retain weight
  double rmu_scale = 6.5;
  double rmu_lambda = 1.0;
  double alpha_unthink = 1.0;
  double beta_cot = 1.0;
  int warmup_T = 3;
  int total_E = 5;
  RetainLoss retain_loss = RetainLoss::kNll;

  void validate() const;
  bool operator==(const ObjectiveConfig&) const = default;
};

void to_json(nlohmann::json& j, const ObjectiveConfig& c);
void from_json(const nlohmann::json& j, ObjectiveConfig& c);

/// Fixed random target direction for representation misdirection. Drawn
/// once per run, componentwise uniform on [0, 1), used unnormalized.
template <typename Scalar>
struct RMUState {
  Matrix<Scalar> u;  // [1, d_model]
  int layer = 0;

  static RMUState make(const ModelConfig& config, std::uint64_t seed) {
    const ModelConfig c = config.resolved();
    RMUState s;
    s.u.resize(1, c.d_model);
    Rng rng(mix_seed(seed, "rmu-direction"));
    for (Eigen::Index i = 0; i < s.u.size(); ++i) s.u.data()[i] = static_cast<Scalar>(rng.uniform());
    s.layer = c.rmu_layer;
    return s;
  }
};

// ---------------------------------------------------------------------------
// Scalar kernels

inline constexpr double kSigmoidClamp = 30.0;

/// log sigma(x) with x clamped to [-30, 30]; the derivative is zero outside.
template <typename Scalar>
Scalar log_sigmoid(Scalar x) {
  const Scalar c = std::clamp(x, Scalar(-kSigmoidClamp), Scalar(kSigmoidClamp));
  return c >= 0 ? -std::log1p(std::exp(-c)) : c - std::log1p(std::exp(c));
}

/// d/dx log_sigmoid(x) = sigma(-x), zero where the clamp is active.
template <typename Scalar>
Scalar log_sigmoid_grad(Scalar x) {
  if (x > Scalar(kSigmoidClamp) || x < Scalar(-kSigmoidClamp)) return 0;
  return Scalar(1) / (Scalar(1) + std::exp(x));
}

template <typename Scalar>
Scalar sigmoid(Scalar x) {
  return Scalar(1) / (Scalar(1) + std::exp(-x));
}

/// KL(p || q) for two categorical distributions given as log-probabilities.
template <typename Scalar, typename A, typename B>
Scalar categorical_kl(const Eigen::DenseBase<A>& log_p, const Eigen::DenseBase<B>& log_q) {
  return (log_p.derived().array().exp() * (log_p.derived().array() - log_q.derived().array())).sum();
}

namespace detail {

template <typename Scalar>
struct ScoredSequence {
  ForwardTape<Scalar> tape;
  Matrix<Scalar> log_probs;
  std::size_t prompt_length = 0;
  TokenIds response;
  Scalar logprob = 0;
};

template <typename Scalar>
ScoredSequence<Scalar> score(const Policy<Scalar>& policy, std::span<const TokenId> prompt,
                             std::span<const TokenId> response) {
  response = strip_padding(response);
  if (response.empty()) throw ContractError("empty response");
  if (prompt.empty()) throw ContractError("empty prompt");
  ScoredSequence<Scalar> s;
  s.prompt_length = prompt.size();
  s.response.assign(response.begin(), response.end());
  s.tape = forward(policy, concat(prompt, response));
  s.log_probs = log_softmax_rows(s.tape.logits);
  for (std::size_t i = 0; i < response.size(); ++i) {
    s.logprob += s.log_probs(static_cast<Eigen::Index>(s.prompt_length + i - 1), response[i]);
  }
  return s;
}

/// grads += coeff * d(log P(response | prompt)) / d(theta).
template <typename Scalar>
void backprop_logprob(const Policy<Scalar>& policy, const ScoredSequence<Scalar>& s, Scalar coeff,
                      Parameters<Scalar>& grads) {
  if (coeff == Scalar(0)) return;
  Matrix<Scalar> d_logits = Matrix<Scalar>::Zero(s.log_probs.rows(), s.log_probs.cols());
  for (std::size_t i = 0; i < s.response.size(); ++i) {
    const auto row = static_cast<Eigen::Index>(s.prompt_length + i - 1);
    d_logits.row(row) = -coeff * s.log_probs.row(row).array().exp();
    d_logits(row, s.response[i]) += coeff;
  }
  backward<Scalar>(policy, s.tape, &d_logits, {}, grads);
}

template <typename Scalar>
void require_frozen(const Policy<Scalar>& reference) {
  if (!reference.frozen()) throw ContractError("reference policy must be a frozen snapshot");
}

template <typename Scalar>
void require_beta(double beta) {
  if (!(beta > 0.0)) throw ContractError("beta must be positive");
}

/// Mean over the selected positions of (1/d) ||h - target_row||^2 where
/// target is either a fixed row (misdirection) or reference activations.
/// Adds `weight` times it into `result`.
template <typename Scalar>
void representation_term(const Policy<Scalar>& policy, const Policy<Scalar>* reference,
                         std::span<const RepresentationSample> samples, int layer,
                         const Matrix<Scalar>* target_row, Scalar weight,
                         LossResult<Scalar>& result, bool count_skips) {
  std::size_t n_positions = 0;
  for (const auto& s : samples) {
    if (s.end > s.tokens.size() || s.begin > s.end) throw ContractError("bad representation span");
    n_positions += s.end - s.begin;
  }
  if (count_skips) {
    for (const auto& s : samples) result.skipped += s.begin == s.end ? 1 : 0;
  }
  if (n_positions == 0) return;
  const Scalar d = static_cast<Scalar>(policy.config.d_model);
  const Scalar norm = weight / (static_cast<Scalar>(n_positions) * d);
  for (const auto& s : samples) {
    if (s.begin == s.end) continue;
    const auto tape = forward(policy, s.tokens, layer);
    const Matrix<Scalar>& h = tape.hidden(layer);
    Matrix<Scalar> target;
    if (target_row != nullptr) {
      target = target_row->replicate(h.rows(), 1);
    } else {
      target = hidden_at_layer(*reference, s.tokens, layer);
    }
    HiddenGradient<Scalar> hg{layer, Matrix<Scalar>::Zero(h.rows(), h.cols())};
    for (std::size_t pos = s.begin; pos < s.end; ++pos) {
      const auto r = static_cast<Eigen::Index>(pos);
      const auto diff = (h.row(r) - target.row(r)).eval();
      result.value += norm * diff.squaredNorm();
      hg.grad.row(r) = Scalar(2) * norm * diff;
    }
    backward<Scalar>(policy, tape, nullptr, std::span<const HiddenGradient<Scalar>>(&hg, 1),
                     result.grad);
  }
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Likelihood family

/// Mean over the batch of the per-token NLL -log P(target | prompt) / |target|.
template <typename Scalar>
LossResult<Scalar> nll_loss(const Policy<Scalar>& policy, std::span<const SequencePair> batch) {
  if (batch.empty()) throw ContractError("nll_loss: empty batch");
  LossResult<Scalar> out{0, policy.params.zeros_like(), 0};
  const Scalar inv_b = Scalar(1) / static_cast<Scalar>(batch.size());
  for (const auto& ex : batch) {
    const auto s = detail::score(policy, ex.prompt, ex.response);
    const Scalar n = static_cast<Scalar>(s.response.size());
    out.value -= inv_b * s.logprob / n;
    detail::backprop_logprob(policy, s, -inv_b / n, out.grad);
  }
  return out;
}

/// Gradient ascent: the negated per-token NLL on the forget set.
template <typename Scalar>
LossResult<Scalar> ga_loss(const Policy<Scalar>& policy, std::span<const SequencePair> forget) {
  auto out = nll_loss(policy, forget);
  out.value = -out.value;
  out.grad.scale(Scalar(-1));
  return out;
}

/// Gradient difference: GA + lambda * NLL(retain). An empty retain batch
/// reduces to pure GA.
template <typename Scalar>
LossResult<Scalar> gd_loss(const Policy<Scalar>& policy, std::span<const SequencePair> forget,
                           std::span<const SequencePair> retain, double lambda) {
  if (lambda < 0.0) throw ContractError("gd_loss: lambda must be nonnegative");
  auto out = ga_loss(policy, forget);
  if (retain.empty() || lambda == 0.0) return out;
  const auto r = nll_loss(policy, retain);
  out.value += static_cast<Scalar>(lambda) * r.value;
  out.grad.add_scaled(r.grad, static_cast<Scalar>(lambda));
  return out;
}

/// Mean over all retain response positions of KL(P_policy || P_reference)
/// over the full next-token distribution.
template <typename Scalar>
LossResult<Scalar> kl_retain_loss(const Policy<Scalar>& policy, const Policy<Scalar>& reference,
                                  std::span<const SequencePair> retain) {
  detail::require_frozen(reference);
  if (retain.empty()) throw ContractError("kl_retain_loss: empty batch");
  std::size_t n_positions = 0;
  for (const auto& ex : retain) n_positions += strip_padding(ex.response).size();
  LossResult<Scalar> out{0, policy.params.zeros_like(), 0};
  const Scalar inv_n = Scalar(1) / static_cast<Scalar>(n_positions);
  for (const auto& ex : retain) {
    const auto response = strip_padding(ex.response);
    if (response.empty()) throw ContractError("empty response");
    const TokenIds tokens = concat(ex.prompt, response);
    const auto tape = forward(policy, tokens);
    const Matrix<Scalar> log_p = log_softmax_rows(tape.logits);
    const Matrix<Scalar> log_q = log_softmax_rows(forward_logits(reference, tokens));
    Matrix<Scalar> d_logits = Matrix<Scalar>::Zero(log_p.rows(), log_p.cols());
    for (std::size_t i = 0; i < response.size(); ++i) {
      const auto r = static_cast<Eigen::Index>(ex.prompt.size() + i - 1);
      const Scalar kl = categorical_kl<Scalar>(log_p.row(r), log_q.row(r));
      out.value += inv_n * kl;
      // d KL / d z_k = p_k * (log p_k - log q_k - KL)
      d_logits.row(r) = inv_n * (log_p.row(r).array().exp() *
                                 (log_p.row(r).array() - log_q.row(r).array() - kl));
    }
    backward<Scalar>(policy, tape, &d_logits, {}, out.grad);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Preference family

/// -(1/beta) mean log sigma(beta (D_chosen - D_rejected)), with
/// D_x = log P_policy(x|q) - log P_reference(x|q). The leading 1/beta is
/// kept as written in the source formulation.
template <typename Scalar>
LossResult<Scalar> dpo_loss(const Policy<Scalar>& policy, const Policy<Scalar>& reference,
                            std::span<const PreferencePair> pairs, double beta) {
  detail::require_frozen(reference);
  detail::require_beta<Scalar>(beta);
  if (pairs.empty()) throw ContractError("dpo_loss: empty batch");
  const Scalar b = static_cast<Scalar>(beta);
  const Scalar inv_n = Scalar(1) / static_cast<Scalar>(pairs.size());
  LossResult<Scalar> out{0, policy.params.zeros_like(), 0};
  for (const auto& pair : pairs) {
    const auto chosen = detail::score(policy, pair.prompt, pair.preferred);
    const auto rejected = detail::score(policy, pair.prompt, pair.dispreferred);
    const Scalar delta_c = chosen.logprob - sequence_logprob(reference, pair.prompt, pair.preferred);
    const Scalar delta_r =
        rejected.logprob - sequence_logprob(reference, pair.prompt, pair.dispreferred);
    const Scalar x = b * (delta_c - delta_r);
    out.value -= inv_n * log_sigmoid(x) / b;
    const Scalar g = -inv_n * log_sigmoid_grad(x);  // d loss / d delta_c
    detail::backprop_logprob(policy, chosen, g, out.grad);
    detail::backprop_logprob(policy, rejected, -g, out.grad);
  }
  return out;
}

/// -(2/beta) mean log sigma(-beta (log P_policy(a|q) - log P_reference(a|q))).
template <typename Scalar>
LossResult<Scalar> npo_loss(const Policy<Scalar>& policy, const Policy<Scalar>& reference,
                            std::span<const SequencePair> forget, double beta) {
  detail::require_frozen(reference);
  detail::require_beta<Scalar>(beta);
  if (forget.empty()) throw ContractError("npo_loss: empty batch");
  const Scalar b = static_cast<Scalar>(beta);
  const Scalar inv_n = Scalar(1) / static_cast<Scalar>(forget.size());
  LossResult<Scalar> out{0, policy.params.zeros_like(), 0};
  for (const auto& ex : forget) {
    const auto s = detail::score(policy, ex.prompt, ex.response);
    const Scalar ratio = s.logprob - sequence_logprob(reference, ex.prompt, ex.response);
    const Scalar x = -b * ratio;
    out.value -= inv_n * Scalar(2) / b * log_sigmoid(x);
    // d/d ratio = -(2/b) * sigma(-x) * (-b) = 2 sigma(-x)
    detail::backprop_logprob(policy, s, inv_n * Scalar(2) * log_sigmoid_grad(x), out.grad);
  }
  return out;
}

/// -mean log sigma(beta/|y_c| log P(y_c|q) - beta/|y_l| log P(y_l|q) - gamma).
/// Reference-free; |y| counts every response token including delimiters.
template <typename Scalar>
LossResult<Scalar> simpo_loss(const Policy<Scalar>& policy, std::span<const PreferencePair> pairs,
                              double beta, double gamma) {
  detail::require_beta<Scalar>(beta);
  if (gamma < 0.0) throw ContractError("simpo_loss: gamma must be nonnegative");
  if (pairs.empty()) throw ContractError("simpo_loss: empty batch");
  const Scalar b = static_cast<Scalar>(beta);
  const Scalar inv_n = Scalar(1) / static_cast<Scalar>(pairs.size());
  LossResult<Scalar> out{0, policy.params.zeros_like(), 0};
  for (const auto& pair : pairs) {
    const auto chosen = detail::score(policy, pair.prompt, pair.preferred);
    const auto rejected = detail::score(policy, pair.prompt, pair.dispreferred);
    const Scalar len_c = static_cast<Scalar>(chosen.response.size());
    const Scalar len_r = static_cast<Scalar>(rejected.response.size());
    const Scalar x = b / len_c * chosen.logprob - b / len_r * rejected.logprob -
                     static_cast<Scalar>(gamma);
    out.value -= inv_n * log_sigmoid(x);
    const Scalar g = -inv_n * log_sigmoid_grad(x);  // d loss / dx
    detail::backprop_logprob(policy, chosen, g * b / len_c, out.grad);
    detail::backprop_logprob(policy, rejected, -g * b / len_r, out.grad);
  }
  return out;
}

/// Mean length-normalized reward gap (beta/|y_c|) log P(y_c) - (beta/|y_l|) log P(y_l),
/// without the margin gamma.
template <typename Scalar>
Scalar simpo_margin(const Policy<Scalar>& policy, std::span<const PreferencePair> pairs,
                    double beta) {
  if (pairs.empty()) throw ContractError("simpo_margin: empty batch");
  Scalar total = 0;
  for (const auto& pair : pairs) {
    const auto yc = strip_padding(pair.preferred);
    const auto yl = strip_padding(pair.dispreferred);
    total += static_cast<Scalar>(beta) *
             (sequence_logprob(policy, pair.prompt, yc) / static_cast<Scalar>(yc.size()) -
              sequence_logprob(policy, pair.prompt, yl) / static_cast<Scalar>(yl.size()));
  }
  return total / static_cast<Scalar>(pairs.size());
}

// ---------------------------------------------------------------------------
// Representation family

template <typename Scalar>
void require_layer(const Policy<Scalar>& policy, const RMUState<Scalar>& state) {
  if (state.layer != policy.config.rmu_layer) {
    throw ContractError("RMU state layer " + std::to_string(state.layer) +
                        " does not match configured rmu_layer " +
                        std::to_string(policy.config.rmu_layer));
  }
  if (state.u.cols() != policy.config.d_model) throw ContractError("RMU direction has wrong size");
}

/// Forget activations pulled to rmu_scale * u, plus rmu_lambda times retain
/// activations pinned to the reference. Both terms are per-token means of
/// the squared distance divided by d_model.
template <typename Scalar>
LossResult<Scalar> rmu_loss(const Policy<Scalar>& policy, const Policy<Scalar>& reference,
                            std::span<const RepresentationSample> forget,
                            std::span<const RepresentationSample> retain,
                            const RMUState<Scalar>& state, double rmu_scale, double rmu_lambda) {
  detail::require_frozen(reference);
  require_layer(policy, state);
  if (rmu_lambda < 0.0) throw ContractError("rmu_lambda must be nonnegative");
  LossResult<Scalar> out{0, policy.params.zeros_like(), 0};
  const Matrix<Scalar> target = static_cast<Scalar>(rmu_scale) * state.u;
  detail::representation_term(policy, static_cast<const Policy<Scalar>*>(nullptr), forget,
                               state.layer, &target, Scalar(1), out, false);
  if (!retain.empty() && rmu_lambda > 0.0) {
    detail::representation_term(policy, &reference, retain, state.layer,
                                static_cast<const Matrix<Scalar>*>(nullptr),
                                static_cast<Scalar>(rmu_lambda), out, false);
  }
  return out;
}

/// The misdirection kernel restricted to reasoning-trace positions; the
/// normalizer is the number of CoT positions in the batch. Samples with an
/// empty span are skipped and counted.
template <typename Scalar>
LossResult<Scalar> unthink_loss(const Policy<Scalar>& policy,
                                std::span<const RepresentationSample> forget_cot,
                                const RMUState<Scalar>& state, double rmu_scale) {
  require_layer(policy, state);
  LossResult<Scalar> out{0, policy.params.zeros_like(), 0};
  const Matrix<Scalar> target = static_cast<Scalar>(rmu_scale) * state.u;
  detail::representation_term(policy, static_cast<const Policy<Scalar>*>(nullptr), forget_cot,
                               state.layer, &target, Scalar(1), out, true);
  return out;
}

/// Representation retention on reasoning traces: activations pinned to the
/// reference's (the RMU retain kernel on CoT spans).
template <typename Scalar>
LossResult<Scalar> cot_retention_loss(const Policy<Scalar>& policy,
                                      const Policy<Scalar>& reference,
                                      std::span<const RepresentationSample> cot_retain,
                                      const RMUState<Scalar>& state) {
  detail::require_frozen(reference);
  require_layer(policy, state);
  LossResult<Scalar> out{0, policy.params.zeros_like(), 0};
  detail::representation_term(policy, &reference, cot_retain, state.layer,
                              static_cast<const Matrix<Scalar>*>(nullptr), Scalar(1), out, false);
  return out;
}

/// RMU + alpha_unthink * unthinking + beta_cot * CoT retention.
template <typename Scalar>
LossResult<Scalar> r2mu_loss(const Policy<Scalar>& policy, const Policy<Scalar>& reference,
                             std::span<const RepresentationSample> forget,
                             std::span<const RepresentationSample> retain,
                             std::span<const RepresentationSample> forget_cot,
                             std::span<const RepresentationSample> cot_retain,
                             const RMUState<Scalar>& state, const ObjectiveConfig& config) {
  auto out = rmu_loss(policy, reference, forget, retain, state, config.rmu_scale, config.rmu_lambda);
  if (config.alpha_unthink > 0.0) {
    const auto u = unthink_loss(policy, forget_cot, state, config.rmu_scale);
    out.value += static_cast<Scalar>(config.alpha_unthink) * u.value;
    out.grad.add_scaled(u.grad, static_cast<Scalar>(config.alpha_unthink));
    out.skipped += u.skipped;
  }
  if (config.beta_cot > 0.0 && !cot_retain.empty()) {
    const auto c = cot_retention_loss(policy, reference, cot_retain, state);
    out.value += static_cast<Scalar>(config.beta_cot) * c.value;
    out.grad.add_scaled(c.grad, static_cast<Scalar>(config.beta_cot));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Refusal and composite

/// NLL on refusal targets (c_idk, a_idk) given q, plus lambda * NLL(retain).
template <typename Scalar>
LossResult<Scalar> idk_loss(const Policy<Scalar>& policy, std::span<const SequencePair> refusals,
                            std::span<const SequencePair> retain, double lambda) {
  if (refusals.empty()) throw ContractError("idk_loss: empty refusal set");
  if (lambda < 0.0) throw ContractError("idk_loss: lambda must be nonnegative");
  auto out = nll_loss(policy, refusals);
  if (lambda > 0.0 && !retain.empty()) {
    const auto r = nll_loss(policy, retain);
    out.value += static_cast<Scalar>(lambda) * r.value;
    out.grad.add_scaled(r.grad, static_cast<Scalar>(lambda));
  }
  return out;
}

/// 1(t > T) * SimPO(paired) + alpha * NLL(counterfactuals) + omega * l_r(retain).
/// During warmup the paired set is not read at all (it may be empty).
/// l_r is NLL unless config selects KL, which needs `reference`.
template <typename Scalar>
LossResult<Scalar> cipo_loss(const Policy<Scalar>& policy, std::span<const PreferencePair> paired,
                             std::span<const SequencePair> counterfactuals,
                             std::span<const SequencePair> retain, int epoch,
                             const ObjectiveConfig& config,
                             const Policy<Scalar>* reference = nullptr) {
  if (epoch < 1) throw ContractError("cipo_loss: epoch must be >= 1");
  if (epoch > config.total_E) throw ContractError("cipo_loss: epoch exceeds total_E");
  LossResult<Scalar> out{0, policy.params.zeros_like(), 0};
  auto add = [&](const LossResult<Scalar>& term, double weight) {
    out.value += static_cast<Scalar>(weight) * term.value;
    out.grad.add_scaled(term.grad, static_cast<Scalar>(weight));
  };
  if (epoch > config.warmup_T) add(simpo_loss(policy, paired, config.beta, config.gamma), 1.0);
  if (config.alpha_nll > 0.0) add(nll_loss(policy, counterfactuals), config.alpha_nll);
  if (config.omega_retain > 0.0 && !retain.empty()) {
    if (config.retain_loss == RetainLoss::kKl) {
      if (reference == nullptr) throw ContractError("cipo_loss: KL retain needs a reference");
      add(kl_retain_loss(policy, *reference, retain), config.omega_retain);
    } else {
      add(nll_loss(policy, retain), config.omega_retain);
    }
  }
  return out;
}

}  // namespace unlearn
