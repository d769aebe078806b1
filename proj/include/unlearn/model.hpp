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

// Tiny pre-norm decoder-only transformer with learned positional
// embeddings and an explicit backward pass. Everything is templated on the
// scalar type: double for gradient checks, float for training runs.

#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "unlearn/errors.hpp"
#include "unlearn/model_config.hpp"
#include "unlearn/random.hpp"
#include "unlearn/vocabulary.hpp"

namespace unlearn {

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <typename Scalar>
using ColVector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar>
struct BlockWeights {
  Matrix<Scalar> ln1_gain, ln1_bias;
  Matrix<Scalar> w_query, w_key, w_value, w_attn_out, b_attn_out;
  Matrix<Scalar> ln2_gain, ln2_bias;
  Matrix<Scalar> w_ff_in, b_ff_in, w_ff_out, b_ff_out;
};

/// Named parameter arrays in declaration order. Gradients share this type.
template <typename Scalar>
struct Parameters {
  Matrix<Scalar> tok_embedding;  // [vocab, d_model]
  Matrix<Scalar> pos_embedding;  // [max_seq_len, d_model]
  std::vector<BlockWeights<Scalar>> blocks;
  Matrix<Scalar> lnf_gain, lnf_bias;
  Matrix<Scalar> w_unembed;  // [d_model, vocab]
  Matrix<Scalar> b_unembed;

  static Parameters zeros(const ModelConfig& c) {
    Parameters p;
    const int d = c.d_model;
    p.tok_embedding = Matrix<Scalar>::Zero(c.vocab_size, d);
    p.pos_embedding = Matrix<Scalar>::Zero(c.max_seq_len, d);
    p.blocks.resize(static_cast<std::size_t>(c.n_layers));
    for (auto& b : p.blocks) {
      b.ln1_gain = Matrix<Scalar>::Zero(1, d);
      b.ln1_bias = Matrix<Scalar>::Zero(1, d);
      b.w_query = Matrix<Scalar>::Zero(d, d);
      b.w_key = Matrix<Scalar>::Zero(d, d);
      b.w_value = Matrix<Scalar>::Zero(d, d);
      b.w_attn_out = Matrix<Scalar>::Zero(d, d);
      b.b_attn_out = Matrix<Scalar>::Zero(1, d);
      b.ln2_gain = Matrix<Scalar>::Zero(1, d);
      b.ln2_bias = Matrix<Scalar>::Zero(1, d);
      b.w_ff_in = Matrix<Scalar>::Zero(d, c.d_ff);
      b.b_ff_in = Matrix<Scalar>::Zero(1, c.d_ff);
      b.w_ff_out = Matrix<Scalar>::Zero(c.d_ff, d);
      b.b_ff_out = Matrix<Scalar>::Zero(1, d);
    }
    p.lnf_gain = Matrix<Scalar>::Zero(1, d);
    p.lnf_bias = Matrix<Scalar>::Zero(1, d);
    p.w_unembed = Matrix<Scalar>::Zero(d, c.vocab_size);
    p.b_unembed = Matrix<Scalar>::Zero(1, c.vocab_size);
    return p;
  }

  /// f(name, matrix) over every array in declaration order.
  template <typename F>
  void for_each(F&& f) {
    visit(*this, f);
  }
  template <typename F>
  void for_each(F&& f) const {
    visit(*this, f);
  }

  /// Applies f(mine, theirs) pairwise; shapes must match.
  template <typename F>
  void zip(const Parameters& other, F&& f) {
    std::vector<const Matrix<Scalar>*> theirs;
    other.for_each([&](const std::string&, const Matrix<Scalar>& m) { theirs.push_back(&m); });
    std::size_t i = 0;
    for_each([&](const std::string& name, Matrix<Scalar>& m) {
      if (i >= theirs.size() || theirs[i]->rows() != m.rows() || theirs[i]->cols() != m.cols()) {
        throw ContractError("parameter shape mismatch at " + name);
      }
      f(m, *theirs[i++]);
    });
    if (i != theirs.size()) throw ContractError("parameter count mismatch");
  }

  Parameters& operator+=(const Parameters& o) {
    zip(o, [](Matrix<Scalar>& a, const Matrix<Scalar>& b) { a += b; });
    return *this;
  }

  /// this += scale * o
  void add_scaled(const Parameters& o, Scalar scale) {
    zip(o, [scale](Matrix<Scalar>& a, const Matrix<Scalar>& b) { a += scale * b; });
  }

  void scale(Scalar s) {
    for_each([s](const std::string&, Matrix<Scalar>& m) { m *= s; });
  }

  void set_zero() {
    for_each([](const std::string&, Matrix<Scalar>& m) { m.setZero(); });
  }

  Parameters zeros_like() const {
    Parameters p = *this;
    p.set_zero();
    return p;
  }

  bool all_finite() const {
    bool ok = true;
    for_each([&](const std::string&, const Matrix<Scalar>& m) { ok = ok && m.allFinite(); });
    return ok;
  }

  std::size_t count() const {
    std::size_t n = 0;
    for_each([&](const std::string&, const Matrix<Scalar>& m) {
      n += static_cast<std::size_t>(m.size());
    });
    return n;
  }

  template <typename Other>
  Parameters<Other> cast() const {
    Parameters<Other> out;
    out.tok_embedding = tok_embedding.template cast<Other>();
    out.pos_embedding = pos_embedding.template cast<Other>();
    out.blocks.resize(blocks.size());
    for (std::size_t i = 0; i < blocks.size(); ++i) {
      const auto& b = blocks[i];
      auto& o = out.blocks[i];
      o.ln1_gain = b.ln1_gain.template cast<Other>();
      o.ln1_bias = b.ln1_bias.template cast<Other>();
      o.w_query = b.w_query.template cast<Other>();
      o.w_key = b.w_key.template cast<Other>();
      o.w_value = b.w_value.template cast<Other>();
      o.w_attn_out = b.w_attn_out.template cast<Other>();
      o.b_attn_out = b.b_attn_out.template cast<Other>();
      o.ln2_gain = b.ln2_gain.template cast<Other>();
      o.ln2_bias = b.ln2_bias.template cast<Other>();
      o.w_ff_in = b.w_ff_in.template cast<Other>();
      o.b_ff_in = b.b_ff_in.template cast<Other>();
      o.w_ff_out = b.w_ff_out.template cast<Other>();
      o.b_ff_out = b.b_ff_out.template cast<Other>();
    }
    out.lnf_gain = lnf_gain.template cast<Other>();
    out.lnf_bias = lnf_bias.template cast<Other>();
    out.w_unembed = w_unembed.template cast<Other>();
    out.b_unembed = b_unembed.template cast<Other>();
    return out;
  }

  bool operator==(const Parameters& o) const {
    bool eq = true;
    std::vector<const Matrix<Scalar>*> theirs;
    o.for_each([&](const std::string&, const Matrix<Scalar>& m) { theirs.push_back(&m); });
    std::size_t i = 0;
    for_each([&](const std::string&, const Matrix<Scalar>& m) {
      eq = eq && i < theirs.size() && theirs[i]->rows() == m.rows() &&
           theirs[i]->cols() == m.cols() && *theirs[i] == m;
      ++i;
    });
    return eq && i == theirs.size();
  }

 private:
  template <typename Self, typename F>
  static void visit(Self& self, F& f) {
    f(std::string("tok_embedding"), self.tok_embedding);
    f(std::string("pos_embedding"), self.pos_embedding);
    for (std::size_t i = 0; i < self.blocks.size(); ++i) {
      auto& b = self.blocks[i];
      const std::string p = "block" + std::to_string(i) + ".";
      f(p + "ln1_gain", b.ln1_gain);
      f(p + "ln1_bias", b.ln1_bias);
      f(p + "w_query", b.w_query);
      f(p + "w_key", b.w_key);
      f(p + "w_value", b.w_value);
      f(p + "w_attn_out", b.w_attn_out);
      f(p + "b_attn_out", b.b_attn_out);
      f(p + "ln2_gain", b.ln2_gain);
      f(p + "ln2_bias", b.ln2_bias);
      f(p + "w_ff_in", b.w_ff_in);
      f(p + "b_ff_in", b.b_ff_in);
      f(p + "w_ff_out", b.w_ff_out);
      f(p + "b_ff_out", b.b_ff_out);
    }
    f(std::string("lnf_gain"), self.lnf_gain);
    f(std::string("lnf_bias"), self.lnf_bias);
    f(std::string("w_unembed"), self.w_unembed);
    f(std::string("b_unembed"), self.b_unembed);
  }
};

enum class PolicyRole { kTrainable, kFrozenReference };

template <typename Scalar>
struct Policy {
  ModelConfig config;
  Parameters<Scalar> params;
  PolicyRole role = PolicyRole::kTrainable;

  bool frozen() const noexcept { return role == PolicyRole::kFrozenReference; }
};

/// Normal(0, 0.08) matrices, residual projections scaled by
/// 1/sqrt(2 n_layers), unit gains and zero biases.
template <typename Scalar>
Policy<Scalar> init_policy(const ModelConfig& config, std::uint64_t seed) {
  config.validate();
  Policy<Scalar> policy{config.resolved(), Parameters<Scalar>::zeros(config), PolicyRole::kTrainable};
  Rng rng(mix_seed(seed, "init"));
  const double std_dev = 0.08;
  const double proj_scale = 1.0 / std::sqrt(2.0 * config.n_layers);
  auto fill_normal = [&](Matrix<Scalar>& m, double s) {
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = static_cast<Scalar>(s * rng.normal());
  };
  auto& p = policy.params;
  fill_normal(p.tok_embedding, std_dev);
  fill_normal(p.pos_embedding, std_dev);
  for (auto& b : p.blocks) {
    b.ln1_gain.setOnes();
    b.ln2_gain.setOnes();
    fill_normal(b.w_query, std_dev);
    fill_normal(b.w_key, std_dev);
    fill_normal(b.w_value, std_dev);
    fill_normal(b.w_attn_out, std_dev * proj_scale);
    fill_normal(b.w_ff_in, std_dev);
    fill_normal(b.w_ff_out, std_dev * proj_scale);
  }
  p.lnf_gain.setOnes();
  fill_normal(p.w_unembed, std_dev);
  return policy;
}

/// Every parameter zero: logits are identically zero, so next-token
/// distributions are uniform. A test hook.
template <typename Scalar>
Policy<Scalar> zero_policy(const ModelConfig& config) {
  config.validate();
  return {config.resolved(), Parameters<Scalar>::zeros(config), PolicyRole::kTrainable};
}

template <typename Scalar>
Policy<Scalar> snapshot_frozen(const Policy<Scalar>& policy) {
  Policy<Scalar> copy = policy;
  copy.role = PolicyRole::kFrozenReference;
  return copy;
}

// ---------------------------------------------------------------------------
// Forward pass with tape

template <typename Scalar>
struct LayerNormTape {
  Matrix<Scalar> xhat;
  ColVector<Scalar> inv_std;
};

template <typename Scalar>
struct BlockTape {
  LayerNormTape<Scalar> ln1;
  Matrix<Scalar> ln1_out, query, key, value;
  std::vector<Matrix<Scalar>> attn_probs;  // per head, [len, len]
  Matrix<Scalar> attn_mix;
  LayerNormTape<Scalar> ln2;
  Matrix<Scalar> ln2_out, ff_pre, ff_act;
};

template <typename Scalar>
struct ForwardTape {
  TokenIds tokens;
  /// residual[0] = embeddings; residual[l + 1] = output of block l.
  std::vector<Matrix<Scalar>> residual;
  std::vector<BlockTape<Scalar>> blocks;
  LayerNormTape<Scalar> lnf;
  Matrix<Scalar> lnf_out;
  Matrix<Scalar> logits;  // empty when the pass stopped early
  bool has_logits = false;

  std::size_t length() const { return tokens.size(); }
  /// Activations after block `layer`.
  const Matrix<Scalar>& hidden(int layer) const {
    return residual.at(static_cast<std::size_t>(layer) + 1);
  }
};

namespace detail {

inline constexpr double kLayerNormEps = 1e-5;

template <typename Scalar>
Matrix<Scalar> layer_norm(const Matrix<Scalar>& x, const Matrix<Scalar>& gain,
                          const Matrix<Scalar>& bias, LayerNormTape<Scalar>& tape) {
  const auto n = static_cast<Scalar>(x.cols());
  const ColVector<Scalar> mean = x.rowwise().sum() / n;
  Matrix<Scalar> centered = x.colwise() - mean;
  const ColVector<Scalar> var = centered.array().square().rowwise().sum() / n;
  tape.inv_std = (var.array() + static_cast<Scalar>(kLayerNormEps)).rsqrt();
  tape.xhat = centered.array().colwise() * tape.inv_std.array();
  Matrix<Scalar> y = tape.xhat.array().rowwise() * gain.row(0).array();
  y.rowwise() += bias.row(0);
  return y;
}

template <typename Scalar>
Matrix<Scalar> layer_norm_backward(const Matrix<Scalar>& dy, const Matrix<Scalar>& gain,
                                   const LayerNormTape<Scalar>& tape, Matrix<Scalar>& d_gain,
                                   Matrix<Scalar>& d_bias) {
  d_gain += (dy.array() * tape.xhat.array()).colwise().sum().matrix();
  d_bias += dy.colwise().sum();
  const Matrix<Scalar> dxhat = dy.array().rowwise() * gain.row(0).array();
  const auto n = static_cast<Scalar>(dy.cols());
  const ColVector<Scalar> sum_d = dxhat.rowwise().sum();
  const ColVector<Scalar> sum_dx = (dxhat.array() * tape.xhat.array()).rowwise().sum();
  Matrix<Scalar> dx = (n * dxhat.array()).colwise() - sum_d.array();
  dx.array() -= tape.xhat.array().colwise() * sum_dx.array();
  dx.array().colwise() *= tape.inv_std.array() / n;
  return dx;
}

template <typename Scalar>
Scalar gelu(Scalar x) {
  const Scalar c = static_cast<Scalar>(0.7978845608028654);
  const Scalar k = static_cast<Scalar>(0.044715);
  return static_cast<Scalar>(0.5) * x * (Scalar(1) + std::tanh(c * (x + k * x * x * x)));
}

template <typename Scalar>
Scalar gelu_grad(Scalar x) {
  const Scalar c = static_cast<Scalar>(0.7978845608028654);
  const Scalar k = static_cast<Scalar>(0.044715);
  const Scalar t = std::tanh(c * (x + k * x * x * x));
  return static_cast<Scalar>(0.5) * (Scalar(1) + t) +
         static_cast<Scalar>(0.5) * x * (Scalar(1) - t * t) * c * (Scalar(1) + Scalar(3) * k * x * x);
}

template <typename Scalar>
void check_tokens(const ModelConfig& c, std::span<const TokenId> tokens) {
  if (tokens.empty()) throw ContractError("empty token sequence");
  if (tokens.size() > static_cast<std::size_t>(c.max_seq_len)) {
    throw ContractError("sequence of length " + std::to_string(tokens.size()) +
                        " exceeds max_seq_len " + std::to_string(c.max_seq_len));
  }
  for (TokenId t : tokens) {
    if (t < 0 || t >= c.vocab_size) throw ContractError("token id out of range");
  }
}

}  // namespace detail

/// Runs blocks 0..stop_after_layer (all blocks and the unembedding when
/// stop_after_layer < 0) and records what backward() needs.
template <typename Scalar>
ForwardTape<Scalar> forward(const Policy<Scalar>& policy, std::span<const TokenId> tokens,
                            int stop_after_layer = -1) {
  const ModelConfig& c = policy.config;
  detail::check_tokens<Scalar>(c, tokens);
  const auto& p = policy.params;
  const auto len = static_cast<Eigen::Index>(tokens.size());
  const int d = c.d_model;
  const int n_heads = c.n_heads;
  const int dh = d / n_heads;
  const Scalar scale = Scalar(1) / std::sqrt(static_cast<Scalar>(dh));
  const int depth = stop_after_layer < 0 ? c.n_layers : stop_after_layer + 1;
  if (depth > c.n_layers) throw ContractError("layer index out of range");

  ForwardTape<Scalar> tape;
  tape.tokens.assign(tokens.begin(), tokens.end());
  tape.residual.resize(static_cast<std::size_t>(depth) + 1);
  tape.blocks.resize(static_cast<std::size_t>(depth));

  Matrix<Scalar> x(len, d);
  for (Eigen::Index i = 0; i < len; ++i) {
    x.row(i) = p.tok_embedding.row(tokens[static_cast<std::size_t>(i)]) + p.pos_embedding.row(i);
  }
  tape.residual[0] = x;

  for (int l = 0; l < depth; ++l) {
    const auto& w = p.blocks[static_cast<std::size_t>(l)];
    auto& bt = tape.blocks[static_cast<std::size_t>(l)];
    bt.ln1_out = detail::layer_norm(x, w.ln1_gain, w.ln1_bias, bt.ln1);
    bt.query = bt.ln1_out * w.w_query;
    bt.key = bt.ln1_out * w.w_key;
    bt.value = bt.ln1_out * w.w_value;
    bt.attn_mix.resize(len, d);
    bt.attn_probs.resize(static_cast<std::size_t>(n_heads));
    for (int h = 0; h < n_heads; ++h) {
      Matrix<Scalar> scores =
          (bt.query.middleCols(h * dh, dh) * bt.key.middleCols(h * dh, dh).transpose()) * scale;
      for (Eigen::Index i = 0; i < len; ++i) {
        const Scalar m = scores.row(i).head(i + 1).maxCoeff();
        Scalar total = 0;
        for (Eigen::Index j = 0; j < len; ++j) {
          const Scalar e = j <= i ? std::exp(scores(i, j) - m) : Scalar(0);
          scores(i, j) = e;
          total += e;
        }
        scores.row(i) /= total;
      }
      bt.attn_mix.middleCols(h * dh, dh) = scores * bt.value.middleCols(h * dh, dh);
      bt.attn_probs[static_cast<std::size_t>(h)] = std::move(scores);
    }
    Matrix<Scalar> mid = x + bt.attn_mix * w.w_attn_out;
    mid.rowwise() += w.b_attn_out.row(0);
    bt.ln2_out = detail::layer_norm(mid, w.ln2_gain, w.ln2_bias, bt.ln2);
    bt.ff_pre = bt.ln2_out * w.w_ff_in;
    bt.ff_pre.rowwise() += w.b_ff_in.row(0);
    bt.ff_act = bt.ff_pre.unaryExpr([](Scalar v) { return detail::gelu(v); });
    x = mid + bt.ff_act * w.w_ff_out;
    x.rowwise() += w.b_ff_out.row(0);
    tape.residual[static_cast<std::size_t>(l) + 1] = x;
  }

  if (depth == c.n_layers && stop_after_layer < 0) {
    tape.lnf_out = detail::layer_norm(x, p.lnf_gain, p.lnf_bias, tape.lnf);
    tape.logits = tape.lnf_out * p.w_unembed;
    tape.logits.rowwise() += p.b_unembed.row(0);
    tape.has_logits = true;
  }
  return tape;
}

template <typename Scalar>
struct HiddenGradient {
  int layer = 0;
  Matrix<Scalar> grad;  // [len, d_model]
};

/// Accumulates into `grads` the parameter gradient of a scalar whose
/// partials are d_logits (may be null) and d_hidden at selected layers.
template <typename Scalar>
void backward(const Policy<Scalar>& policy, const ForwardTape<Scalar>& tape,
              const Matrix<Scalar>* d_logits, std::span<const HiddenGradient<Scalar>> d_hidden,
              Parameters<Scalar>& grads) {
  const ModelConfig& c = policy.config;
  const auto& p = policy.params;
  const auto len = static_cast<Eigen::Index>(tape.length());
  const int d = c.d_model;
  const int n_heads = c.n_heads;
  const int dh = d / n_heads;
  const Scalar scale = Scalar(1) / std::sqrt(static_cast<Scalar>(dh));
  const int depth = static_cast<int>(tape.blocks.size());

  Matrix<Scalar> dx = Matrix<Scalar>::Zero(len, d);
  if (d_logits != nullptr) {
    if (!tape.has_logits) throw ContractError("logit gradient on a truncated tape");
    grads.w_unembed.noalias() += tape.lnf_out.transpose() * (*d_logits);
    grads.b_unembed += d_logits->colwise().sum();
    const Matrix<Scalar> d_lnf = (*d_logits) * p.w_unembed.transpose();
    dx += detail::layer_norm_backward(d_lnf, p.lnf_gain, tape.lnf, grads.lnf_gain, grads.lnf_bias);
  }

  for (int l = depth - 1; l >= 0; --l) {
    for (const auto& hg : d_hidden) {
      if (hg.layer == l) dx += hg.grad;
      if (hg.layer >= depth) throw ContractError("hidden gradient beyond computed depth");
    }
    const auto& w = p.blocks[static_cast<std::size_t>(l)];
    auto& g = grads.blocks[static_cast<std::size_t>(l)];
    const auto& bt = tape.blocks[static_cast<std::size_t>(l)];

    // Feed-forward sublayer.
    g.w_ff_out.noalias() += bt.ff_act.transpose() * dx;
    g.b_ff_out += dx.colwise().sum();
    Matrix<Scalar> d_pre = dx * w.w_ff_out.transpose();
    d_pre.array() *= bt.ff_pre.unaryExpr([](Scalar v) { return detail::gelu_grad(v); }).array();
    g.w_ff_in.noalias() += bt.ln2_out.transpose() * d_pre;
    g.b_ff_in += d_pre.colwise().sum();
    const Matrix<Scalar> d_ln2 = d_pre * w.w_ff_in.transpose();
    Matrix<Scalar> d_mid =
        dx + detail::layer_norm_backward(d_ln2, w.ln2_gain, bt.ln2, g.ln2_gain, g.ln2_bias);

    // Attention sublayer.
    g.w_attn_out.noalias() += bt.attn_mix.transpose() * d_mid;
    g.b_attn_out += d_mid.colwise().sum();
    const Matrix<Scalar> d_mix = d_mid * w.w_attn_out.transpose();
    Matrix<Scalar> dq(len, d), dk(len, d), dv(len, d);
    for (int h = 0; h < n_heads; ++h) {
      const auto& probs = bt.attn_probs[static_cast<std::size_t>(h)];
      const Matrix<Scalar> d_mix_h = d_mix.middleCols(h * dh, dh);
      dv.middleCols(h * dh, dh) = probs.transpose() * d_mix_h;
      const Matrix<Scalar> d_probs = d_mix_h * bt.value.middleCols(h * dh, dh).transpose();
      const ColVector<Scalar> row_dot = (d_probs.array() * probs.array()).rowwise().sum();
      const Matrix<Scalar> d_scores =
          (probs.array() * (d_probs.array().colwise() - row_dot.array())).matrix() * scale;
      dq.middleCols(h * dh, dh) = d_scores * bt.key.middleCols(h * dh, dh);
      dk.middleCols(h * dh, dh) = d_scores.transpose() * bt.query.middleCols(h * dh, dh);
    }
    g.w_query.noalias() += bt.ln1_out.transpose() * dq;
    g.w_key.noalias() += bt.ln1_out.transpose() * dk;
    g.w_value.noalias() += bt.ln1_out.transpose() * dv;
    const Matrix<Scalar> d_ln1 =
        dq * w.w_query.transpose() + dk * w.w_key.transpose() + dv * w.w_value.transpose();
    dx = d_mid + detail::layer_norm_backward(d_ln1, w.ln1_gain, bt.ln1, g.ln1_gain, g.ln1_bias);
  }

  for (Eigen::Index i = 0; i < len; ++i) {
    grads.tok_embedding.row(tape.tokens[static_cast<std::size_t>(i)]) += dx.row(i);
    grads.pos_embedding.row(i) += dx.row(i);
  }
}

// ---------------------------------------------------------------------------
// Convenience queries

template <typename Scalar>
Matrix<Scalar> forward_logits(const Policy<Scalar>& policy, std::span<const TokenId> tokens) {
  return forward(policy, tokens).logits;
}

template <typename Scalar>
Matrix<Scalar> hidden_at_layer(const Policy<Scalar>& policy, std::span<const TokenId> tokens,
                               int layer) {
  if (layer < 0 || layer >= policy.config.n_layers) {
    throw ContractError("layer " + std::to_string(layer) + " out of range");
  }
  return forward(policy, tokens, layer).hidden(layer);
}

/// Row-wise log-softmax.
template <typename Scalar>
Matrix<Scalar> log_softmax_rows(const Matrix<Scalar>& logits) {
  Matrix<Scalar> out(logits.rows(), logits.cols());
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    const Scalar m = logits.row(i).maxCoeff();
    const Scalar lse = m + std::log((logits.row(i).array() - m).exp().sum());
    out.row(i) = logits.row(i).array() - lse;
  }
  return out;
}

/// Response with trailing padding removed; PAD after EOS carries no mass.
inline std::span<const TokenId> strip_padding(std::span<const TokenId> response) {
  std::size_t n = response.size();
  while (n > 0 && response[n - 1] == special::kPad) --n;
  return response.first(n);
}

inline TokenIds concat(std::span<const TokenId> a, std::span<const TokenId> b) {
  TokenIds out(a.begin(), a.end());
  out.insert(out.end(), b.begin(), b.end());
  return out;
}

/// log P(response | prompt) = sum over response positions of the
/// log-softmax at the realized token.
template <typename Scalar>
Scalar sequence_logprob(const Policy<Scalar>& policy, std::span<const TokenId> prompt,
                        std::span<const TokenId> response) {
  response = strip_padding(response);
  if (response.empty()) throw ContractError("empty response");
  if (prompt.empty()) throw ContractError("empty prompt");
  const TokenIds tokens = concat(prompt, response);
  const auto logp = log_softmax_rows(forward_logits(policy, tokens));
  Scalar total = 0;
  for (std::size_t i = 0; i < response.size(); ++i) {
    total += logp(static_cast<Eigen::Index>(prompt.size() + i - 1), response[i]);
  }
  return total;
}

// ---------------------------------------------------------------------------
// Decoding

struct DecodeOptions {
  enum class Mode { kGreedy, kSampled };
  Mode mode = Mode::kGreedy;
  double temperature = 1.0;
  std::uint64_t seed = 0;
  int max_new = 64;

  static DecodeOptions greedy(int max_new) { return {Mode::kGreedy, 1.0, 0, max_new}; }
  static DecodeOptions sampled(double temperature, std::uint64_t seed, int max_new) {
    return {Mode::kSampled, temperature, seed, max_new};
  }
};

/// PAD, BOS and UNK are never emitted.
inline bool decodable(TokenId id) {
  return id != special::kPad && id != special::kBos && id != special::kUnk;
}

/// Next-token distribution over decodable tokens at temperature t.
template <typename Scalar>
std::vector<double> next_token_distribution(const Eigen::Ref<const ColVector<Scalar>>& logits,
                                            double temperature) {
  std::vector<double> probs(static_cast<std::size_t>(logits.size()), 0.0);
  double m = -std::numeric_limits<double>::infinity();
  for (Eigen::Index v = 0; v < logits.size(); ++v) {
    if (decodable(static_cast<TokenId>(v))) m = std::max(m, static_cast<double>(logits[v]));
  }
  double total = 0.0;
  for (Eigen::Index v = 0; v < logits.size(); ++v) {
    if (!decodable(static_cast<TokenId>(v))) continue;
    const double e = std::exp((static_cast<double>(logits[v]) - m) / temperature);
    probs[static_cast<std::size_t>(v)] = e;
    total += e;
  }
  for (auto& p : probs) p /= total;
  return probs;
}

/// Generates until EOS (included in the output) or max_new tokens. The
/// prompt is truncated from neither end; generation also stops at
/// max_seq_len.
template <typename Scalar>
TokenIds decode(const Policy<Scalar>& policy, std::span<const TokenId> prompt,
                const DecodeOptions& options) {
  if (options.max_new < 1) throw ContractError("max_new must be at least 1");
  const bool greedy = options.mode == DecodeOptions::Mode::kGreedy || options.temperature <= 1e-8;
  Rng rng(options.seed);
  TokenIds seq(prompt.begin(), prompt.end());
  TokenIds out;
  const auto limit = static_cast<std::size_t>(policy.config.max_seq_len);
  while (static_cast<int>(out.size()) < options.max_new && seq.size() < limit) {
    const auto tape = forward(policy, seq);
    const ColVector<Scalar> last = tape.logits.row(tape.logits.rows() - 1).transpose();
    TokenId next = special::kEos;
    if (greedy) {
      Scalar best = -std::numeric_limits<Scalar>::infinity();
      for (Eigen::Index v = 0; v < last.size(); ++v) {
        if (decodable(static_cast<TokenId>(v)) && last[v] > best) {
          best = last[v];
          next = static_cast<TokenId>(v);
        }
      }
    } else {
      const auto probs = next_token_distribution<Scalar>(last, options.temperature);
      const double u = rng.uniform();
      double acc = 0.0;
      next = special::kEos;
      for (std::size_t v = 0; v < probs.size(); ++v) {
        if (probs[v] <= 0.0) continue;
        acc += probs[v];
        next = static_cast<TokenId>(v);
        if (u < acc) break;
      }
    }
    seq.push_back(next);
    out.push_back(next);
    if (next == special::kEos) break;
  }
  return out;
}

}  // namespace unlearn
