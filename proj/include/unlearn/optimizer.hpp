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

// Adam with bias correction and no weight decay.

#pragma once

#include <cmath>

#include "unlearn/model.hpp"

namespace unlearn {

template <typename Scalar>
struct AdamState {
  Parameters<Scalar> m;
  Parameters<Scalar> v;
  long step = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  static AdamState for_policy(const Policy<Scalar>& policy) {
    AdamState s;
    s.m = policy.params.zeros_like();
    s.v = policy.params.zeros_like();
    return s;
  }
};

template <typename Scalar>
void apply_update(Policy<Scalar>& policy, const Parameters<Scalar>& grads, AdamState<Scalar>& state,
                  double learning_rate) {
  if (policy.frozen()) throw ContractError("apply_update: policy is a frozen reference");
  if (!(learning_rate > 0.0)) throw ContractError("apply_update: learning rate must be positive");
  state.step += 1;
  const Scalar b1 = static_cast<Scalar>(state.beta1);
  const Scalar b2 = static_cast<Scalar>(state.beta2);
  const Scalar c1 = Scalar(1) - static_cast<Scalar>(std::pow(state.beta1, state.step));
  const Scalar c2 = Scalar(1) - static_cast<Scalar>(std::pow(state.beta2, state.step));
  const Scalar lr = static_cast<Scalar>(learning_rate);
  const Scalar eps = static_cast<Scalar>(state.epsilon);

  state.m.zip(grads, [&](Matrix<Scalar>& m, const Matrix<Scalar>& g) { m = b1 * m + (1 - b1) * g; });
  state.v.zip(grads, [&](Matrix<Scalar>& v, const Matrix<Scalar>& g) {
    v = b2 * v + (1 - b2) * g.cwiseAbs2();
  });
  // Walk the three parameter sets in lockstep through flat pointer lists.
  std::vector<const Matrix<Scalar>*> ms, vs;
  state.m.for_each([&](const std::string&, const Matrix<Scalar>& x) { ms.push_back(&x); });
  state.v.for_each([&](const std::string&, const Matrix<Scalar>& x) { vs.push_back(&x); });
  std::size_t i = 0;
  policy.params.for_each([&](const std::string& name, Matrix<Scalar>& p) {
    if (i >= ms.size() || ms[i]->rows() != p.rows() || ms[i]->cols() != p.cols()) {
      throw ContractError("optimizer state shape mismatch at " + name);
    }
    const auto m_hat = (ms[i]->array() / c1);
    const auto v_hat = (vs[i]->array() / c2);
    p.array() -= lr * m_hat / (v_hat.sqrt() + eps);
    ++i;
  });
}

}  // namespace unlearn
