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

#include "unlearn/objectives.hpp"

namespace unlearn {

void ObjectiveConfig::validate() const {
  if (!(beta > 0.0)) throw ConfigError("beta must be positive");
  if (!(rmu_scale > 0.0)) throw ConfigError("rmu_scale must be positive");
  for (const auto& [name, w] : {std::pair{"gamma", gamma}, {"lambda_retain", lambda_retain},
                                {"alpha_nll", alpha_nll}, {"omega_retain", omega_retain},
                                {"rmu_lambda", rmu_lambda}, {"alpha_unthink", alpha_unthink},
                                {"beta_cot", beta_cot}}) {
    if (!(w >= 0.0)) throw ConfigError(std::string(name) + " must be nonnegative");
  }
  if (warmup_T < 0) throw ConfigError("warmup_T must be nonnegative");
  if (total_E < 1) throw ConfigError("total_E must be positive");
  if (warmup_T > total_E) throw ConfigError("warmup_T must not exceed total_E");
}

void to_json(nlohmann::json& j, const ObjectiveConfig& c) {
  j = nlohmann::json{{"beta", c.beta},
                     {"gamma", c.gamma},
                     {"lambda_retain", c.lambda_retain},
                     {"alpha_nll", c.alpha_nll},
                     {"omega_retain", c.omega_retain},
                     {"rmu_scale", c.rmu_scale},
                     {"rmu_lambda", c.rmu_lambda},
                     {"alpha_unthink", c.alpha_unthink},
                     {"beta_cot", c.beta_cot},
                     {"warmup_T", c.warmup_T},
                     {"total_E", c.total_E},
                     {"retain_loss", c.retain_loss == RetainLoss::kKl ? "kl" : "nll"}};
}

void from_json(const nlohmann::json& j, ObjectiveConfig& c) {
  c = ObjectiveConfig{};
  for (const auto& [key, value] : j.items()) {
    if (key == "beta") c.beta = value.get<double>();
    else if (key == "gamma") c.gamma = value.get<double>();
    else if (key == "lambda_retain") c.lambda_retain = value.get<double>();
    else if (key == "alpha_nll") c.alpha_nll = value.get<double>();
    else if (key == "omega_retain") c.omega_retain = value.get<double>();
    else if (key == "rmu_scale") c.rmu_scale = value.get<double>();
    else if (key == "rmu_lambda") c.rmu_lambda = value.get<double>();
    else if (key == "alpha_unthink") c.alpha_unthink = value.get<double>();
    else if (key == "beta_cot") c.beta_cot = value.get<double>();
    else if (key == "warmup_T") c.warmup_T = value.get<int>();
    else if (key == "total_E") c.total_E = value.get<int>();
    else if (key == "retain_loss") {
      const auto s = value.get<std::string>();
      if (s == "nll") c.retain_loss = RetainLoss::kNll;
      else if (s == "kl") c.retain_loss = RetainLoss::kKl;
      else throw ConfigError("retain_loss must be \"nll\" or \"kl\"");
    } else {
      throw ConfigError("unknown objective key '" + key + "'");
    }
  }
}

}  // namespace unlearn
