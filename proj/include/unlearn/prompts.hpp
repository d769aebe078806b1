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

#include <map>
#include <string>
#include <string_view>

namespace unlearn::prompts {

// Verbatim copies of prompts/*.txt, compiled in by the build.
extern const std::string_view counterfactual_answer;  // {question} {answer}
extern const std::string_view counterfactual_cot;     // {question} {answer}
extern const std::string_view judge_answer;    // {question} {reference} {answer}
extern const std::string_view judge_leakage;   // {answer} {question} {generated_cot}

/// Replaces `{key}` for every key in `values`. Braces that do not enclose a
/// known key (the JSON example in the judge prompt) are left untouched.
inline std::string fill(std::string_view tmpl,
                        const std::map<std::string, std::string>& values) {
  std::string out;
  out.reserve(tmpl.size() + 64);
  std::size_t i = 0;
  while (i < tmpl.size()) {
    if (tmpl[i] == '{') {
      const auto close = tmpl.find('}', i + 1);
      if (close != std::string_view::npos) {
        const std::string key(tmpl.substr(i + 1, close - i - 1));
        const auto it = values.find(key);
        if (it != values.end()) {
          out += it->second;
          i = close + 1;
          continue;
        }
      }
    }
    out += tmpl[i++];
  }
  return out;
}

}  // namespace unlearn::prompts
