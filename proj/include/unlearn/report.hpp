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

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace unlearn {

/// One method's line of the comparison table.
struct ReportRow {
  std::string method;
  bool reference = false;  // the target model; never marked best
  std::optional<double> MU, AFE, CFE, probe_accuracy, probe_perplexity;
  std::optional<double> learning_rate;
  std::optional<double> validation_score;
  std::vector<std::string> gaps;
  bool operator==(const ReportRow&) const = default;
};

inline constexpr const char* kReportColumns[] = {"MU", "AFE", "CFE", "Probe Acc", "Probe PPL"};

/// Reads metrics.json from a run or target directory. Missing files or
/// missing aggregates become gaps rather than errors.
ReportRow load_report_row(const std::filesystem::path& dir, const std::string& method, bool reference);

/// Column values in kReportColumns order.
std::vector<std::optional<double>> row_values(const ReportRow& row);

/// Per column, the indices of non-reference rows holding the best value
/// (highest, except perplexity which is lowest).
std::vector<std::vector<std::size_t>> best_rows(std::span<const ReportRow> rows);

/// Markdown table with best values in bold and gaps shown as "n/a".
std::string render_markdown(std::span<const ReportRow> rows);

/// Inverse of render_markdown for the numeric columns (4 decimals).
std::vector<ReportRow> parse_markdown(const std::string& table);

nlohmann::json report_json(std::span<const ReportRow> rows);
std::vector<ReportRow> rows_from_json(const nlohmann::json& j);

}  // namespace unlearn
