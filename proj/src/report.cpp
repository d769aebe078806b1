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

#include "unlearn/report.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "unlearn/errors.hpp"

namespace unlearn {

namespace {

std::optional<double> maybe(const nlohmann::json& j, const char* key) {
  if (!j.is_object() || !j.contains(key) || j[key].is_null()) return std::nullopt;
  return j[key].get<double>();
}

nlohmann::json opt(const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); }

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(' ');
  if (b == std::string::npos) return "";
  return s.substr(b, s.find_last_not_of(' ') - b + 1);
}

std::vector<std::string> cells(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (std::size_t i = 1; i < line.size(); ++i) {
    if (line[i] == '|') {
      out.push_back(trim(cur));
      cur.clear();
    } else {
      cur += line[i];
    }
  }
  return out;
}

}  // namespace

ReportRow load_report_row(const std::filesystem::path& dir, const std::string& method, bool reference) {
  ReportRow row;
  row.method = method;
  row.reference = reference;
  const auto path = dir / "metrics.json";
  std::ifstream in(path);
  if (!in) {
    row.gaps.push_back("no metrics in " + dir.filename().string());
    return row;
  }
  const auto j = nlohmann::json::parse(in);
  row.MU = maybe(j, "MU");
  row.AFE = maybe(j, "AFE");
  row.CFE = maybe(j, "CFE");
  if (j.contains("probe")) {
    row.probe_accuracy = maybe(j["probe"], "accuracy");
    row.probe_perplexity = maybe(j["probe"], "perplexity");
  }
  if (j.contains("gaps")) {
    for (const auto& g : j["gaps"]) row.gaps.push_back(g.get<std::string>());
  }
  const char* names[] = {"MU", "AFE", "CFE", "probe accuracy", "probe perplexity"};
  const auto values = row_values(row);
  for (std::size_t c = 0; c < values.size(); ++c) {
    if (!values[c]) row.gaps.push_back(std::string("missing ") + names[c]);
  }
  return row;
}

std::vector<std::optional<double>> row_values(const ReportRow& row) {
  return {row.MU, row.AFE, row.CFE, row.probe_accuracy, row.probe_perplexity};
}

std::vector<std::vector<std::size_t>> best_rows(std::span<const ReportRow> rows) {
  constexpr std::size_t kColumns = std::size(kReportColumns);
  std::vector<std::vector<std::size_t>> best(kColumns);
  for (std::size_t c = 0; c < kColumns; ++c) {
    const bool lower = c == kColumns - 1;
    std::optional<double> top;
    for (const auto& row : rows) {
      const auto v = row_values(row)[c];
      if (row.reference || !v) continue;
      if (!top || (lower ? *v < *top : *v > *top)) top = v;
    }
    for (std::size_t r = 0; r < rows.size(); ++r) {
      const auto v = row_values(rows[r])[c];
      if (top && !rows[r].reference && v && *v == *top) best[c].push_back(r);
    }
  }
  return best;
}

std::string render_markdown(std::span<const ReportRow> rows) {
  const auto best = best_rows(rows);
  std::string out = "| Method |";
  std::string rule = "|---|";
  for (const char* c : kReportColumns) {
    out += fmt::format(" {} |", c);
    rule += "---|";
  }
  out += "\n" + rule + "\n";
  for (std::size_t r = 0; r < rows.size(); ++r) {
    out += "| " + rows[r].method + " |";
    const auto values = row_values(rows[r]);
    for (std::size_t c = 0; c < values.size(); ++c) {
      if (!values[c]) {
        out += " n/a |";
        continue;
      }
      const bool bold = std::find(best[c].begin(), best[c].end(), r) != best[c].end();
      const std::string v = fmt::format("{:.4f}", *values[c]);
      out += bold ? " **" + v + "** |" : " " + v + " |";
    }
    out += "\n";
  }
  out += "\nBest value per column in bold (the Target row is not ranked). "
         "PPL: lower is better; every other column: higher is better.\n";
  return out;
}

std::vector<ReportRow> parse_markdown(const std::string& table) {
  std::vector<ReportRow> rows;
  std::istringstream in(table);
  std::string line;
  int index = 0;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] != '|') continue;
    if (index++ < 2) continue;  // header and rule
    const auto c = cells(line);
    if (c.size() != 1 + std::size(kReportColumns)) throw FormatError("malformed table row: " + line);
    ReportRow row;
    row.method = c[0];
    std::vector<std::optional<double>> v;
    for (std::size_t i = 1; i < c.size(); ++i) {
      std::string s = c[i];
      if (s.rfind("**", 0) == 0) s = s.substr(2, s.size() - 4);
      v.push_back(s == "n/a" ? std::nullopt : std::optional<double>(std::stod(s)));
    }
    row.MU = v[0];
    row.AFE = v[1];
    row.CFE = v[2];
    row.probe_accuracy = v[3];
    row.probe_perplexity = v[4];
    rows.push_back(std::move(row));
  }
  return rows;
}

nlohmann::json report_json(std::span<const ReportRow> rows) {
  const auto best = best_rows(rows);
  nlohmann::json out = {{"columns", kReportColumns}, {"rows", nlohmann::json::array()}};
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const auto& row = rows[r];
    nlohmann::json best_cols = nlohmann::json::array();
    for (std::size_t c = 0; c < best.size(); ++c) {
      if (std::find(best[c].begin(), best[c].end(), r) != best[c].end()) best_cols.push_back(kReportColumns[c]);
    }
    out["rows"].push_back({{"method", row.method},
                           {"reference", row.reference},
                           {"MU", opt(row.MU)},
                           {"AFE", opt(row.AFE)},
                           {"CFE", opt(row.CFE)},
                           {"probe_accuracy", opt(row.probe_accuracy)},
                           {"probe_perplexity", opt(row.probe_perplexity)},
                           {"learning_rate", opt(row.learning_rate)},
                           {"validation_score", opt(row.validation_score)},
                           {"gaps", row.gaps},
                           {"best", best_cols}});
  }
  return out;
}

std::vector<ReportRow> rows_from_json(const nlohmann::json& j) {
  std::vector<ReportRow> rows;
  for (const auto& r : j.at("rows")) {
    ReportRow row;
    row.method = r.at("method").get<std::string>();
    row.reference = r.at("reference").get<bool>();
    row.MU = maybe(r, "MU");
    row.AFE = maybe(r, "AFE");
    row.CFE = maybe(r, "CFE");
    row.probe_accuracy = maybe(r, "probe_accuracy");
    row.probe_perplexity = maybe(r, "probe_perplexity");
    row.learning_rate = maybe(r, "learning_rate");
    row.validation_score = maybe(r, "validation_score");
    row.gaps = r.at("gaps").get<std::vector<std::string>>();
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace unlearn
