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

// Command-line entry point: one subcommand per pipeline stage.

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include <iostream>

#include "unlearn/pipeline.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Desk-scale unlearning lab for chain-of-thought language models"};
  app.require_subcommand(1);
  std::string level = "info";

  struct Command {
    const char* name;
    const char* help;
    unlearn::Stage stage;
  };
  const Command commands[] = {
      {"gen-corpus", "Generate the synthetic corpus, analog splits and probe set", unlearn::Stage::kGenCorpus},
      {"train-target", "Fine-tune the target model and build the counterfactual set", unlearn::Stage::kTrainTarget},
      {"unlearn", "Run every configured unlearning method", unlearn::Stage::kUnlearn},
      {"generate", "Write generation dumps for the target and every run", unlearn::Stage::kGenerate},
      {"eval", "Score the dumps and the general-ability probe", unlearn::Stage::kEval},
      {"report", "Render the method comparison table", unlearn::Stage::kReport},
      {"run-all", "Run every stage end to end", unlearn::Stage::kReport},
  };
  std::string config;
  std::optional<std::uint64_t> seed;
  std::vector<std::pair<CLI::App*, unlearn::Stage>> subs;
  for (const auto& c : commands) {
    auto* sub = app.add_subcommand(c.name, c.help);
    sub->add_option("--config", config, "Experiment config (JSON)")->required()->check(CLI::ExistingFile);
    sub->add_option("--seed", seed, "Override the global seed");
    sub->add_option("--log-level", level, "trace, debug, info, warn, error or off")
        ->check(CLI::IsMember({"trace", "debug", "info", "warn", "error", "off"}));
    subs.emplace_back(sub, c.stage);
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }
  spdlog::set_level(spdlog::level::from_str(level));

  for (const auto& [sub, stage] : subs) {
    if (sub->parsed()) return unlearn::run_pipeline_main(config, seed, stage, std::cout);
  }
  return 2;
}
