// Copyright 2026 The simdistill Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// simdistill <stage> --config run.json [--resume] [--limit n]
//            [--backend scripted|remote] [--fixtures path]
// simdistill report --config run.json

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "simdistill/error.h"
#include "simdistill/pipeline.h"

namespace {

struct Flags {
  std::string config;
  bool resume = false;
  std::optional<size_t> limit;
  std::string backend;
  std::string fixtures;
};

void AddStageFlags(CLI::App* cmd, Flags& flags, bool stage_flags) {
  cmd->add_option("--config", flags.config, "JSON pipeline configuration")->required();
  if (!stage_flags) return;
  cmd->add_flag("--resume", flags.resume, "continue from the stage checkpoint");
  cmd->add_option("--limit", flags.limit, "process at most n items in this invocation");
  cmd->add_option("--backend", flags.backend, "backend kind")
      ->check(CLI::IsMember({"scripted", "remote"}));
  cmd->add_option("--fixtures", flags.fixtures, "scripted backend fixtures (JSONL)");
}

int Run(const std::string& command, const Flags& flags) {
  simdistill::PipelineConfig config = simdistill::PipelineConfig::Load(flags.config);
  if (command == "report") {
    const auto report = simdistill::RunReport(config.RunDir());
    std::cout << "wrote " << (config.RunDir() / "report.json").string() << " ("
              << report["stages"].size() << " stage sections)\n";
    return 0;
  }
  if (!flags.backend.empty()) config.backend_kind = flags.backend;
  if (!flags.fixtures.empty()) {
    config.fixtures = std::filesystem::absolute(flags.fixtures).string();
  }
  simdistill::StageOptions options;
  options.resume = flags.resume;
  options.limit = flags.limit;
  const simdistill::Stage stage = simdistill::ParseStage(command);
  const simdistill::StageResult result = simdistill::RunStage(stage, config, options);
  std::cout << command << ": " << (result.complete ? "complete" : "checkpointed")
            << ", accepted " << result.report.accepted << ", rejected "
            << result.report.rejected() << "\n";
  for (const auto& a : result.artifacts) std::cout << "  " << a.string() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Synthetic similarity data distillation pipeline"};
  app.require_subcommand(1);
  Flags flags;
  for (const char* name : {"ingest", "generate", "score", "clean", "mix", "eval"}) {
    AddStageFlags(app.add_subcommand(name, std::string("run the ") + name + " stage"), flags,
                  true);
  }
  AddStageFlags(app.add_subcommand("report", "write the consolidated run report"), flags,
                false);
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }
  const std::string command = app.get_subcommands().front()->get_name();
  try {
    return Run(command, flags);
  } catch (const std::exception& e) {
    std::cerr << "simdistill " << command << ": " << e.what() << "\n";
    return simdistill::ExitCodeFor(e);
  }
}
