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

// Stage orchestration. Stages only communicate through files in the run
// directory:
//
//   ingest/candidates.jsonl        selected, deduplicated sentences
//   generate/pairs.jsonl           parsed generations, one per line
//   score/scored.jsonl             dataset records on the 0-4 scale
//   clean/generated.<lang>.jsonl   records that passed cleaning
//   mix/mixed.jsonl, mix/manifest.json
//   eval/eval_report.json, eval/eval_report.txt
//   <stage>/stage.json             per-stage report
//   <stage>/checkpoint.json        generate and score only
//
// generate and score process items in batches of `checkpoint_every`. After
// each batch the outputs are appended in item order and the checkpoint is
// replaced atomically with the next item index and the output size in
// bytes; a resumed stage truncates its output to that size first, so each
// item is emitted exactly once.

#ifndef SIMDISTILL_PIPELINE_H_
#define SIMDISTILL_PIPELINE_H_

#include <cstdint>
#include <exception>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "simdistill/bleu.h"
#include "simdistill/clean_filter.h"
#include "simdistill/corpus_ingest.h"
#include "simdistill/dataset_store.h"
#include "simdistill/eval_harness.h"
#include "simdistill/filter_report.h"
#include "simdistill/llm_gateway.h"
#include "simdistill/pair_scorer.h"

namespace simdistill {

enum class Stage { kIngest, kGenerate, kScore, kClean, kMix, kEval };

inline constexpr Stage kAllStages[] = {Stage::kIngest, Stage::kGenerate, Stage::kScore,
                                       Stage::kClean,  Stage::kMix,      Stage::kEval};

std::string_view StageName(Stage stage);
Stage ParseStage(std::string_view name);

struct CorpusSource {
  std::string path;
  std::string format = "jsonl";  // or "text"
  std::string language;          // required for "text"
};

struct EvalSet {
  std::string name;
  std::vector<std::string> runs;
  std::string metric = "bleu";  // or "metadata"
};

struct PipelineConfig {
  // Relative paths in the config resolve against this directory.
  std::filesystem::path base_dir;
  std::string output_dir = "run";
  uint64_t seed = 0;

  std::vector<CorpusSource> corpus;
  SegmenterConfig segmenter;

  std::vector<std::string> generation_templates;
  std::string scoring_template;
  std::string few_shot;

  std::string backend_kind = "scripted";
  std::string fixtures;
  BackendConfig backend;
  std::chrono::milliseconds initial_backoff{200};
  std::chrono::milliseconds max_backoff{5000};
  int sample_count = 32;

  int max_tokens = 512;
  std::vector<std::string> stop_sequences = {"\n\nD)"};

  CandidateSurfaces surfaces;
  double mass_floor = kDefaultMassFloor;

  CleaningConfig cleaning;

  std::string baseline_path;
  std::string baseline_format = "jsonl";
  std::string baseline_language = "mul";
  ScoreScale baseline_scale = ScoreScale::kUnit;
  std::optional<MixRegime> regime;
  ScoreScale mix_output_scale = ScoreScale::kUnit;

  std::vector<EvalSet> eval_sets;
  std::vector<Statistic> statistics = {Statistic::kPearson, Statistic::kSpearman,
                                       Statistic::kKendall};
  BleuConfig bleu;

  std::optional<size_t> max_sentences;
  std::optional<size_t> max_pairs;
  size_t checkpoint_every = 100;

  std::filesystem::path Resolve(const std::string& path) const;
  std::filesystem::path RunDir() const { return Resolve(output_dir); }

  // Throws config-error.
  static PipelineConfig FromJson(const nlohmann::json& j,
                                 const std::filesystem::path& base_dir);
  static PipelineConfig Load(const std::filesystem::path& path);
};

struct Checkpoint {
  Stage stage = Stage::kGenerate;
  size_t cursor = 0;         // next item index
  uint64_t output_bytes = 0; // valid prefix of the stage output
  size_t total_items = 0;
  bool complete = false;
  FilterReport counts;

  nlohmann::ordered_json ToJson() const;
  static Checkpoint FromJson(const nlohmann::json& j);
};

struct StageOptions {
  bool resume = false;
  // Items to process in this invocation before stopping with a checkpoint.
  std::optional<size_t> limit;
  // Used instead of the configured backend when set.
  std::shared_ptr<Backend> backend;
};

struct StageResult {
  Stage stage = Stage::kIngest;
  std::vector<std::filesystem::path> artifacts;
  FilterReport report;
  bool complete = true;
};

// Throws stage-order-error when a prerequisite stage has not completed, and
// rethrows backend exhaustion after persisting the checkpoint.
StageResult RunStage(Stage stage, const PipelineConfig& config,
                     const StageOptions& options = {});

// Merges every stage report, the mix manifest and the evaluation report into
// report.json and report.txt in the run directory. Throws no-run-found when
// no stage has completed there.
nlohmann::ordered_json RunReport(const std::filesystem::path& run_dir);

// 0 success, 2 config, 3 stage order, 4 backend failure, 5 data error.
int ExitCodeFor(const std::exception& e);

}  // namespace simdistill

#endif  // SIMDISTILL_PIPELINE_H_
