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

#include "simdistill/pipeline.h"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <functional>
#include <limits>
#include <sstream>
#include <thread>

#include "simdistill/error.h"
#include "simdistill/prompt_engine.h"
#include "simdistill/unicode.h"

namespace simdistill {
namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

namespace {

std::string ReadFile(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kReadError, "cannot open " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void WriteFile(const fs::path& path, std::string_view content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  out.flush();
  if (!out) throw Error(ErrorCode::kWriteError, "cannot write " + path.string());
}

// Write-then-rename so readers never see a partial file.
void WriteFileAtomic(const fs::path& path, std::string_view content) {
  const fs::path tmp = path.string() + ".tmp";
  WriteFile(tmp, content);
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) throw Error(ErrorCode::kWriteError, "cannot replace " + path.string());
}

void AppendFile(const fs::path& path, std::string_view content) {
  if (content.empty()) return;
  std::ofstream out(path, std::ios::binary | std::ios::app);
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  out.flush();
  if (!out) throw Error(ErrorCode::kWriteError, "cannot append to " + path.string());
}

std::string Dump(const ordered_json& j) { return j.dump(2) + "\n"; }

// Shortest string that parses back to the same double.
std::string ShortestDouble(double v) {
  char buf[64];
  const auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc()) return std::to_string(v);
  return std::string(buf, end);
}

std::vector<json> ReadJsonLines(const fs::path& path) {
  std::vector<json> out;
  size_t line_no = 0;
  for (const std::string& line : SplitLines(ReadFile(path))) {
    ++line_no;
    if (line.empty()) continue;
    try {
      out.push_back(json::parse(line));
    } catch (const json::exception& e) {
      throw Error(ErrorCode::kMalformedRecord,
                  path.string() + ":" + std::to_string(line_no) + ": " + e.what(),
                  static_cast<long>(line_no));
    }
  }
  return out;
}

fs::path StageDir(const fs::path& run_dir, Stage stage) {
  return run_dir / std::string(StageName(stage));
}

fs::path StageReportPath(const fs::path& run_dir, Stage stage) {
  return StageDir(run_dir, stage) / "stage.json";
}

bool StageComplete(const fs::path& run_dir, Stage stage) {
  const fs::path path = StageReportPath(run_dir, stage);
  if (!fs::exists(path)) return false;
  try {
    return json::parse(ReadFile(path)).value("complete", false);
  } catch (const json::exception&) {
    return false;
  }
}

void RequireStage(const fs::path& run_dir, Stage needed, Stage stage) {
  if (!StageComplete(run_dir, needed)) {
    throw Error(ErrorCode::kStageOrderError,
                std::string(StageName(stage)) + " needs a completed " +
                    std::string(StageName(needed)) + " stage in " + run_dir.string());
  }
}

std::string Relative(const fs::path& path, const fs::path& run_dir) {
  return path.lexically_relative(run_dir).generic_string();
}

void WriteStageReport(const PipelineConfig& config, const StageResult& result,
                      ordered_json extra = ordered_json::object()) {
  const fs::path run_dir = config.RunDir();
  ordered_json j;
  j["stage"] = StageName(result.stage);
  j["seed"] = config.seed;
  j["complete"] = result.complete;
  j["artifacts"] = ordered_json::array();
  for (const auto& a : result.artifacts) j["artifacts"].push_back(Relative(a, run_dir));
  j["filter_report"] = result.report.ToJson();
  for (auto& [key, value] : extra.items()) j[key] = value;
  WriteFileAtomic(StageReportPath(run_dir, result.stage), Dump(j));
}

std::shared_ptr<Backend> MakeBackend(const PipelineConfig& config,
                                     const StageOptions& options) {
  if (options.backend) return options.backend;
  if (config.backend_kind == "scripted") {
    if (config.fixtures.empty()) {
      throw Error(ErrorCode::kConfigError, "scripted backend needs a fixtures file");
    }
    return ScriptedBackend::FromFile(config.Resolve(config.fixtures));
  }
  if (config.backend_kind == "remote") {
    return std::make_shared<RemoteBackend>(config.backend);
  }
  throw Error(ErrorCode::kConfigError, "unknown backend '" + config.backend_kind + "'");
}

GatewayOptions MakeGatewayOptions(const PipelineConfig& config) {
  GatewayOptions options = GatewayOptions::FromBackendConfig(config.backend);
  options.retry.initial_backoff = config.initial_backoff;
  options.retry.max_backoff = config.max_backoff;
  options.sample_count = config.sample_count;
  return options;
}

PromptTemplate LoadTemplateOfKind(const PipelineConfig& config, const std::string& path,
                                  bool generation) {
  PromptTemplate tmpl = LoadTemplate(config.Resolve(path));
  if (tmpl.is_generation() != generation) {
    throw Error(ErrorCode::kTemplateError,
                path + ": expected a " + (generation ? "generation" : "scoring") +
                    " template");
  }
  return tmpl;
}

// ---------------------------------------------------------------------------
// Checkpointed item loop shared by generate and score.

struct ItemOutcome {
  std::optional<std::string> line;  // accepted output, without newline
  std::string reject_reason;
  std::exception_ptr fatal;
};

using ItemFn = std::function<ItemOutcome(size_t)>;

// Processes [begin, end) on up to `workers` threads. Indices are handed out
// in order, so after a fatal outcome every lower index has an outcome too.
std::vector<ItemOutcome> RunBatch(size_t begin, size_t end, int workers, const ItemFn& fn) {
  std::vector<ItemOutcome> outcomes(end - begin);
  std::atomic<size_t> next{begin};
  std::atomic<bool> abort{false};
  auto worker = [&] {
    while (!abort.load()) {
      const size_t i = next.fetch_add(1);
      if (i >= end) return;
      ItemOutcome& out = outcomes[i - begin];
      try {
        out = fn(i);
      } catch (...) {
        out.fatal = std::current_exception();
      }
      if (out.fatal) abort = true;
    }
  };
  const size_t n = std::min<size_t>(static_cast<size_t>(std::max(workers, 1)), end - begin);
  std::vector<std::thread> threads;
  for (size_t t = 1; t < n; ++t) threads.emplace_back(worker);
  worker();
  for (auto& t : threads) t.join();
  return outcomes;
}

// Item-level failure tag, or rethrow when the backend is exhausted.
ItemOutcome ClassifyItemError(const std::exception& e, const char* reason) {
  ItemOutcome out;
  if (IsRetriable(e)) {
    out.fatal = std::current_exception();
  } else {
    out.reject_reason = reason;
  }
  return out;
}

StageResult RunItemStage(Stage stage, const PipelineConfig& config,
                         const StageOptions& options, size_t total,
                         const fs::path& output, int workers, const ItemFn& fn) {
  const fs::path dir = StageDir(config.RunDir(), stage);
  const fs::path cp_path = dir / "checkpoint.json";
  Checkpoint cp;
  cp.stage = stage;
  cp.total_items = total;
  if (options.resume && fs::exists(cp_path)) {
    try {
      cp = Checkpoint::FromJson(json::parse(ReadFile(cp_path)));
    } catch (const json::exception& e) {
      throw Error(ErrorCode::kReadError, cp_path.string() + ": " + e.what());
    }
    if (cp.stage != stage || cp.total_items != total) {
      throw Error(ErrorCode::kReadError,
                  cp_path.string() + " does not match the stage input; rerun without --resume");
    }
    const uint64_t size = fs::exists(output) ? fs::file_size(output) : 0;
    if (size < cp.output_bytes) {
      throw Error(ErrorCode::kReadError, output.string() + " is shorter than its checkpoint");
    }
    // Drops anything written after the last checkpoint.
    fs::resize_file(output, cp.output_bytes);
  } else {
    fs::remove(cp_path);
    fs::remove(dir / "stage.json");
    WriteFile(output, "");
  }

  size_t budget = options.limit.value_or(std::numeric_limits<size_t>::max());
  const size_t every = std::max<size_t>(config.checkpoint_every, 1);
  while (cp.cursor < total && budget > 0) {
    const size_t end = cp.cursor + std::min({total - cp.cursor, every, budget});
    std::vector<ItemOutcome> outcomes = RunBatch(cp.cursor, end, workers, fn);
    std::string blob;
    size_t done = end;
    std::exception_ptr fatal;
    for (size_t i = cp.cursor; i < end; ++i) {
      ItemOutcome& out = outcomes[i - cp.cursor];
      if (out.fatal) {
        done = i;
        fatal = out.fatal;
        break;
      }
      if (out.line) {
        blob += *out.line;
        blob += '\n';
        cp.counts.Accept();
      } else {
        cp.counts.Reject(out.reject_reason);
      }
    }
    AppendFile(output, blob);
    cp.output_bytes += blob.size();
    budget -= done - cp.cursor;
    cp.cursor = done;
    cp.complete = cp.cursor == total;
    WriteFileAtomic(cp_path, Dump(cp.ToJson()));
    if (fatal) std::rethrow_exception(fatal);
  }
  cp.complete = cp.cursor == total;
  WriteFileAtomic(cp_path, Dump(cp.ToJson()));

  StageResult result;
  result.stage = stage;
  result.artifacts = {output};
  result.report = cp.counts;
  result.complete = cp.complete;
  ordered_json extra;
  extra["items_total"] = total;
  extra["items_done"] = cp.cursor;
  WriteStageReport(config, result, extra);
  return result;
}

// ---------------------------------------------------------------------------
// Stages.

json CandidateToJson(const CandidateSentence& c) {
  return json{{"text", c.text},
              {"language", c.language},
              {"source_doc", c.source_doc},
              {"source_line", c.source_line}};
}

StageResult RunIngest(const PipelineConfig& config) {
  if (config.corpus.empty()) throw Error(ErrorCode::kConfigError, "no corpus configured");
  const fs::path dir = StageDir(config.RunDir(), Stage::kIngest);
  FilterReport selection;
  std::vector<CandidateSentence> sentences;
  for (const CorpusSource& source : config.corpus) {
    std::vector<RawDocument> docs;
    if (source.format == "jsonl") {
      docs = ReadJsonlCorpus(config.Resolve(source.path));
    } else if (source.format == "text") {
      docs.push_back(ReadPlainTextDocument(config.Resolve(source.path), source.language));
    } else {
      throw Error(ErrorCode::kConfigError, "unknown corpus format '" + source.format + "'");
    }
    for (RawDocument& doc : docs) {
      if (doc.language.empty()) doc.language = source.language;
      if (doc.language.empty()) {
        throw Error(ErrorCode::kMalformedRecord, "document " + doc.doc_id + " has no language");
      }
      auto extracted = ExtractCandidateSentences(doc, config.segmenter, &selection);
      sentences.insert(sentences.end(), std::make_move_iterator(extracted.begin()),
                       std::make_move_iterator(extracted.end()));
    }
  }
  FilterReport dedupe;
  sentences = DedupeStream(std::move(sentences), &dedupe);
  size_t dropped_by_limit = 0;
  if (config.max_sentences && sentences.size() > *config.max_sentences) {
    dropped_by_limit = sentences.size() - *config.max_sentences;
    sentences.resize(*config.max_sentences);
  }

  const fs::path output = dir / "candidates.jsonl";
  std::string blob;
  for (const auto& s : sentences) blob += CandidateToJson(s).dump() + "\n";
  WriteFileAtomic(output, blob);

  StageResult result;
  result.stage = Stage::kIngest;
  result.artifacts = {output};
  result.report = selection;
  ordered_json extra;
  extra["dedupe_report"] = dedupe.ToJson();
  extra["dropped_by_limit"] = dropped_by_limit;
  extra["candidates"] = sentences.size();
  WriteStageReport(config, result, extra);
  return result;
}

StageResult RunGenerate(const PipelineConfig& config, const StageOptions& options) {
  const fs::path run_dir = config.RunDir();
  RequireStage(run_dir, Stage::kIngest, Stage::kGenerate);
  if (config.generation_templates.empty()) {
    throw Error(ErrorCode::kConfigError, "no generation templates configured");
  }
  std::vector<PromptTemplate> templates;
  for (const auto& path : config.generation_templates) {
    templates.push_back(LoadTemplateOfKind(config, path, true));
  }
  std::vector<json> candidates =
      ReadJsonLines(StageDir(run_dir, Stage::kIngest) / "candidates.jsonl");
  if (config.max_pairs && candidates.size() > *config.max_pairs) {
    candidates.resize(*config.max_pairs);
  }

  Gateway gateway(MakeBackend(config, options), MakeGatewayOptions(config));
  auto fn = [&](size_t i) -> ItemOutcome {
    const json& c = candidates[i];
    // Templates take turns so every template sees every slice of the corpus.
    const PromptTemplate& tmpl = templates[i % templates.size()];
    const std::string reference = c.at("text").get<std::string>();
    const std::string language = c.at("language").get<std::string>();
    ParsedGeneration parsed;
    try {
      const std::string prompt = RenderGenerationPrompt(tmpl, reference, unicode::LanguageName(language));
      parsed = ParseGenerationOutput(
          gateway.Complete({prompt, config.max_tokens, config.stop_sequences}),
          tmpl.explanation_style);
    } catch (const Error& e) {
      return ClassifyItemError(e, reject::kGenerationFailed);
    }
    ItemOutcome out;
    if (!parsed.parse_ok) {
      out.reject_reason = reject::kParseFailure;
      return out;
    }
    ordered_json line;
    line["index"] = i;
    line["reference"] = reference;
    line["candidate"] = parsed.generated_sentence;
    line["language"] = language;
    line["template_id"] = tmpl.template_id;
    line["template_kind"] = TemplateKindName(tmpl.kind);
    line["template_implied_band"] =
        tmpl.kind == TemplateKind::kMeaningPreserving ? "high" : "low";
    line["source_doc"] = c.at("source_doc");
    line["source_line"] = c.at("source_line");
    line["explanation"] = parsed.explanation;
    out.line = line.dump();
    return out;
  };
  return RunItemStage(Stage::kGenerate, config, options, candidates.size(),
                      StageDir(run_dir, Stage::kGenerate) / "pairs.jsonl",
                      gateway.options().max_concurrency, fn);
}

StageResult RunScore(const PipelineConfig& config, const StageOptions& options) {
  const fs::path run_dir = config.RunDir();
  RequireStage(run_dir, Stage::kGenerate, Stage::kScore);
  const PromptTemplate tmpl = LoadTemplateOfKind(config, config.scoring_template, false);
  ScorerOptions scorer;
  scorer.surfaces = config.surfaces;
  scorer.mass_floor = config.mass_floor;
  if (!config.few_shot.empty()) {
    scorer.additional_examples =
        FormatFewShotExamples(LoadFewShotExamples(config.Resolve(config.few_shot)));
  }
  const std::vector<json> pairs =
      ReadJsonLines(StageDir(run_dir, Stage::kGenerate) / "pairs.jsonl");

  Gateway gateway(MakeBackend(config, options), MakeGatewayOptions(config));
  gateway.ValidateCandidates(scorer.surfaces.All());
  auto fn = [&](size_t i) -> ItemOutcome {
    const json& p = pairs[i];
    const std::string language = p.at("language").get<std::string>();
    ScoredPair scored;
    try {
      scored = ScorePair(p.at("reference").get<std::string>(),
                         p.at("candidate").get<std::string>(), language, tmpl, gateway,
                         scorer, tmpl.template_id);
    } catch (const Error& e) {
      if (e.code() == ErrorCode::kUnscorablePair) {
        ItemOutcome out;
        out.reject_reason = reject::kScoreMassTooLow;
        return out;
      }
      return ClassifyItemError(e, reject::kScoringFailed);
    }
    DatasetRecord record;
    record.reference = scored.reference;
    record.candidate = scored.hypothesis;
    record.score = scored.score;
    record.score_scale = ScoreScale::kZeroFour;
    record.language = language;
    record.origin = Origin::kGenerated;
    auto& m = record.metadata;
    m["index"] = std::to_string(p.at("index").get<size_t>());
    m["source_doc"] = p.at("source_doc").get<std::string>();
    m["source_line"] = std::to_string(p.at("source_line").get<size_t>());
    m["template_id"] = p.at("template_id").get<std::string>();
    m["template_implied_band"] = p.at("template_implied_band").get<std::string>();
    m["scoring_template_id"] = scored.template_id;
    m["estimation_mode"] = EstimationModeName(scored.estimation_mode);
    m["raw_mass_total"] = ShortestDouble(scored.raw_mass_total);
    std::string dist;
    for (double v : scored.distribution.probabilities) {
      if (!dist.empty()) dist += ",";
      dist += ShortestDouble(v);
    }
    m["distribution"] = dist;
    ItemOutcome out;
    out.line = SerializeRecord(record);
    return out;
  };
  return RunItemStage(Stage::kScore, config, options, pairs.size(),
                      StageDir(run_dir, Stage::kScore) / "scored.jsonl",
                      gateway.options().max_concurrency, fn);
}

bool SafeLanguageTag(const std::string& tag) {
  return !tag.empty() && std::all_of(tag.begin(), tag.end(), [](unsigned char c) {
    return std::isalnum(c) || c == '-' || c == '_';
  });
}

StageResult RunClean(const PipelineConfig& config) {
  const fs::path run_dir = config.RunDir();
  RequireStage(run_dir, Stage::kScore, Stage::kClean);
  config.cleaning.Validate();
  const fs::path dir = StageDir(run_dir, Stage::kClean);
  const std::vector<DatasetRecord> records =
      ReadRecords(StageDir(run_dir, Stage::kScore) / "scored.jsonl");
  FilterReport report;
  std::map<std::string, std::vector<DatasetRecord>> by_language;
  for (const DatasetRecord& r : records) {
    const CleaningVerdict verdict = ApplyCleaning(r.reference, r.candidate, config.cleaning);
    if (!verdict.accepted) {
      report.Reject(*verdict.reason);
      continue;
    }
    if (!SafeLanguageTag(r.language)) {
      throw Error(ErrorCode::kMalformedRecord, "unusable language tag '" + r.language + "'");
    }
    report.Accept();
    by_language[r.language].push_back(r);
  }
  for (const auto& entry : fs::directory_iterator(dir)) {
    const std::string name = entry.path().filename().string();
    if (name.rfind("generated.", 0) == 0) fs::remove(entry.path());
  }
  StageResult result;
  result.stage = Stage::kClean;
  result.report = report;
  ordered_json languages = ordered_json::object();
  for (const auto& [language, recs] : by_language) {
    const fs::path out = dir / ("generated." + language + ".jsonl");
    WriteRecords(out, recs);
    result.artifacts.push_back(out);
    languages[language] = recs.size();
  }
  ordered_json extra;
  extra["languages"] = languages;
  WriteStageReport(config, result, extra);
  return result;
}

StageResult RunMix(const PipelineConfig& config) {
  const fs::path run_dir = config.RunDir();
  RequireStage(run_dir, Stage::kClean, Stage::kMix);
  const fs::path dir = StageDir(run_dir, Stage::kMix);
  const json clean_report = json::parse(ReadFile(StageReportPath(run_dir, Stage::kClean)));

  std::map<std::string, std::string> generated;
  for (const auto& [language, count] : clean_report.at("languages").items()) {
    generated[language] = "clean/generated." + language + ".jsonl";
  }

  std::string baseline;
  if (!config.baseline_path.empty()) {
    std::vector<DatasetRecord> records;
    const fs::path source = config.Resolve(config.baseline_path);
    if (config.baseline_format == "tsv") {
      records = ReadTsvDataset(source, config.baseline_language, config.baseline_scale);
    } else if (config.baseline_format == "jsonl") {
      records = ReadRecords(source);
    } else {
      throw Error(ErrorCode::kConfigError,
                  "unknown baseline format '" + config.baseline_format + "'");
    }
    // A copy inside the run keeps the manifest free of absolute paths.
    baseline = "mix/baseline.jsonl";
    fs::remove(run_dir / baseline);
    WriteRecords(run_dir / baseline, records);
  }

  MixSpec spec;
  if (config.regime) {
    if (baseline.empty()) {
      throw Error(ErrorCode::kConfigError, "a mix regime needs a baseline dataset");
    }
    spec = BuildRegimeSpec(*config.regime, baseline, generated, config.seed,
                           config.mix_output_scale);
  } else {
    if (!baseline.empty()) spec.parts.push_back({baseline, "baseline", true});
    for (const auto& [language, path] : generated) spec.parts.push_back({path, language, true});
    spec.shuffle_seed = config.seed;
    spec.output_score_scale = config.mix_output_scale;
  }
  const fs::path output = dir / "mixed.jsonl";
  const fs::path manifest_path = dir / "manifest.json";
  const MixManifest manifest = MixDatasets(spec, output, manifest_path, run_dir);

  StageResult result;
  result.stage = Stage::kMix;
  result.artifacts = {output, manifest_path};
  result.report.Accept(manifest.total);
  ordered_json extra;
  extra["mix_spec"] = spec.ToJson();
  extra["manifest"] = manifest.ToJson();
  WriteStageReport(config, result, extra);
  return result;
}

StageResult RunEval(const PipelineConfig& config) {
  if (config.eval_sets.empty()) throw Error(ErrorCode::kConfigError, "no eval sets configured");
  const fs::path dir = StageDir(config.RunDir(), Stage::kEval);
  EvalReport report;
  FilterReport counts;
  ordered_json datasets = ordered_json::array();
  for (const EvalSet& set : config.eval_sets) {
    if (set.runs.empty()) {
      throw Error(ErrorCode::kConfigError, "eval set '" + set.name + "' has no runs");
    }
    // language -> one PairedScores per run
    std::map<std::string, std::vector<PairedScores>> by_language;
    for (const std::string& run : set.runs) {
      std::map<std::string, std::vector<DatasetRecord>> grouped;
      for (DatasetRecord& r : ReadRecords(config.Resolve(run))) {
        grouped[r.language].push_back(std::move(r));
      }
      for (const auto& [language, records] : grouped) {
        PairedScores scores;
        if (set.metric == "bleu") {
          scores = BleuBaselineEval(records, config.bleu);
        } else if (set.metric == "metadata") {
          scores = MetricScoresFromRecords(records);
        } else {
          throw Error(ErrorCode::kConfigError, "unknown eval metric '" + set.metric + "'");
        }
        scores.language = language;
        counts.Accept(scores.n());
        by_language[language].push_back(std::move(scores));
      }
    }
    for (const auto& [language, runs] : by_language) {
      if (runs.size() != set.runs.size()) {
        throw Error(ErrorCode::kMalformedRecord, "eval set '" + set.name + "': language " +
                                                     language + " is missing from some runs");
      }
      try {
        EvalReport part = EvaluateRuns(set.name, runs, config.statistics);
        report.rows.insert(report.rows.end(), part.rows.begin(), part.rows.end());
      } catch (const Error& e) {
        if (e.code() != ErrorCode::kInvalidArgument) throw;
        throw Error(ErrorCode::kMalformedRecord,
                    "eval set '" + set.name + "' (" + language + "): " + e.what());
      }
    }
    ordered_json d;
    d["name"] = set.name;
    d["metric"] = set.metric;
    d["runs"] = set.runs;
    datasets.push_back(std::move(d));
  }
  ordered_json j;
  j["datasets"] = datasets;
  const ordered_json rows = report.ToJson();
  for (const auto& [key, value] : rows.items()) j[key] = value;
  const fs::path json_path = dir / "eval_report.json";
  const fs::path text_path = dir / "eval_report.txt";
  WriteFileAtomic(json_path, Dump(j));
  WriteFileAtomic(text_path, report.ToText());

  StageResult result;
  result.stage = Stage::kEval;
  result.artifacts = {json_path, text_path};
  result.report = counts;
  WriteStageReport(config, result);
  return result;
}

std::string SummaryLine(const std::string& stage, const json& section) {
  std::string line = stage + ": " + (section.value("complete", false) ? "complete" : "partial");
  const json& fr = section.at("filter_report");
  line += ", accepted " + std::to_string(fr.at("accepted").get<uint64_t>());
  line += ", rejected " + std::to_string(fr.at("examined").get<uint64_t>() -
                                         fr.at("accepted").get<uint64_t>());
  std::string reasons;
  for (const auto& [reason, n] : fr.at("rejected").items()) {
    if (!reasons.empty()) reasons += ", ";
    reasons += reason + " " + std::to_string(n.get<uint64_t>());
  }
  if (!reasons.empty()) line += " (" + reasons + ")";
  return line + "\n";
}

}  // namespace

std::string_view StageName(Stage stage) {
  switch (stage) {
    case Stage::kIngest: return "ingest";
    case Stage::kGenerate: return "generate";
    case Stage::kScore: return "score";
    case Stage::kClean: return "clean";
    case Stage::kMix: return "mix";
    case Stage::kEval: return "eval";
  }
  return "";
}

Stage ParseStage(std::string_view name) {
  for (Stage s : kAllStages) {
    if (StageName(s) == name) return s;
  }
  throw Error(ErrorCode::kInvalidArgument, "unknown stage '" + std::string(name) + "'");
}

fs::path PipelineConfig::Resolve(const std::string& path) const {
  const fs::path p(path);
  return p.is_absolute() ? p : (base_dir / p).lexically_normal();
}

namespace {

template <typename T>
void ReadOptional(const json& j, const char* key, T& out) {
  if (j.contains(key) && !j.at(key).is_null()) out = j.at(key).get<T>();
}

}  // namespace

PipelineConfig PipelineConfig::FromJson(const json& j, const fs::path& base_dir) {
  PipelineConfig c;
  c.base_dir = base_dir;
  try {
    if (!j.is_object()) throw Error(ErrorCode::kConfigError, "config must be a JSON object");
    ReadOptional(j, "output_dir", c.output_dir);
    ReadOptional(j, "seed", c.seed);
    if (j.contains("corpus")) {
      for (const auto& s : j.at("corpus")) {
        CorpusSource source;
        source.path = s.at("path").get<std::string>();
        ReadOptional(s, "format", source.format);
        ReadOptional(s, "language", source.language);
        c.corpus.push_back(std::move(source));
      }
    }
    if (j.contains("segmenter")) {
      const json& s = j.at("segmenter");
      if (s.contains("terminators")) {
        c.segmenter.terminators = unicode::Decode(s.at("terminators").get<std::string>());
      }
      ReadOptional(s, "abbreviations", c.segmenter.abbreviations);
    }
    if (j.contains("templates")) {
      const json& t = j.at("templates");
      ReadOptional(t, "generation", c.generation_templates);
      ReadOptional(t, "scoring", c.scoring_template);
      ReadOptional(t, "few_shot", c.few_shot);
    }
    if (j.contains("backend")) {
      const json& b = j.at("backend");
      ReadOptional(b, "kind", c.backend_kind);
      ReadOptional(b, "fixtures", c.fixtures);
      c.backend = BackendConfig::FromJson(b);
      if (b.contains("initial_backoff_ms")) {
        c.initial_backoff = std::chrono::milliseconds(b.at("initial_backoff_ms").get<long>());
      }
      if (b.contains("max_backoff_ms")) {
        c.max_backoff = std::chrono::milliseconds(b.at("max_backoff_ms").get<long>());
      }
    }
    if (j.contains("generation")) {
      const json& g = j.at("generation");
      ReadOptional(g, "max_tokens", c.max_tokens);
      ReadOptional(g, "stop", c.stop_sequences);
    }
    if (j.contains("scoring")) {
      const json& s = j.at("scoring");
      if (s.contains("surfaces")) c.surfaces = CandidateSurfaces::FromJson(s.at("surfaces"));
      ReadOptional(s, "mass_floor", c.mass_floor);
      ReadOptional(s, "sample_count", c.sample_count);
    }
    if (j.contains("cleaning")) c.cleaning = CleaningConfig::FromJson(j.at("cleaning"));
    if (j.contains("mix")) {
      const json& m = j.at("mix");
      if (m.contains("baseline") && !m.at("baseline").is_null()) {
        const json& b = m.at("baseline");
        c.baseline_path = b.at("path").get<std::string>();
        ReadOptional(b, "format", c.baseline_format);
        ReadOptional(b, "language", c.baseline_language);
        if (b.contains("score_scale")) {
          c.baseline_scale = ParseScoreScale(b.at("score_scale").get<std::string>());
        }
      }
      if (m.contains("regime") && !m.at("regime").is_null()) {
        c.regime = ParseMixRegime(m.at("regime").get<std::string>());
      }
      if (m.contains("output_score_scale")) {
        c.mix_output_scale = ParseScoreScale(m.at("output_score_scale").get<std::string>());
      }
    }
    if (j.contains("eval")) {
      const json& e = j.at("eval");
      if (e.contains("statistics")) {
        c.statistics.clear();
        for (const auto& s : e.at("statistics")) {
          c.statistics.push_back(ParseStatistic(s.get<std::string>()));
        }
      }
      if (e.contains("bleu")) {
        const json& b = e.at("bleu");
        ReadOptional(b, "max_ngram_order", c.bleu.max_ngram_order);
        ReadOptional(b, "floor_value", c.bleu.floor_value);
        if (b.contains("smoothing")) {
          const auto s = b.at("smoothing").get<std::string>();
          if (s == "exp") c.bleu.smoothing = BleuSmoothing::kExp;
          else if (s == "floor") c.bleu.smoothing = BleuSmoothing::kFloor;
          else if (s == "none") c.bleu.smoothing = BleuSmoothing::kNone;
          else throw Error(ErrorCode::kConfigError, "unknown smoothing '" + s + "'");
        }
        if (b.contains("tokenizer")) {
          const auto t = b.at("tokenizer").get<std::string>();
          if (t == "intl") c.bleu.tokenizer = BleuTokenizer::kIntl;
          else if (t == "whitespace") c.bleu.tokenizer = BleuTokenizer::kWhitespace;
          else throw Error(ErrorCode::kConfigError, "unknown tokenizer '" + t + "'");
        }
      }
      if (e.contains("sets")) {
        for (const auto& s : e.at("sets")) {
          EvalSet set;
          set.name = s.at("name").get<std::string>();
          set.runs = s.at("runs").get<std::vector<std::string>>();
          ReadOptional(s, "metric", set.metric);
          c.eval_sets.push_back(std::move(set));
        }
      }
    }
    if (j.contains("limits")) {
      const json& l = j.at("limits");
      if (l.contains("max_sentences") && !l.at("max_sentences").is_null()) {
        c.max_sentences = l.at("max_sentences").get<size_t>();
      }
      if (l.contains("max_pairs") && !l.at("max_pairs").is_null()) {
        c.max_pairs = l.at("max_pairs").get<size_t>();
      }
    }
    ReadOptional(j, "checkpoint_every", c.checkpoint_every);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kConfigError, std::string("config: ") + e.what());
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kConfigError) throw;
    throw Error(ErrorCode::kConfigError, std::string("config: ") + e.what());
  }
  if (c.checkpoint_every == 0) throw Error(ErrorCode::kConfigError, "checkpoint_every must be > 0");
  if (c.max_tokens < 1) throw Error(ErrorCode::kConfigError, "max_tokens must be > 0");
  if (c.output_dir.empty()) throw Error(ErrorCode::kConfigError, "output_dir is empty");
  if (c.mass_floor < 0.0) throw Error(ErrorCode::kConfigError, "mass_floor must be >= 0");
  return c;
}

PipelineConfig PipelineConfig::Load(const fs::path& path) {
  std::string text;
  try {
    text = ReadFile(path);
  } catch (const Error& e) {
    throw Error(ErrorCode::kConfigError, e.what());
  }
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kConfigError, path.string() + ": " + e.what());
  }
  return FromJson(j, fs::absolute(path).parent_path());
}

ordered_json Checkpoint::ToJson() const {
  ordered_json j;
  j["stage"] = StageName(stage);
  j["cursor"] = cursor;
  j["output_bytes"] = output_bytes;
  j["total_items"] = total_items;
  j["complete"] = complete;
  j["counts"] = counts.ToJson();
  return j;
}

Checkpoint Checkpoint::FromJson(const json& j) {
  Checkpoint cp;
  cp.stage = ParseStage(j.at("stage").get<std::string>());
  cp.cursor = j.at("cursor").get<size_t>();
  cp.output_bytes = j.at("output_bytes").get<uint64_t>();
  cp.total_items = j.at("total_items").get<size_t>();
  cp.complete = j.at("complete").get<bool>();
  cp.counts = FilterReport::FromJson(ordered_json(j.at("counts")));
  return cp;
}

StageResult RunStage(Stage stage, const PipelineConfig& config, const StageOptions& options) {
  const fs::path run_dir = config.RunDir();
  fs::create_directories(StageDir(run_dir, stage));
  StageResult result;
  switch (stage) {
    case Stage::kIngest: result = RunIngest(config); break;
    case Stage::kGenerate: result = RunGenerate(config, options); break;
    case Stage::kScore: result = RunScore(config, options); break;
    case Stage::kClean: result = RunClean(config); break;
    case Stage::kMix: result = RunMix(config); break;
    case Stage::kEval: result = RunEval(config); break;
  }
  RunReport(run_dir);
  return result;
}

ordered_json RunReport(const fs::path& run_dir) {
  ordered_json report;
  report["run_dir"] = run_dir.filename().string();
  report["stages"] = ordered_json::object();
  FilterReport merged;
  std::string text;
  for (Stage stage : kAllStages) {
    const fs::path path = StageReportPath(run_dir, stage);
    if (!fs::exists(path)) continue;
    ordered_json section;
    try {
      section = ordered_json::parse(ReadFile(path));
    } catch (const json::exception& e) {
      throw Error(ErrorCode::kReadError, path.string() + ": " + e.what());
    }
    const std::string name(StageName(stage));
    merged.Merge(FilterReport::FromJson(section.at("filter_report")));
    text += SummaryLine(name, section);
    if (stage == Stage::kEval) {
      const fs::path eval_json = StageDir(run_dir, stage) / "eval_report.json";
      if (fs::exists(eval_json)) {
        section["eval_report"] = ordered_json::parse(ReadFile(eval_json));
      }
    }
    report["stages"][name] = std::move(section);
  }
  if (report["stages"].empty()) {
    throw Error(ErrorCode::kNoRunFound, "no completed stage in " + run_dir.string());
  }
  report["merged_filter_report"] = merged.ToJson();
  const fs::path eval_text = StageDir(run_dir, Stage::kEval) / "eval_report.txt";
  if (fs::exists(eval_text)) text += "\n" + ReadFile(eval_text);
  WriteFileAtomic(run_dir / "report.json", Dump(report));
  WriteFileAtomic(run_dir / "report.txt", text);
  return report;
}

int ExitCodeFor(const std::exception& e) {
  const auto* err = dynamic_cast<const Error*>(&e);
  if (err == nullptr) return 5;
  switch (err->code()) {
    case ErrorCode::kConfigError:
    case ErrorCode::kTemplateError:
    case ErrorCode::kCapabilityError:
      return 2;
    case ErrorCode::kStageOrderError:
      return 3;
    case ErrorCode::kBackendUnreachable:
    case ErrorCode::kTimeout:
    case ErrorCode::kBackendError:
      return 4;
    default:
      return 5;
  }
}

}  // namespace simdistill
