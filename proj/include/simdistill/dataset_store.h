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

// Dataset files, the TSV adapter and dataset mixing.
//
// A dataset file holds one JSON object per line with keys in this order:
//   reference, candidate, score, score_scale, language, origin, metadata
// Generated sets keep their native 0-4 scores; scales are reconciled only
// when datasets are mixed.

#ifndef SIMDISTILL_DATASET_STORE_H_
#define SIMDISTILL_DATASET_STORE_H_

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace simdistill {

enum class ScoreScale { kZeroFour, kUnit, kExternal };
enum class Origin { kGenerated, kBaseline, kHumanEval };

std::string_view ScoreScaleName(ScoreScale scale);
std::string_view OriginName(Origin origin);
ScoreScale ParseScoreScale(std::string_view name);
Origin ParseOrigin(std::string_view name);

struct DatasetRecord {
  std::string reference;
  std::string candidate;
  double score = 0.0;
  ScoreScale score_scale = ScoreScale::kZeroFour;
  std::string language;
  Origin origin = Origin::kGenerated;
  std::map<std::string, std::string> metadata;

  // Throws malformed-record on a violated invariant.
  void Validate() const;
  bool operator==(const DatasetRecord&) const = default;
};

nlohmann::ordered_json RecordToJson(const DatasetRecord& record);
// One line, no trailing newline.
std::string SerializeRecord(const DatasetRecord& record);
DatasetRecord ParseRecord(std::string_view line);

// Appends one line per record; each line goes out in a single write so a
// failure leaves a valid prefix. Throws write-error whose detail() is the
// number of records written.
size_t WriteRecords(const std::filesystem::path& path,
                    std::span<const DatasetRecord> records);

enum class MalformedPolicy { kFailFast, kSkipWithWarning };

// Malformed lines throw malformed-record with the 1-based line number as
// detail(), or are skipped and described in `warnings`.
std::vector<DatasetRecord> ReadRecords(
    const std::filesystem::path& path,
    MalformedPolicy policy = MalformedPolicy::kFailFast,
    std::vector<std::string>* warnings = nullptr);

// zero-four <-> unit by a factor of 4. External scales throw
// normalization-error.
DatasetRecord NormalizeScore(DatasetRecord record, ScoreScale target);

// reference<TAB>candidate<TAB>score per line.
std::vector<DatasetRecord> ReadTsvDataset(const std::filesystem::path& path,
                                          const std::string& language,
                                          ScoreScale scale,
                                          Origin origin = Origin::kBaseline);

// Fisher-Yates driven by mt19937_64 with rejection sampling, so the
// permutation for a seed is the same on every platform.
std::vector<size_t> SeededPermutation(size_t n, uint64_t seed);

struct MixPart {
  std::string path;
  std::string language;
  bool include = true;
};

struct MixSpec {
  std::vector<MixPart> parts;
  uint64_t shuffle_seed = 0;
  ScoreScale output_score_scale = ScoreScale::kUnit;

  void Validate() const;
  static MixSpec FromJson(const nlohmann::json& j);
  nlohmann::ordered_json ToJson() const;
};

struct MixManifest {
  struct Part {
    std::string path;
    std::string language;
    size_t count = 0;
    std::string sha256;
  };
  uint64_t seed = 0;
  std::vector<Part> parts;
  size_t total = 0;
  std::string output_sha256;

  nlohmann::ordered_json ToJson() const;
};

// Concatenates the included parts, normalises scores, shuffles and writes
// `output` plus `manifest_path`. Part paths are resolved against `base_dir`
// and reported verbatim in the manifest. Throws mix-error naming the record
// whose score cannot be normalised.
MixManifest MixDatasets(const MixSpec& spec,
                        const std::filesystem::path& output,
                        const std::filesystem::path& manifest_path,
                        const std::filesystem::path& base_dir = {});

// Cumulative experiment compositions: each regime adds generated languages
// on top of the previous one, always including the baseline.
enum class MixRegime { kBaseline, kSmall, kMedium, kLarge };

MixRegime ParseMixRegime(std::string_view name);
std::vector<std::string> RegimeLanguages(MixRegime regime);

// Baseline first, then one part per entry of `generated` (in map order),
// included iff its language belongs to the regime.
MixSpec BuildRegimeSpec(MixRegime regime, const std::string& baseline_path,
                        const std::map<std::string, std::string>& generated,
                        uint64_t seed, ScoreScale scale = ScoreScale::kUnit);

}  // namespace simdistill

#endif  // SIMDISTILL_DATASET_STORE_H_
