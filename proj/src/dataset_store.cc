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

#include "simdistill/dataset_store.h"

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <random>

#include "simdistill/digest.h"
#include "simdistill/error.h"
#include "simdistill/unicode.h"

namespace simdistill {
namespace {

bool HasLineBreak(std::string_view s) {
  return s.find_first_of("\n\r") != std::string_view::npos;
}

std::string AtLine(const std::filesystem::path& path, long line_no) {
  return path.string() + ":" + std::to_string(line_no);
}

// Writes all of `data` with as few write() calls as the kernel allows.
bool WriteAll(int fd, std::string_view data) {
  while (!data.empty()) {
    const ssize_t n = ::write(fd, data.data(), data.size());
    if (n < 0) {
      if (errno == EINTR) continue;
      return false;
    }
    data.remove_prefix(static_cast<size_t>(n));
  }
  return true;
}

}  // namespace

std::string_view ScoreScaleName(ScoreScale scale) {
  switch (scale) {
    case ScoreScale::kZeroFour: return "zero-four";
    case ScoreScale::kUnit: return "unit";
    case ScoreScale::kExternal: return "external";
  }
  return "";
}

std::string_view OriginName(Origin origin) {
  switch (origin) {
    case Origin::kGenerated: return "generated";
    case Origin::kBaseline: return "baseline";
    case Origin::kHumanEval: return "human-eval";
  }
  return "";
}

ScoreScale ParseScoreScale(std::string_view name) {
  if (name == "zero-four") return ScoreScale::kZeroFour;
  if (name == "unit") return ScoreScale::kUnit;
  if (name == "external") return ScoreScale::kExternal;
  throw Error(ErrorCode::kInvalidArgument, "unknown score scale '" + std::string(name) + "'");
}

Origin ParseOrigin(std::string_view name) {
  if (name == "generated") return Origin::kGenerated;
  if (name == "baseline") return Origin::kBaseline;
  if (name == "human-eval") return Origin::kHumanEval;
  throw Error(ErrorCode::kInvalidArgument, "unknown origin '" + std::string(name) + "'");
}

void DatasetRecord::Validate() const {
  if (reference.empty() || candidate.empty()) {
    throw Error(ErrorCode::kMalformedRecord, "reference and candidate must be non-empty");
  }
  if (HasLineBreak(reference) || HasLineBreak(candidate)) {
    throw Error(ErrorCode::kMalformedRecord, "reference and candidate must be single-line");
  }
  if (!std::isfinite(score)) {
    throw Error(ErrorCode::kMalformedRecord, "score is not finite");
  }
  if (score_scale == ScoreScale::kZeroFour && (score < 0.0 || score > 4.0)) {
    throw Error(ErrorCode::kMalformedRecord, "zero-four score outside [0, 4]");
  }
  if (score_scale == ScoreScale::kUnit && (score < 0.0 || score > 1.0)) {
    throw Error(ErrorCode::kMalformedRecord, "unit score outside [0, 1]");
  }
}

nlohmann::ordered_json RecordToJson(const DatasetRecord& record) {
  nlohmann::ordered_json j;
  j["reference"] = record.reference;
  j["candidate"] = record.candidate;
  j["score"] = record.score;
  j["score_scale"] = ScoreScaleName(record.score_scale);
  j["language"] = record.language;
  j["origin"] = OriginName(record.origin);
  j["metadata"] = nlohmann::ordered_json::object();
  for (const auto& [key, value] : record.metadata) j["metadata"][key] = value;
  return j;
}

std::string SerializeRecord(const DatasetRecord& record) {
  record.Validate();
  try {
    return RecordToJson(record).dump();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kMalformedRecord, std::string("cannot encode record: ") + e.what());
  }
}

DatasetRecord ParseRecord(std::string_view line) {
  DatasetRecord r;
  try {
    const auto j = nlohmann::json::parse(line);
    if (!j.is_object()) throw Error(ErrorCode::kMalformedRecord, "not a JSON object");
    r.reference = j.at("reference").get<std::string>();
    r.candidate = j.at("candidate").get<std::string>();
    r.score = j.at("score").get<double>();
    r.score_scale = ParseScoreScale(j.at("score_scale").get<std::string>());
    r.language = j.at("language").get<std::string>();
    r.origin = ParseOrigin(j.at("origin").get<std::string>());
    if (j.contains("metadata")) {
      r.metadata = j.at("metadata").get<std::map<std::string, std::string>>();
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kMalformedRecord, e.what());
  } catch (const Error& e) {
    throw Error(ErrorCode::kMalformedRecord, e.what());
  }
  r.Validate();
  return r;
}

size_t WriteRecords(const std::filesystem::path& path,
                    std::span<const DatasetRecord> records) {
  const int fd = ::open(path.c_str(), O_WRONLY | O_CREAT | O_APPEND | O_CLOEXEC, 0644);
  if (fd < 0) {
    throw Error(ErrorCode::kWriteError,
                "cannot open " + path.string() + ": " + std::strerror(errno), 0);
  }
  size_t written = 0;
  for (const auto& record : records) {
    std::string line;
    try {
      line = SerializeRecord(record) + "\n";
    } catch (const Error& e) {
      ::close(fd);
      throw Error(ErrorCode::kWriteError, e.what(), static_cast<long>(written));
    }
    if (!WriteAll(fd, line)) {
      const std::string reason = std::strerror(errno);
      ::close(fd);
      throw Error(ErrorCode::kWriteError, path.string() + ": " + reason,
                  static_cast<long>(written));
    }
    ++written;
  }
  if (::close(fd) != 0) {
    throw Error(ErrorCode::kWriteError, "close failed for " + path.string(),
                static_cast<long>(written));
  }
  return written;
}

std::vector<DatasetRecord> ReadRecords(const std::filesystem::path& path,
                                       MalformedPolicy policy,
                                       std::vector<std::string>* warnings) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kReadError, "cannot open " + path.string());
  std::vector<DatasetRecord> records;
  std::string line;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    try {
      records.push_back(ParseRecord(line));
    } catch (const Error& e) {
      const std::string message = AtLine(path, line_no) + ": " + e.what();
      if (policy == MalformedPolicy::kFailFast) {
        throw Error(ErrorCode::kMalformedRecord, message, line_no);
      }
      if (warnings != nullptr) warnings->push_back(message);
    }
  }
  return records;
}

DatasetRecord NormalizeScore(DatasetRecord record, ScoreScale target) {
  if (record.score_scale == ScoreScale::kExternal || target == ScoreScale::kExternal) {
    throw Error(ErrorCode::kNormalizationError,
                "external scores need an explicit mapping");
  }
  if (record.score_scale == ScoreScale::kZeroFour && target == ScoreScale::kUnit) {
    record.score /= 4.0;
  } else if (record.score_scale == ScoreScale::kUnit &&
             target == ScoreScale::kZeroFour) {
    record.score *= 4.0;
  }
  record.score_scale = target;
  return record;
}

std::vector<DatasetRecord> ReadTsvDataset(const std::filesystem::path& path,
                                          const std::string& language,
                                          ScoreScale scale, Origin origin) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kReadError, "cannot open " + path.string());
  std::vector<DatasetRecord> records;
  std::string line;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const size_t t1 = line.find('\t');
    const size_t t2 = t1 == std::string::npos ? t1 : line.find('\t', t1 + 1);
    if (t2 == std::string::npos || line.find('\t', t2 + 1) != std::string::npos) {
      throw Error(ErrorCode::kMalformedRecord,
                  AtLine(path, line_no) + ": expected three tab-separated fields", line_no);
    }
    DatasetRecord r;
    r.reference = line.substr(0, t1);
    r.candidate = line.substr(t1 + 1, t2 - t1 - 1);
    const std::string score_text = unicode::Trim(line.substr(t2 + 1));
    const auto [end, ec] = std::from_chars(
        score_text.data(), score_text.data() + score_text.size(), r.score);
    if (ec != std::errc() || end != score_text.data() + score_text.size()) {
      throw Error(ErrorCode::kMalformedRecord,
                  AtLine(path, line_no) + ": bad score '" + score_text + "'", line_no);
    }
    r.score_scale = scale;
    r.language = language;
    r.origin = origin;
    try {
      r.Validate();
    } catch (const Error& e) {
      throw Error(ErrorCode::kMalformedRecord, AtLine(path, line_no) + ": " + e.what(),
                  line_no);
    }
    records.push_back(std::move(r));
  }
  return records;
}

std::vector<size_t> SeededPermutation(size_t n, uint64_t seed) {
  std::vector<size_t> perm(n);
  for (size_t i = 0; i < n; ++i) perm[i] = i;
  std::mt19937_64 rng(seed);
  for (size_t i = n; i > 1; --i) {
    // Uniform in [0, i) by rejection from the largest multiple of i.
    const uint64_t bound = static_cast<uint64_t>(i);
    const uint64_t limit = std::numeric_limits<uint64_t>::max() -
                           std::numeric_limits<uint64_t>::max() % bound;
    uint64_t draw;
    do {
      draw = rng();
    } while (draw >= limit);
    std::swap(perm[i - 1], perm[static_cast<size_t>(draw % bound)]);
  }
  return perm;
}

void MixSpec::Validate() const {
  bool any = false;
  for (const auto& part : parts) any = any || part.include;
  if (!any) throw Error(ErrorCode::kConfigError, "mix spec includes no part");
  if (output_score_scale == ScoreScale::kExternal) {
    throw Error(ErrorCode::kConfigError, "mix output scale must be zero-four or unit");
  }
}

MixSpec MixSpec::FromJson(const nlohmann::json& j) {
  MixSpec spec;
  try {
    for (const auto& p : j.at("parts")) {
      MixPart part;
      part.path = p.at("path").get<std::string>();
      part.language = p.value("language", std::string());
      part.include = p.value("include", true);
      spec.parts.push_back(std::move(part));
    }
    spec.shuffle_seed = j.value("shuffle_seed", uint64_t{0});
    spec.output_score_scale =
        ParseScoreScale(j.value("output_score_scale", std::string("unit")));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kConfigError, std::string("mix spec: ") + e.what());
  } catch (const Error& e) {
    throw Error(ErrorCode::kConfigError, e.what());
  }
  spec.Validate();
  return spec;
}

nlohmann::ordered_json MixSpec::ToJson() const {
  nlohmann::ordered_json j;
  j["parts"] = nlohmann::ordered_json::array();
  for (const auto& part : parts) {
    j["parts"].push_back(
        {{"path", part.path}, {"language", part.language}, {"include", part.include}});
  }
  j["shuffle_seed"] = shuffle_seed;
  j["output_score_scale"] = ScoreScaleName(output_score_scale);
  return j;
}

nlohmann::ordered_json MixManifest::ToJson() const {
  nlohmann::ordered_json j;
  j["seed"] = seed;
  j["parts"] = nlohmann::ordered_json::array();
  for (const auto& part : parts) {
    nlohmann::ordered_json p;
    p["path"] = part.path;
    p["language"] = part.language;
    p["count"] = part.count;
    p["sha256"] = part.sha256;
    j["parts"].push_back(std::move(p));
  }
  j["total"] = total;
  j["output_sha256"] = output_sha256;
  return j;
}

MixManifest MixDatasets(const MixSpec& spec, const std::filesystem::path& output,
                        const std::filesystem::path& manifest_path,
                        const std::filesystem::path& base_dir) {
  spec.Validate();
  MixManifest manifest;
  manifest.seed = spec.shuffle_seed;
  std::vector<DatasetRecord> all;
  for (const auto& part : spec.parts) {
    if (!part.include) continue;
    const std::filesystem::path resolved = base_dir.empty() ? std::filesystem::path(part.path)
                                                            : base_dir / part.path;
    std::vector<DatasetRecord> records = ReadRecords(resolved);
    for (size_t i = 0; i < records.size(); ++i) {
      try {
        all.push_back(NormalizeScore(std::move(records[i]), spec.output_score_scale));
      } catch (const Error& e) {
        throw Error(ErrorCode::kMixError,
                    part.path + " record " + std::to_string(i + 1) + ": " + e.what(),
                    static_cast<long>(i + 1));
      }
    }
    manifest.parts.push_back(
        {part.path, part.language, records.size(), Sha256FileHex(resolved)});
  }

  const std::vector<size_t> perm = SeededPermutation(all.size(), spec.shuffle_seed);
  std::string body;
  for (size_t index : perm) {
    body += SerializeRecord(all[index]);
    body += '\n';
  }
  {
    std::ofstream out(output, std::ios::binary | std::ios::trunc);
    out << body;
    if (!out) throw Error(ErrorCode::kWriteError, "cannot write " + output.string());
  }
  manifest.total = all.size();
  manifest.output_sha256 = Sha256Hex(body);
  {
    std::ofstream out(manifest_path, std::ios::binary | std::ios::trunc);
    out << manifest.ToJson().dump(2) << '\n';
    if (!out) throw Error(ErrorCode::kWriteError, "cannot write " + manifest_path.string());
  }
  return manifest;
}

MixRegime ParseMixRegime(std::string_view name) {
  if (name == "baseline") return MixRegime::kBaseline;
  if (name == "small") return MixRegime::kSmall;
  if (name == "medium") return MixRegime::kMedium;
  if (name == "large") return MixRegime::kLarge;
  throw Error(ErrorCode::kConfigError, "unknown mix regime '" + std::string(name) + "'");
}

std::vector<std::string> RegimeLanguages(MixRegime regime) {
  std::vector<std::string> langs;
  if (regime == MixRegime::kBaseline) return langs;
  // Spanish, Mongolian, Amharic.
  langs.insert(langs.end(), {"es", "mn", "am"});
  if (regime == MixRegime::kSmall) return langs;
  // Urdu, Belarusian, Punjabi, Macedonian.
  langs.insert(langs.end(), {"ur", "be", "pa", "mk"});
  if (regime == MixRegime::kMedium) return langs;
  // Arabic, Persian.
  langs.insert(langs.end(), {"ar", "fa"});
  return langs;
}

MixSpec BuildRegimeSpec(MixRegime regime, const std::string& baseline_path,
                        const std::map<std::string, std::string>& generated,
                        uint64_t seed, ScoreScale scale) {
  const auto langs = RegimeLanguages(regime);
  MixSpec spec;
  spec.parts.push_back({baseline_path, "baseline", true});
  for (const auto& [language, path] : generated) {
    const bool include = std::find(langs.begin(), langs.end(), language) != langs.end();
    spec.parts.push_back({path, language, include});
  }
  spec.shuffle_seed = seed;
  spec.output_score_scale = scale;
  return spec;
}

}  // namespace simdistill
