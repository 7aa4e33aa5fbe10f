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

#include "simdistill/corpus_ingest.h"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include "json.hpp"
#include "simdistill/error.h"
#include "simdistill/unicode.h"

namespace simdistill {

bool SegmenterConfig::IsTerminator(char32_t c) const {
  return terminators.find(c) != std::u32string::npos;
}

std::optional<std::string> SegmentFirstSentence(std::string_view line,
                                                const SegmenterConfig& config) {
  const std::u32string text = unicode::Decode(unicode::Trim(line));
  size_t token_start = 0;
  for (size_t i = 0; i < text.size(); ++i) {
    const char32_t c = text[i];
    if (unicode::IsWhitespace(c)) {
      token_start = i + 1;
      continue;
    }
    if (!config.IsTerminator(c)) continue;
    const bool at_end = i + 1 == text.size();
    if (!at_end && !unicode::IsWhitespace(text[i + 1])) continue;
    if (!at_end && !config.abbreviations.empty()) {
      const std::string token = unicode::Encode(
          std::u32string_view(text).substr(token_start, i + 1 - token_start));
      if (std::find(config.abbreviations.begin(), config.abbreviations.end(),
                    token) != config.abbreviations.end()) {
        continue;
      }
    }
    return unicode::Trim(
        unicode::Encode(std::u32string_view(text).substr(0, i + 1)));
  }
  return std::nullopt;
}

SelectionVerdict PassesSelectionFilter(std::string_view sentence,
                                       const SegmenterConfig& config) {
  const std::u32string text = unicode::Decode(sentence);
  if (text.empty() || !unicode::IsLetter(text.front())) {
    return {false, reject::kNotLetterStart};
  }
  if (!config.IsTerminator(text.back())) {
    return {false, reject::kNoTerminalPunctuation};
  }
  return {true, std::nullopt};
}

std::vector<CandidateSentence> ExtractCandidateSentences(
    const RawDocument& doc, const SegmenterConfig& config,
    FilterReport* report) {
  std::vector<CandidateSentence> out;
  FilterReport local;
  for (size_t i = 0; i < doc.lines.size(); ++i) {
    const std::string line = unicode::Trim(doc.lines[i]);
    if (line.empty()) continue;
    const std::optional<std::string> sentence =
        SegmentFirstSentence(line, config);
    if (!sentence) {
      local.Reject(reject::kNoTerminalPunctuation);
      continue;
    }
    const SelectionVerdict verdict = PassesSelectionFilter(*sentence, config);
    if (!verdict.accepted) {
      local.Reject(*verdict.reason);
      continue;
    }
    local.Accept();
    out.push_back({*sentence, doc.language, doc.doc_id, i});
  }
  if (report != nullptr) report->Merge(local);
  return out;
}

std::vector<CandidateSentence> DedupeStream(
    std::vector<CandidateSentence> sentences, FilterReport* report) {
  std::unordered_set<std::string> seen;
  std::vector<CandidateSentence> out;
  out.reserve(sentences.size());
  for (auto& s : sentences) {
    if (!seen.insert(s.text).second) {
      if (report != nullptr) report->Reject(reject::kDuplicate);
      continue;
    }
    if (report != nullptr) report->Accept();
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<std::string> SplitLines(std::string_view text) {
  std::vector<std::string> lines;
  std::string current;
  for (size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (c == '\n' || c == '\r') {
      lines.push_back(std::move(current));
      current.clear();
      if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') ++i;
    } else {
      current.push_back(c);
    }
  }
  if (!current.empty()) lines.push_back(std::move(current));
  return lines;
}

std::vector<RawDocument> ReadJsonlCorpus(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kReadError, "cannot open " + path.string());
  std::vector<RawDocument> docs;
  std::unordered_set<std::string> ids;
  std::string line;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (unicode::Trim(line).empty()) continue;
    RawDocument doc;
    try {
      const auto j = nlohmann::json::parse(line);
      doc.doc_id = j.at("id").get<std::string>();
      doc.language = j.at("language").get<std::string>();
      doc.lines = SplitLines(j.at("text").get<std::string>());
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::kMalformedRecord,
                  path.string() + ":" + std::to_string(line_no) + ": " +
                      e.what(),
                  line_no);
    }
    if (doc.doc_id.empty() || doc.language.empty()) {
      throw Error(ErrorCode::kMalformedRecord,
                  path.string() + ":" + std::to_string(line_no) +
                      ": empty id or language",
                  line_no);
    }
    if (!ids.insert(doc.doc_id).second) {
      throw Error(ErrorCode::kMalformedRecord,
                  path.string() + ":" + std::to_string(line_no) +
                      ": duplicate document id " + doc.doc_id,
                  line_no);
    }
    docs.push_back(std::move(doc));
  }
  return docs;
}

RawDocument ReadPlainTextDocument(const std::filesystem::path& path,
                                  const std::string& language) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kReadError, "cannot open " + path.string());
  if (language.empty()) {
    throw Error(ErrorCode::kConfigError,
                "plain-text corpus " + path.string() + " needs a language");
  }
  std::stringstream buffer;
  buffer << in.rdbuf();
  return RawDocument{path.filename().string(), SplitLines(buffer.str()),
                     language};
}

}  // namespace simdistill
