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

// Sentence selection from raw web-corpus documents.
//
// Each document line contributes at most one sentence: the first one. The
// segmenter is rule based. A boundary is a terminator scalar followed by
// White_Space or the end of the line, unless the whitespace-delimited token
// ending at that terminator is listed as an abbreviation. A selected sentence
// must begin with a letter (any script) and end with a terminator.

#ifndef SIMDISTILL_CORPUS_INGEST_H_
#define SIMDISTILL_CORPUS_INGEST_H_

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "simdistill/filter_report.h"

namespace simdistill {

struct RawDocument {
  std::string doc_id;
  std::vector<std::string> lines;
  std::string language;
};

struct CandidateSentence {
  std::string text;
  std::string language;
  std::string source_doc;
  size_t source_line = 0;

  bool operator==(const CandidateSentence&) const = default;
};

struct SegmenterConfig {
  std::u32string terminators = U".!?。؟।॥";
  // Exact, case-sensitive tokens such as "Dr." that do not end a sentence.
  std::vector<std::string> abbreviations;

  bool IsTerminator(char32_t c) const;
};

struct SelectionVerdict {
  bool accepted = false;
  std::optional<std::string> reason;
};

std::optional<std::string> SegmentFirstSentence(
    std::string_view line, const SegmenterConfig& config = {});

SelectionVerdict PassesSelectionFilter(std::string_view sentence,
                                       const SegmenterConfig& config = {});

// Lines are trimmed; empty lines are skipped without being counted. A
// non-empty line with no sentence boundary is counted as
// no-terminal-punctuation, which is what the filter would report for the
// whole line. `report` may be null.
std::vector<CandidateSentence> ExtractCandidateSentences(
    const RawDocument& doc, const SegmenterConfig& config = {},
    FilterReport* report = nullptr);

// Keeps the first occurrence of each exact text. Duplicates are counted in
// `report` when given.
std::vector<CandidateSentence> DedupeStream(
    std::vector<CandidateSentence> sentences, FilterReport* report = nullptr);

// Splits on "\n", "\r\n" and "\r".
std::vector<std::string> SplitLines(std::string_view text);

// Newline-delimited {"id", "text", "language"} records.
std::vector<RawDocument> ReadJsonlCorpus(const std::filesystem::path& path);

// Whole file as one document; doc_id is the file name.
RawDocument ReadPlainTextDocument(const std::filesystem::path& path,
                                  const std::string& language);

}  // namespace simdistill

#endif  // SIMDISTILL_CORPUS_INGEST_H_
