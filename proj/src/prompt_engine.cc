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

#include "simdistill/prompt_engine.h"

#include <algorithm>
#include <fstream>
#include <optional>
#include <sstream>

#include "json.hpp"
#include "simdistill/error.h"
#include "simdistill/unicode.h"

namespace simdistill {
namespace {

bool IsNameStart(char c) { return c >= 'A' && c <= 'Z'; }
bool IsNameChar(char c) {
  return IsNameStart(c) || (c >= '0' && c <= '9') || c == '_';
}

// If body[pos] starts a <NAME> token, returns NAME's length.
std::optional<size_t> MatchPlaceholder(std::string_view body, size_t pos) {
  if (body[pos] != '<' || pos + 1 >= body.size() || !IsNameStart(body[pos + 1]))
    return std::nullopt;
  size_t end = pos + 2;
  while (end < body.size() && IsNameChar(body[end])) ++end;
  if (end >= body.size() || body[end] != '>') return std::nullopt;
  return end - pos - 1;
}

struct Line {
  std::string_view text;
  size_t begin;
};

// Splits on LF, CR, NEL, LS and PS.
std::vector<Line> SplitAnyLineBreak(std::string_view s) {
  std::vector<Line> lines;
  size_t start = 0;
  size_t i = 0;
  while (i < s.size()) {
    size_t break_len = 0;
    const auto b = static_cast<unsigned char>(s[i]);
    if (b == '\n') {
      break_len = 1;
    } else if (b == '\r') {
      break_len = (i + 1 < s.size() && s[i + 1] == '\n') ? 2 : 1;
    } else if (b == 0xC2 && i + 1 < s.size() &&
               static_cast<unsigned char>(s[i + 1]) == 0x85) {
      break_len = 2;
    } else if (b == 0xE2 && i + 2 < s.size() &&
               static_cast<unsigned char>(s[i + 1]) == 0x80 &&
               (static_cast<unsigned char>(s[i + 2]) == 0xA8 ||
                static_cast<unsigned char>(s[i + 2]) == 0xA9)) {
      break_len = 3;
    }
    if (break_len == 0) {
      ++i;
      continue;
    }
    lines.push_back({s.substr(start, i - start), start});
    i += break_len;
    start = i;
  }
  if (start < s.size()) lines.push_back({s.substr(start), start});
  return lines;
}

std::string ExtractSentence(const std::vector<Line>& lines, size_t from) {
  for (size_t i = from; i < lines.size(); ++i) {
    std::string candidate = unicode::Trim(lines[i].text);
    if (candidate.empty()) continue;
    if (candidate.rfind("D)", 0) == 0) return {};
    const size_t cut = candidate.find(kAdditionalExplanationHeader);
    if (cut != std::string::npos) candidate = unicode::Trim(candidate.substr(0, cut));
    return candidate;
  }
  return {};
}

}  // namespace

std::string_view TemplateKindName(TemplateKind kind) {
  switch (kind) {
    case TemplateKind::kMeaningPreserving: return "meaning-preserving";
    case TemplateKind::kMeaningChanging: return "meaning-changing";
    case TemplateKind::kScoring: return "scoring";
  }
  return "";
}

std::string_view ExplanationStyleName(ExplanationStyle style) {
  switch (style) {
    case ExplanationStyle::kFiveDifferences: return "five-differences";
    case ExplanationStyle::kThreeIdeas: return "three-ideas";
    case ExplanationStyle::kNone: return "none";
  }
  return "";
}

TemplateKind ParseTemplateKind(std::string_view name) {
  if (name == "meaning-preserving") return TemplateKind::kMeaningPreserving;
  if (name == "meaning-changing") return TemplateKind::kMeaningChanging;
  if (name == "scoring") return TemplateKind::kScoring;
  throw Error(ErrorCode::kTemplateError,
              "unknown template kind '" + std::string(name) + "'");
}

ExplanationStyle ParseExplanationStyle(std::string_view name) {
  if (name == "five-differences") return ExplanationStyle::kFiveDifferences;
  if (name == "three-ideas") return ExplanationStyle::kThreeIdeas;
  if (name == "none") return ExplanationStyle::kNone;
  throw Error(ErrorCode::kTemplateError,
              "unknown explanation style '" + std::string(name) + "'");
}

std::vector<std::string> FindPlaceholders(std::string_view body) {
  std::vector<std::string> names;
  for (size_t pos = 0; pos < body.size(); ++pos) {
    const auto len = MatchPlaceholder(body, pos);
    if (!len) continue;
    std::string name(body.substr(pos + 1, *len));
    if (std::find(names.begin(), names.end(), name) == names.end()) {
      names.push_back(std::move(name));
    }
    pos += *len + 1;
  }
  return names;
}

void ValidateTemplate(const PromptTemplate& tmpl) {
  const auto found = FindPlaceholders(tmpl.body);
  const std::set<std::string> in_body(found.begin(), found.end());
  if (in_body != tmpl.placeholders) {
    throw Error(ErrorCode::kTemplateError,
                "template '" + tmpl.template_id +
                    "': body placeholders differ from the declared set");
  }
  auto has = [&](const char* name) { return in_body.count(name) > 0; };
  if (tmpl.kind == TemplateKind::kScoring) {
    for (const auto& name : in_body) {
      if (name != placeholder::kSentence1 && name != placeholder::kSentence2 &&
          name != placeholder::kAdditionalExamples) {
        throw Error(ErrorCode::kTemplateError,
                    "scoring template '" + tmpl.template_id +
                        "' uses unknown placeholder <" + name + ">");
      }
    }
    if (!has(placeholder::kSentence1) || !has(placeholder::kSentence2)) {
      throw Error(ErrorCode::kTemplateError,
                  "scoring template '" + tmpl.template_id +
                      "' needs <SENTENCE_1> and <SENTENCE_2>");
    }
  } else if (!has(placeholder::kSentence) || !has(placeholder::kLanguage)) {
    throw Error(ErrorCode::kTemplateError,
                "generation template '" + tmpl.template_id +
                    "' needs <SENTENCE> and <LANGUAGE>");
  }
}

PromptTemplate ParseTemplate(std::string_view content) {
  auto next_line = [&content](size_t& pos) -> std::optional<std::string_view> {
    if (pos >= content.size()) return std::nullopt;
    size_t end = content.find('\n', pos);
    if (end == std::string_view::npos) end = content.size();
    std::string_view line = content.substr(pos, end - pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    pos = end + 1;
    return line;
  };

  size_t pos = 0;
  auto first = next_line(pos);
  if (!first || *first != "---") {
    throw Error(ErrorCode::kTemplateError, "template must start with '---'");
  }
  std::map<std::string, std::string> header;
  bool closed = false;
  while (auto line = next_line(pos)) {
    if (*line == "---") {
      closed = true;
      break;
    }
    if (unicode::Trim(*line).empty()) continue;
    const size_t colon = line->find(':');
    if (colon == std::string_view::npos) {
      throw Error(ErrorCode::kTemplateError,
                  "bad front-matter line '" + std::string(*line) + "'");
    }
    header[unicode::Trim(line->substr(0, colon))] =
        unicode::Trim(line->substr(colon + 1));
  }
  if (!closed) {
    throw Error(ErrorCode::kTemplateError, "unterminated front matter");
  }
  for (const char* key : {"template_id", "kind", "explanation_style"}) {
    if (header.count(key) == 0 || header[key].empty()) {
      throw Error(ErrorCode::kTemplateError,
                  std::string("front matter lacks '") + key + "'");
    }
  }

  PromptTemplate tmpl;
  tmpl.template_id = header["template_id"];
  tmpl.kind = ParseTemplateKind(header["kind"]);
  tmpl.explanation_style = ParseExplanationStyle(header["explanation_style"]);
  std::string_view body =
      pos >= content.size() ? std::string_view{} : content.substr(pos);
  if (body.size() >= 2 && body.substr(body.size() - 2) == "\r\n") {
    body.remove_suffix(2);
  } else if (!body.empty() && body.back() == '\n') {
    body.remove_suffix(1);
  }
  tmpl.body = std::string(body);
  const auto names = FindPlaceholders(tmpl.body);
  tmpl.placeholders = {names.begin(), names.end()};
  ValidateTemplate(tmpl);
  return tmpl;
}

PromptTemplate LoadTemplate(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kReadError, "cannot open " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  try {
    return ParseTemplate(buffer.str());
  } catch (const Error& e) {
    throw Error(e.code(), path.string() + ": " + e.what());
  }
}

std::string RenderTemplate(const PromptTemplate& tmpl,
                           const std::map<std::string, std::string>& values) {
  for (const auto& name : tmpl.placeholders) {
    if (values.count(name) == 0) {
      throw Error(ErrorCode::kRenderError,
                  "no value for placeholder <" + name + ">");
    }
  }
  std::string out;
  out.reserve(tmpl.body.size());
  const std::string_view body = tmpl.body;
  size_t pos = 0;
  while (pos < body.size()) {
    const auto len = MatchPlaceholder(body, pos);
    if (!len) {
      out.push_back(body[pos++]);
      continue;
    }
    const std::string name(body.substr(pos + 1, *len));
    if (tmpl.placeholders.count(name) == 0) {
      throw Error(ErrorCode::kTemplateError,
                  "template '" + tmpl.template_id +
                      "' has undeclared placeholder <" + name + ">");
    }
    out += values.at(name);
    pos += *len + 2;
  }
  return out;
}

std::string RenderGenerationPrompt(const PromptTemplate& tmpl,
                                   std::string_view sentence,
                                   std::string_view language) {
  if (!tmpl.is_generation()) {
    throw Error(ErrorCode::kTemplateError,
                "template '" + tmpl.template_id + "' is not a generation template");
  }
  if (sentence.empty() || language.empty()) {
    throw Error(ErrorCode::kRenderError, "sentence and language must be non-empty");
  }
  return RenderTemplate(tmpl, {{placeholder::kSentence, std::string(sentence)},
                               {placeholder::kLanguage, std::string(language)}});
}

std::string RenderScoringPrompt(const PromptTemplate& tmpl,
                                std::string_view reference,
                                std::string_view hypothesis,
                                std::string_view additional_examples) {
  if (tmpl.kind != TemplateKind::kScoring) {
    throw Error(ErrorCode::kTemplateError,
                "template '" + tmpl.template_id + "' is not a scoring template");
  }
  return RenderTemplate(
      tmpl, {{placeholder::kSentence1, std::string(reference)},
             {placeholder::kSentence2, std::string(hypothesis)},
             {placeholder::kAdditionalExamples, std::string(additional_examples)}});
}

std::vector<FewShotExample> LoadFewShotExamples(
    const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kReadError, "cannot open " + path.string());
  std::vector<FewShotExample> examples;
  std::string line;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (unicode::Trim(line).empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      FewShotExample ex{j.at("reference").get<std::string>(),
                        j.at("hypothesis").get<std::string>(),
                        j.at("rating").get<int>()};
      if (ex.rating < 0 || ex.rating > 4) {
        throw Error(ErrorCode::kMalformedRecord, "rating outside 0..4", line_no);
      }
      examples.push_back(std::move(ex));
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::kMalformedRecord,
                  path.string() + ":" + std::to_string(line_no) + ": " + e.what(),
                  line_no);
    }
  }
  return examples;
}

std::string FormatFewShotExamples(const std::vector<FewShotExample>& examples) {
  std::string out;
  for (size_t i = 0; i < examples.size(); ++i) {
    if (i > 0) out += "\n\n";
    out += "Reference: " + examples[i].reference + "\nHypothesis: " +
           examples[i].hypothesis +
           "\nRating: " + std::to_string(examples[i].rating);
  }
  return out;
}

ParsedGeneration ParseGenerationOutput(std::string_view raw,
                                       ExplanationStyle style) {
  ParsedGeneration parsed;
  parsed.raw_completion = std::string(raw);
  const std::vector<Line> lines = SplitAnyLineBreak(raw);
  for (size_t i = 0; i < lines.size(); ++i) {
    if (unicode::Trim(lines[i].text) != kSampleOutputHeader) continue;
    parsed.explanation = unicode::Trim(raw.substr(0, lines[i].begin));
    parsed.generated_sentence = ExtractSentence(lines, i + 1);
    parsed.parse_ok = !parsed.generated_sentence.empty();
    return parsed;
  }
  if (style == ExplanationStyle::kNone) {
    parsed.generated_sentence = ExtractSentence(lines, 0);
    parsed.parse_ok = !parsed.generated_sentence.empty();
  }
  return parsed;
}

}  // namespace simdistill
