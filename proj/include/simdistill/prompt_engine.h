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

// Prompt templates for pair generation and pair scoring.
//
// A template file is UTF-8 text with a front-matter block:
//
//   ---
//   template_id: preserve-five-differences
//   kind: meaning-preserving
//   explanation_style: five-differences
//   ---
//   <body>
//
// Placeholders in the body are written <NAME> with NAME matching
// [A-Z][A-Z0-9_]*. One trailing newline at the end of the file is not part
// of the body, so a scoring body can end in "Rating: ".

#ifndef SIMDISTILL_PROMPT_ENGINE_H_
#define SIMDISTILL_PROMPT_ENGINE_H_

#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace simdistill {

enum class TemplateKind { kMeaningPreserving, kMeaningChanging, kScoring };
enum class ExplanationStyle { kFiveDifferences, kThreeIdeas, kNone };

std::string_view TemplateKindName(TemplateKind kind);
std::string_view ExplanationStyleName(ExplanationStyle style);
TemplateKind ParseTemplateKind(std::string_view name);
ExplanationStyle ParseExplanationStyle(std::string_view name);

namespace placeholder {
inline constexpr char kSentence[] = "SENTENCE";
inline constexpr char kLanguage[] = "LANGUAGE";
inline constexpr char kSentence1[] = "SENTENCE_1";
inline constexpr char kSentence2[] = "SENTENCE_2";
inline constexpr char kAdditionalExamples[] = "ADDITIONAL_EXAMPLES";
}  // namespace placeholder

struct PromptTemplate {
  std::string template_id;
  TemplateKind kind = TemplateKind::kMeaningPreserving;
  std::string body;
  ExplanationStyle explanation_style = ExplanationStyle::kNone;
  std::set<std::string> placeholders;

  bool is_generation() const { return kind != TemplateKind::kScoring; }
};

// Placeholder names in order of first appearance, duplicates removed.
std::vector<std::string> FindPlaceholders(std::string_view body);

// Throws template-error when the body and declared placeholder set differ or
// the set does not fit the kind: scoring needs SENTENCE_1 and SENTENCE_2 and
// may also use ADDITIONAL_EXAMPLES; generation needs SENTENCE and LANGUAGE.
void ValidateTemplate(const PromptTemplate& tmpl);

// Parses and validates a template file's text. The placeholder set is the
// set found in the body.
PromptTemplate ParseTemplate(std::string_view content);
PromptTemplate LoadTemplate(const std::filesystem::path& path);

// Single left-to-right pass; substituted values are never rescanned. Throws
// template-error for a body placeholder missing from tmpl.placeholders and
// render-error for a declared placeholder with no value.
std::string RenderTemplate(const PromptTemplate& tmpl,
                           const std::map<std::string, std::string>& values);

std::string RenderGenerationPrompt(const PromptTemplate& tmpl,
                                   std::string_view sentence,
                                   std::string_view language);

// `additional_examples` fills <ADDITIONAL_EXAMPLES> when the template has it.
std::string RenderScoringPrompt(const PromptTemplate& tmpl,
                                std::string_view reference,
                                std::string_view hypothesis,
                                std::string_view additional_examples = {});

struct FewShotExample {
  std::string reference;
  std::string hypothesis;
  int rating = 0;
};

// Newline-delimited {"reference", "hypothesis", "rating"} objects.
std::vector<FewShotExample> LoadFewShotExamples(
    const std::filesystem::path& path);

// Formats examples the way the scoring template lays out its inline ones:
// "Reference: ...\nHypothesis: ...\nRating: N", blocks joined by a blank line.
std::string FormatFewShotExamples(const std::vector<FewShotExample>& examples);

inline constexpr char kSampleOutputHeader[] = "C) Sample Output";
inline constexpr char kAdditionalExplanationHeader[] =
    "D) Additional Explanation";

struct ParsedGeneration {
  std::string explanation;
  std::string generated_sentence;
  std::string raw_completion;
  bool parse_ok = false;
};

// Never throws. The sample-output header is matched as a whole line after
// trimming. With ExplanationStyle::kNone the prompt already ends at that
// header, so a completion without it is read from its first line.
ParsedGeneration ParseGenerationOutput(std::string_view raw,
                                       ExplanationStyle style);

}  // namespace simdistill

#endif  // SIMDISTILL_PROMPT_ENGINE_H_
