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

#include <string>

#include "gtest/gtest.h"
#include "simdistill/error.h"
#include "test_util.h"

namespace simdistill {

namespace {

using ::simdistill::testing::CodeOf;
using ::simdistill::testing::SourceDir;
using ::simdistill::testing::Spit;
using ::simdistill::testing::TempDir;

PromptTemplate Make(TemplateKind kind, std::string body) {
  PromptTemplate t;
  t.template_id = "t";
  t.kind = kind;
  t.body = std::move(body);
  for (const auto& p : FindPlaceholders(t.body)) t.placeholders.insert(p);
  return t;
}

bool EndsWith(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

TEST(FindPlaceholders, Names) {
  EXPECT_EQ(FindPlaceholders("<A> x <B_1> <A> <lower> <1X> <>"),
            (std::vector<std::string>{"A", "B_1"}));
}

TEST(ShippedTemplates, LoadAndEndAtTheRightHeader) {
  const auto dir = SourceDir() / "data" / "templates";
  const PromptTemplate preserve = LoadTemplate(dir / "preserve_five_differences.txt");
  EXPECT_EQ(preserve.kind, TemplateKind::kMeaningPreserving);
  EXPECT_EQ(preserve.explanation_style, ExplanationStyle::kFiveDifferences);
  const std::string prompt = RenderGenerationPrompt(preserve, "Hello.", "English");
  EXPECT_NE(prompt.find("A) Sample Input\nHello.\n"), std::string::npos);
  EXPECT_NE(prompt.find("a sentence in English."), std::string::npos);
  EXPECT_TRUE(EndsWith(
      prompt, "B) Five Differences Between the Sample Input Sentence and the Output Sentence\n"));
  EXPECT_EQ(prompt.find('<'), std::string::npos);

  const PromptTemplate ideas = LoadTemplate(dir / "preserve_three_ideas.txt");
  EXPECT_EQ(ideas.explanation_style, ExplanationStyle::kThreeIdeas);
  const PromptTemplate change = LoadTemplate(dir / "change_five_differences.txt");
  EXPECT_EQ(change.kind, TemplateKind::kMeaningChanging);

  const PromptTemplate scoring = LoadTemplate(dir / "scoring.txt");
  EXPECT_EQ(scoring.kind, TemplateKind::kScoring);
  const std::string scored = RenderScoringPrompt(scoring, "A.", "B.");
  EXPECT_TRUE(EndsWith(scored, "Reference: A.\nHypothesis: B.\nRating: "));
  EXPECT_NE(scored.find("on a scale of 0 to 4"), std::string::npos);
}

TEST(RenderTemplate, ZeroPlaceholdersIsVerbatim) {
  const auto t = Make(TemplateKind::kMeaningPreserving, "no placeholders here");
  EXPECT_EQ(RenderTemplate(t, {}), "no placeholders here");
}

TEST(RenderTemplate, RepeatedPlaceholder) {
  const auto t = Make(TemplateKind::kMeaningPreserving, "<SENTENCE> in <LANGUAGE>: <SENTENCE>");
  EXPECT_EQ(RenderGenerationPrompt(t, "Hi.", "en"), "Hi. in en: Hi.");
}

TEST(RenderTemplate, ValuesAreNotRescanned) {
  const auto t = Make(TemplateKind::kScoring, "R=<SENTENCE_1> H=<SENTENCE_2>");
  EXPECT_EQ(RenderScoringPrompt(t, "<SENTENCE_2>", "<SENTENCE_1>"),
            "R=<SENTENCE_2> H=<SENTENCE_1>");
  EXPECT_EQ(RenderScoringPrompt(t, "same", "same"), "R=same H=same");
}

TEST(RenderTemplate, Errors) {
  auto t = Make(TemplateKind::kMeaningPreserving, "<SENTENCE> <LANGUAGE>");
  EXPECT_EQ(CodeOf([&] { RenderTemplate(t, {{"SENTENCE", "x"}}); }), ErrorCode::kRenderError);
  EXPECT_EQ(CodeOf([&] { RenderGenerationPrompt(t, "", "en"); }), ErrorCode::kRenderError);
  t.placeholders.erase("LANGUAGE");
  EXPECT_EQ(CodeOf([&] { RenderTemplate(t, {{"SENTENCE", "x"}}); }), ErrorCode::kTemplateError);
  const auto scoring = Make(TemplateKind::kScoring, "<SENTENCE_1><SENTENCE_2>");
  EXPECT_EQ(CodeOf([&] { RenderGenerationPrompt(scoring, "a", "b"); }),
            ErrorCode::kTemplateError);
  EXPECT_EQ(CodeOf([&] { RenderScoringPrompt(t, "a", "b"); }), ErrorCode::kTemplateError);
}

TEST(RenderTemplate, InjectiveInValues) {
  const auto t = Make(TemplateKind::kMeaningPreserving, "S:<SENTENCE>\nL:<LANGUAGE>");
  EXPECT_NE(RenderGenerationPrompt(t, "a.", "en"), RenderGenerationPrompt(t, "b.", "en"));
  EXPECT_NE(RenderGenerationPrompt(t, "a.", "en"), RenderGenerationPrompt(t, "a.", "es"));
}

TEST(ParseTemplate, FrontMatter) {
  const auto t = ParseTemplate(
      "---\ntemplate_id: x\nkind: scoring\nexplanation_style: none\n---\n"
      "Ref <SENTENCE_1> Hyp <SENTENCE_2>\nRating: \n");
  EXPECT_EQ(t.template_id, "x");
  EXPECT_EQ(t.body, "Ref <SENTENCE_1> Hyp <SENTENCE_2>\nRating: ");
  EXPECT_EQ(t.placeholders, (std::set<std::string>{"SENTENCE_1", "SENTENCE_2"}));
}

TEST(ParseTemplate, Invalid) {
  EXPECT_EQ(CodeOf([] { ParseTemplate("no front matter"); }), ErrorCode::kTemplateError);
  EXPECT_EQ(CodeOf([] { ParseTemplate("---\ntemplate_id: x\n"); }), ErrorCode::kTemplateError);
  EXPECT_EQ(CodeOf([] {
              ParseTemplate("---\ntemplate_id: x\nkind: poem\nexplanation_style: none\n---\n");
            }),
            ErrorCode::kTemplateError);
  // Scoring templates only take the two sentences and the few-shot block.
  EXPECT_EQ(CodeOf([] {
              ParseTemplate(
                  "---\ntemplate_id: x\nkind: scoring\nexplanation_style: none\n---\n"
                  "<SENTENCE_1> <SENTENCE_2> <LANGUAGE>");
            }),
            ErrorCode::kTemplateError);
  EXPECT_EQ(CodeOf([] {
              ParseTemplate(
                  "---\ntemplate_id: x\nkind: meaning-changing\nexplanation_style: none\n---\n"
                  "<SENTENCE> only");
            }),
            ErrorCode::kTemplateError);
}

TEST(FewShot, LoadAndFormat) {
  TempDir dir;
  Spit(dir / "f.jsonl",
       "{\"reference\": \"a\", \"hypothesis\": \"b\", \"rating\": 3}\n"
       "{\"reference\": \"c\", \"hypothesis\": \"d\", \"rating\": 0}\n");
  const auto examples = LoadFewShotExamples(dir / "f.jsonl");
  EXPECT_EQ(FormatFewShotExamples(examples),
            "Reference: a\nHypothesis: b\nRating: 3\n\nReference: c\nHypothesis: d\nRating: 0");
  Spit(dir / "bad.jsonl", "{\"reference\": \"a\", \"hypothesis\": \"b\", \"rating\": 7}\n");
  EXPECT_EQ(CodeOf([&] { LoadFewShotExamples(dir / "bad.jsonl"); }),
            ErrorCode::kMalformedRecord);
  EXPECT_FALSE(LoadFewShotExamples(SourceDir() / "data" / "few_shot_scoring.jsonl").empty());
}

TEST(ParseGenerationOutput, WellFormed) {
  const auto p = ParseGenerationOutput(
      "1. a\n2. b\n\nC) Sample Output\nThe heavens are cloudless.\n\nD) Additional "
      "Explanation\nmore",
      ExplanationStyle::kFiveDifferences);
  EXPECT_TRUE(p.parse_ok);
  EXPECT_EQ(p.generated_sentence, "The heavens are cloudless.");
  EXPECT_EQ(p.explanation, "1. a\n2. b");
}

TEST(ParseGenerationOutput, MissingHeader) {
  const auto p = ParseGenerationOutput("no sections at all", ExplanationStyle::kFiveDifferences);
  EXPECT_FALSE(p.parse_ok);
  EXPECT_EQ(p.raw_completion, "no sections at all");
}

TEST(ParseGenerationOutput, TakesFirstNonEmptyLineOfSectionC) {
  const auto p = ParseGenerationOutput("x\nC) Sample Output\n\n  First line.  \nSecond line.\n",
                                       ExplanationStyle::kThreeIdeas);
  EXPECT_TRUE(p.parse_ok);
  EXPECT_EQ(p.generated_sentence, "First line.");
}

TEST(ParseGenerationOutput, EdgeCases) {
  // Header tolerated with surrounding whitespace; CRLF and LS/PS breaks.
  auto p = ParseGenerationOutput("x\r\n   C) Sample Output  \r\nHola.\r\n",
                                 ExplanationStyle::kFiveDifferences);
  EXPECT_EQ(p.generated_sentence, "Hola.");
  p = ParseGenerationOutput("x\xE2\x80\xA8" "C) Sample Output\xE2\x80\xA9" "Line.", ExplanationStyle::kFiveDifferences);
  EXPECT_EQ(p.generated_sentence, "Line.");
  // Empty section C.
  p = ParseGenerationOutput("x\nC) Sample Output\n\nD) Additional Explanation\n",
                            ExplanationStyle::kFiveDifferences);
  EXPECT_FALSE(p.parse_ok);
  // Trailing header on the same line is cut.
  p = ParseGenerationOutput("C) Sample Output\nSentence. D) Additional Explanation blah",
                            ExplanationStyle::kFiveDifferences);
  EXPECT_EQ(p.generated_sentence, "Sentence.");
  // Headers are exact; a lowercase variant does not count.
  p = ParseGenerationOutput("c) sample output\nx", ExplanationStyle::kFiveDifferences);
  EXPECT_FALSE(p.parse_ok);
  // Without an explanation section the first line is the sentence.
  p = ParseGenerationOutput("\n  Plain answer.\nmore", ExplanationStyle::kNone);
  EXPECT_TRUE(p.parse_ok);
  EXPECT_EQ(p.generated_sentence, "Plain answer.");
}

TEST(ParseGenerationOutput, NeverThrowsAndSentenceIsSingleLine) {
  const std::string pieces[] = {"C) Sample Output", "\n", "\r", "D)", "x", " ", "\xE2\x80\xA8", "\xC3\xA9"};
  uint32_t state = 1;
  for (int i = 0; i < 2000; ++i) {
    std::string raw;
    for (int j = 0; j < 12; ++j) {
      state = state * 1103515245u + 12345u;
      raw += pieces[(state >> 16) % 8];
    }
    const auto p = ParseGenerationOutput(raw, ExplanationStyle::kFiveDifferences);
    if (!p.parse_ok) continue;
    EXPECT_FALSE(p.generated_sentence.empty());
    EXPECT_EQ(p.generated_sentence.find_first_of("\r\n"), std::string::npos);
    EXPECT_EQ(p.generated_sentence.find("\xE2\x80\xA8"), std::string::npos);
  }
}

}  // namespace

}  // namespace simdistill
