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

// Continuous similarity score from the model's next-token mass over the
// rating labels 0..4. The masses are renormalised over the five labels and
// the score is their expectation, so it always lies in [0, 4].

#ifndef SIMDISTILL_PAIR_SCORER_H_
#define SIMDISTILL_PAIR_SCORER_H_

#include <array>
#include <string>
#include <vector>

#include "json.hpp"
#include "simdistill/llm_gateway.h"
#include "simdistill/prompt_engine.h"

namespace simdistill {

struct ScoredPair {
  std::string reference;
  std::string hypothesis;
  std::string language;
  double score = 0.0;
  ScoreDistribution distribution;
  std::string template_id = "external";
  EstimationMode estimation_mode = EstimationMode::kLogprob;
  double raw_mass_total = 0.0;
};

struct ExpectedScoreResult {
  double score = 0.0;
  ScoreDistribution distribution;
  double raw_mass_total = 0.0;
};

inline constexpr double kDefaultMassFloor = 1e-6;

// Throws invalid-argument for a negative or non-finite mass and
// unscorable-pair when the total is <= 0 or below `mass_floor`.
ExpectedScoreResult ExpectedScore(const std::array<double, kNumScores>& raw,
                                  double mass_floor = kDefaultMassFloor);

// Token surfaces counted towards each score; masses of the surfaces of one
// score are summed.
struct CandidateSurfaces {
  std::array<std::vector<std::string>, kNumScores> by_score = {
      {{"0"}, {"1"}, {"2"}, {"3"}, {"4"}}};

  std::vector<std::string> All() const;
  // {"0": ["0", " 0"], ...}; missing scores keep the default.
  static CandidateSurfaces FromJson(const nlohmann::json& j);
};

struct ScorerOptions {
  CandidateSurfaces surfaces;
  double mass_floor = kDefaultMassFloor;
  // Rendered few-shot block for <ADDITIONAL_EXAMPLES>.
  std::string additional_examples;
};

ScoredPair ScorePair(const std::string& reference, const std::string& hypothesis,
                     const std::string& language, const PromptTemplate& tmpl,
                     Gateway& gateway, const ScorerOptions& options = {},
                     const std::string& template_id = "external");

}  // namespace simdistill

#endif  // SIMDISTILL_PAIR_SCORER_H_
