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

#include "simdistill/pair_scorer.h"

#include <cmath>

#include "simdistill/error.h"

namespace simdistill {

ExpectedScoreResult ExpectedScore(const std::array<double, kNumScores>& raw,
                                  double mass_floor) {
  // Extended precision keeps products k * m and their sums exact for the
  // common cases, so a point mass yields k and a uniform mass yields 2.
  long double total = 0.0L;
  long double weighted = 0.0L;
  for (int k = 0; k < kNumScores; ++k) {
    const double m = raw[static_cast<size_t>(k)];
    if (!std::isfinite(m) || m < 0.0) {
      throw Error(ErrorCode::kInvalidArgument,
                  "mass for score " + std::to_string(k) + " is negative or not finite");
    }
    total += m;
    weighted += static_cast<long double>(k) * m;
  }
  if (!(total > 0.0L) || total < mass_floor) {
    throw Error(ErrorCode::kUnscorablePair, "total score mass below floor");
  }
  ExpectedScoreResult result;
  result.raw_mass_total = static_cast<double>(total);
  result.distribution.normalized = true;
  for (size_t k = 0; k < kNumScores; ++k) {
    result.distribution.probabilities[k] = static_cast<double>(raw[k] / total);
  }
  result.score = static_cast<double>(weighted / total);
  return result;
}

std::vector<std::string> CandidateSurfaces::All() const {
  std::vector<std::string> all;
  for (const auto& surfaces : by_score) {
    all.insert(all.end(), surfaces.begin(), surfaces.end());
  }
  return all;
}

CandidateSurfaces CandidateSurfaces::FromJson(const nlohmann::json& j) {
  CandidateSurfaces s;
  for (const auto& [key, value] : j.items()) {
    int score = -1;
    if (key.size() == 1 && key[0] >= '0' && key[0] <= '4') score = key[0] - '0';
    if (score < 0) {
      throw Error(ErrorCode::kConfigError, "surface key '" + key + "' is not 0..4");
    }
    auto surfaces = value.get<std::vector<std::string>>();
    if (surfaces.empty()) {
      throw Error(ErrorCode::kConfigError, "score " + key + " has no surfaces");
    }
    s.by_score[static_cast<size_t>(score)] = std::move(surfaces);
  }
  return s;
}

ScoredPair ScorePair(const std::string& reference, const std::string& hypothesis,
                     const std::string& language, const PromptTemplate& tmpl,
                     Gateway& gateway, const ScorerOptions& options,
                     const std::string& template_id) {
  const std::string prompt =
      RenderScoringPrompt(tmpl, reference, hypothesis, options.additional_examples);
  const TokenMasses masses =
      gateway.NextTokenDistribution(prompt, options.surfaces.All());
  std::array<double, kNumScores> raw{};
  for (size_t k = 0; k < kNumScores; ++k) {
    for (const auto& surface : options.surfaces.by_score[k]) {
      const auto it = masses.masses.find(surface);
      if (it != masses.masses.end()) raw[k] += it->second;
    }
  }
  const ExpectedScoreResult scored = ExpectedScore(raw, options.mass_floor);
  ScoredPair pair;
  pair.reference = reference;
  pair.hypothesis = hypothesis;
  pair.language = language;
  pair.score = scored.score;
  pair.distribution = scored.distribution;
  pair.template_id = template_id;
  pair.estimation_mode = masses.mode;
  pair.raw_mass_total = scored.raw_mass_total;
  return pair;
}

}  // namespace simdistill
