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

#ifndef SIMDISTILL_FILTER_REPORT_H_
#define SIMDISTILL_FILTER_REPORT_H_

#include <cstdint>
#include <map>
#include <string>

#include "json.hpp"

namespace simdistill {

// Rejection tags shared across stages.
namespace reject {
inline constexpr char kNotLetterStart[] = "not-letter-start";
inline constexpr char kNoTerminalPunctuation[] = "no-terminal-punctuation";
inline constexpr char kDuplicate[] = "duplicate";
inline constexpr char kParseFailure[] = "parse-failure";
inline constexpr char kGenerationFailed[] = "generation-failed";
inline constexpr char kScoreMassTooLow[] = "score-mass-too-low";
inline constexpr char kScoringFailed[] = "scoring-failed";
inline constexpr char kRefTooShort[] = "ref-too-short";
inline constexpr char kRefTooLong[] = "ref-too-long";
inline constexpr char kRatioTooSmall[] = "ratio-too-small";
inline constexpr char kRatioTooLarge[] = "ratio-too-large";
inline constexpr char kEditDistanceTooSmall[] = "edit-distance-too-small";
}  // namespace reject

// Per-stage tally. accepted + total rejections = items examined.
struct FilterReport {
  std::map<std::string, uint64_t> counts;
  uint64_t accepted = 0;

  void Accept(uint64_t n = 1) { accepted += n; }
  void Reject(const std::string& reason, uint64_t n = 1) {
    counts[reason] += n;
  }

  uint64_t rejected() const {
    uint64_t total = 0;
    for (const auto& [reason, n] : counts) total += n;
    return total;
  }
  uint64_t examined() const { return accepted + rejected(); }

  // Associative, commutative merge of per-worker tallies.
  FilterReport& Merge(const FilterReport& other) {
    accepted += other.accepted;
    for (const auto& [reason, n] : other.counts) counts[reason] += n;
    return *this;
  }

  bool operator==(const FilterReport&) const = default;

  nlohmann::ordered_json ToJson() const {
    nlohmann::ordered_json j;
    j["accepted"] = accepted;
    j["rejected"] = nlohmann::ordered_json::object();
    for (const auto& [reason, n] : counts) j["rejected"][reason] = n;
    j["examined"] = examined();
    return j;
  }

  static FilterReport FromJson(const nlohmann::ordered_json& j) {
    FilterReport r;
    r.accepted = j.at("accepted").get<uint64_t>();
    for (const auto& [reason, n] : j.at("rejected").items()) {
      r.counts[reason] = n.get<uint64_t>();
    }
    return r;
  }
};

}  // namespace simdistill

#endif  // SIMDISTILL_FILTER_REPORT_H_
