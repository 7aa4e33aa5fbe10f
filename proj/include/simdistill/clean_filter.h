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

#ifndef SIMDISTILL_CLEAN_FILTER_H_
#define SIMDISTILL_CLEAN_FILTER_H_

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>

#include "json.hpp"
#include "simdistill/pair_scorer.h"

namespace simdistill {

// Lengths are in Unicode scalars. The reference length bounds and the ratio
// and distance bounds are all inclusive: a 20-scalar reference passes, a
// 19-scalar one does not.
struct CleaningConfig {
  size_t min_ref_chars = 20;
  size_t max_ref_chars = 300;
  double min_len_ratio = 0.8;
  double max_len_ratio = 2.0;
  size_t min_edit_distance = 5;

  // Throws config-error on a violated invariant.
  void Validate() const;
  static CleaningConfig FromJson(const nlohmann::json& j);
};

struct CleaningVerdict {
  bool accepted = false;
  std::optional<std::string> reason;
};

// Levenshtein distance over Unicode scalars.
size_t Levenshtein(std::u32string_view a, std::u32string_view b);
size_t Levenshtein(std::string_view a, std::string_view b);

// Checks, in order: reference length, hypothesis/reference length ratio,
// edit distance. The first failure names the rejection.
CleaningVerdict ApplyCleaning(std::string_view reference,
                              std::string_view hypothesis,
                              const CleaningConfig& config = {});

inline CleaningVerdict ApplyCleaning(const ScoredPair& pair,
                                     const CleaningConfig& config = {}) {
  return ApplyCleaning(pair.reference, pair.hypothesis, config);
}

}  // namespace simdistill

#endif  // SIMDISTILL_CLEAN_FILTER_H_
