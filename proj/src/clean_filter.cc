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

#include "simdistill/clean_filter.h"

#include <algorithm>
#include <numeric>
#include <vector>

#include "simdistill/error.h"
#include "simdistill/filter_report.h"
#include "simdistill/unicode.h"

namespace simdistill {

void CleaningConfig::Validate() const {
  if (!(min_ref_chars > 0 && min_ref_chars < max_ref_chars)) {
    throw Error(ErrorCode::kConfigError, "need 0 < min_ref_chars < max_ref_chars");
  }
  if (!(min_len_ratio > 0 && min_len_ratio < max_len_ratio)) {
    throw Error(ErrorCode::kConfigError, "need 0 < min_len_ratio < max_len_ratio");
  }
}

CleaningConfig CleaningConfig::FromJson(const nlohmann::json& j) {
  CleaningConfig c;
  try {
    if (j.contains("min_ref_chars")) c.min_ref_chars = j.at("min_ref_chars").get<size_t>();
    if (j.contains("max_ref_chars")) c.max_ref_chars = j.at("max_ref_chars").get<size_t>();
    if (j.contains("min_len_ratio")) c.min_len_ratio = j.at("min_len_ratio").get<double>();
    if (j.contains("max_len_ratio")) c.max_len_ratio = j.at("max_len_ratio").get<double>();
    if (j.contains("min_edit_distance")) {
      c.min_edit_distance = j.at("min_edit_distance").get<size_t>();
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kConfigError, std::string("cleaning config: ") + e.what());
  }
  c.Validate();
  return c;
}

size_t Levenshtein(std::u32string_view a, std::u32string_view b) {
  if (a.size() < b.size()) std::swap(a, b);
  // One row over the shorter string.
  std::vector<size_t> row(b.size() + 1);
  std::iota(row.begin(), row.end(), size_t{0});
  for (size_t i = 1; i <= a.size(); ++i) {
    size_t diagonal = row[0];
    row[0] = i;
    for (size_t j = 1; j <= b.size(); ++j) {
      const size_t above = row[j];
      row[j] = std::min({above + 1, row[j - 1] + 1,
                         diagonal + (a[i - 1] == b[j - 1] ? 0 : 1)});
      diagonal = above;
    }
  }
  return row[b.size()];
}

size_t Levenshtein(std::string_view a, std::string_view b) {
  return Levenshtein(unicode::Decode(a), unicode::Decode(b));
}

CleaningVerdict ApplyCleaning(std::string_view reference,
                              std::string_view hypothesis,
                              const CleaningConfig& config) {
  const std::u32string ref = unicode::Decode(reference);
  const std::u32string hyp = unicode::Decode(hypothesis);
  if (ref.size() < config.min_ref_chars) return {false, reject::kRefTooShort};
  if (ref.size() > config.max_ref_chars) return {false, reject::kRefTooLong};
  const double ratio =
      static_cast<double>(hyp.size()) / static_cast<double>(ref.size());
  if (ratio < config.min_len_ratio) return {false, reject::kRatioTooSmall};
  if (ratio > config.max_len_ratio) return {false, reject::kRatioTooLarge};
  if (Levenshtein(ref, hyp) < config.min_edit_distance) {
    return {false, reject::kEditDistanceTooSmall};
  }
  return {true, std::nullopt};
}

}  // namespace simdistill
