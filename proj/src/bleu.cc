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

#include "simdistill/bleu.h"

#include <algorithm>
#include <cmath>
#include <map>

#include "simdistill/error.h"
#include "simdistill/unicode.h"

namespace simdistill {

std::vector<std::string> TokenizeForBleu(std::string_view text,
                                         BleuTokenizer tokenizer) {
  const std::u32string s = unicode::Decode(text);
  std::vector<std::string> tokens;
  std::u32string current;
  auto flush = [&] {
    if (!current.empty()) tokens.push_back(unicode::Encode(current));
    current.clear();
  };
  auto digit_or_edge = [&s](size_t i, int offset) {
    if (offset < 0 && i == 0) return true;
    if (offset > 0 && i + 1 >= s.size()) return true;
    return unicode::IsDigit(s[offset < 0 ? i - 1 : i + 1]);
  };
  for (size_t i = 0; i < s.size(); ++i) {
    const char32_t c = s[i];
    if (unicode::IsWhitespace(c)) {
      flush();
      continue;
    }
    if (tokenizer == BleuTokenizer::kIntl) {
      const bool split_off =
          unicode::IsSymbol(c) ||
          (unicode::IsPunctuation(c) && !(digit_or_edge(i, -1) && digit_or_edge(i, +1)));
      if (split_off) {
        flush();
        current.push_back(c);
        flush();
        continue;
      }
    }
    current.push_back(c);
  }
  flush();
  return tokens;
}

BleuStats ComputeBleuStats(const std::vector<std::string>& hyp,
                           const std::vector<std::string>& ref, int max_order) {
  BleuStats stats;
  stats.hyp_len = static_cast<int>(hyp.size());
  stats.ref_len = static_cast<int>(ref.size());
  stats.matches.assign(static_cast<size_t>(max_order), 0);
  stats.totals.assign(static_cast<size_t>(max_order), 0);
  using Ngram = std::vector<std::string>;
  auto count = [](const std::vector<std::string>& tokens, size_t n) {
    std::map<Ngram, int> counts;
    for (size_t i = 0; i + n <= tokens.size(); ++i) {
      ++counts[Ngram(tokens.begin() + static_cast<long>(i),
                     tokens.begin() + static_cast<long>(i + n))];
    }
    return counts;
  };
  for (int order = 1; order <= max_order; ++order) {
    const auto hyp_counts = count(hyp, static_cast<size_t>(order));
    const auto ref_counts = count(ref, static_cast<size_t>(order));
    int matches = 0;
    int total = 0;
    for (const auto& [ngram, n] : hyp_counts) {
      total += n;
      const auto it = ref_counts.find(ngram);
      if (it != ref_counts.end()) matches += std::min(n, it->second);
    }
    stats.matches[static_cast<size_t>(order - 1)] = matches;
    stats.totals[static_cast<size_t>(order - 1)] = total;
  }
  return stats;
}

double SentenceBleu(std::string_view reference, std::string_view hypothesis,
                    const BleuConfig& config) {
  if (config.max_ngram_order < 1) {
    throw Error(ErrorCode::kInvalidArgument, "max_ngram_order must be >= 1");
  }
  const auto ref = TokenizeForBleu(reference, config.tokenizer);
  if (ref.empty()) throw Error(ErrorCode::kInvalidArgument, "empty reference");
  const auto hyp = TokenizeForBleu(hypothesis, config.tokenizer);
  if (hyp.empty()) return 0.0;

  const BleuStats stats = ComputeBleuStats(hyp, ref, config.max_ngram_order);
  double log_sum = 0.0;
  int effective_order = 0;
  double smooth = 1.0;
  for (int i = 0; i < config.max_ngram_order; ++i) {
    const int total = stats.totals[static_cast<size_t>(i)];
    const int matches = stats.matches[static_cast<size_t>(i)];
    if (total == 0) break;
    ++effective_order;
    double precision;
    if (matches > 0) {
      precision = static_cast<double>(matches) / total;
    } else if (config.smoothing == BleuSmoothing::kExp) {
      smooth *= 2.0;
      precision = 1.0 / (smooth * total);
    } else if (config.smoothing == BleuSmoothing::kFloor) {
      precision = config.floor_value / total;
    } else {
      return 0.0;
    }
    log_sum += std::log(precision);
  }
  const double geometric_mean = std::exp(log_sum / effective_order);
  const double brevity =
      stats.hyp_len < stats.ref_len
          ? std::exp(1.0 - static_cast<double>(stats.ref_len) / stats.hyp_len)
          : 1.0;
  return std::clamp(100.0 * brevity * geometric_mean, 0.0, 100.0);
}

}  // namespace simdistill
