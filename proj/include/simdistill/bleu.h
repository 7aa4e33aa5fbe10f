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

// Sentence-level BLEU following the sacrebleu sentence defaults: effective
// n-gram order (orders with no hypothesis n-grams are dropped), "exp"
// smoothing, brevity penalty exp(min(0, 1 - r/h)), reported on 0-100.
//
// Smoothing for an order with zero matches:
//   exp    the k-th such order gets precision 1 / (2^k * total_n)
//   floor  precision floor_value / total_n
//   none   precision 0, which makes the score 0
//
// Tokenizers:
//   whitespace  split on White_Space
//   intl        every symbol (S*) is its own token; a punctuation scalar
//               (P*) is its own token unless both neighbours are digits or
//               the string boundary (so "1,000" and "3.5" stay whole); then
//               split on White_Space

#ifndef SIMDISTILL_BLEU_H_
#define SIMDISTILL_BLEU_H_

#include <string>
#include <string_view>
#include <vector>

namespace simdistill {

enum class BleuSmoothing { kExp, kFloor, kNone };
enum class BleuTokenizer { kWhitespace, kIntl };

struct BleuConfig {
  int max_ngram_order = 4;
  BleuSmoothing smoothing = BleuSmoothing::kExp;
  BleuTokenizer tokenizer = BleuTokenizer::kIntl;
  double floor_value = 0.1;
};

std::vector<std::string> TokenizeForBleu(std::string_view text,
                                         BleuTokenizer tokenizer);

struct BleuStats {
  std::vector<int> matches;  // clipped, per order
  std::vector<int> totals;   // hypothesis n-grams, per order
  int hyp_len = 0;
  int ref_len = 0;
};

BleuStats ComputeBleuStats(const std::vector<std::string>& hyp,
                           const std::vector<std::string>& ref, int max_order);

// Score in [0, 100]. Empty hypothesis scores 0; empty reference throws
// invalid-argument.
double SentenceBleu(std::string_view reference, std::string_view hypothesis,
                    const BleuConfig& config = {});

}  // namespace simdistill

#endif  // SIMDISTILL_BLEU_H_
