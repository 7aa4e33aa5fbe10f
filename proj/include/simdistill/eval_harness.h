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

// Agreement between a metric and human ratings: Pearson, Spearman (average
// ranks for ties) and Kendall tau-b, plus mean and standard error of each
// statistic over repeated runs.
//
// A correlation is undefined when either input is constant; it is returned
// as std::nullopt and never reported as zero.

#ifndef SIMDISTILL_EVAL_HARNESS_H_
#define SIMDISTILL_EVAL_HARNESS_H_

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "simdistill/bleu.h"
#include "simdistill/dataset_store.h"

namespace simdistill {

struct PairedScores {
  std::vector<double> human;
  std::vector<double> metric;
  std::string language;

  size_t n() const { return human.size(); }
  // Throws invalid-argument unless both sequences have the same length >= 2
  // and hold only finite values.
  void Validate() const;
};

std::optional<double> PearsonR(std::span<const double> x, std::span<const double> y);
std::optional<double> SpearmanRho(std::span<const double> x, std::span<const double> y);
std::optional<double> KendallTau(std::span<const double> x, std::span<const double> y);

// 1-based ranks; tied values share the mean of their positions.
std::vector<double> AverageRanks(std::span<const double> x);

// Pair counts behind tau-b, from the O(n log n) sort-and-merge count.
struct KendallCounts {
  int64_t pairs = 0;        // n(n-1)/2
  int64_t x_ties = 0;       // pairs tied in x
  int64_t y_ties = 0;       // pairs tied in y
  int64_t joint_ties = 0;   // pairs tied in both
  int64_t concordant_minus_discordant = 0;
};

KendallCounts CountKendallPairs(std::span<const double> x, std::span<const double> y);

enum class Statistic { kPearson, kSpearman, kKendall };
std::string_view StatisticName(Statistic s);
Statistic ParseStatistic(std::string_view name);

struct EvalRow {
  std::string dataset;
  std::string language;
  std::string statistic;
  std::optional<double> mean;
  double standard_error = 0.0;
  size_t run_count = 0;
  std::string note;
};

struct EvalReport {
  std::vector<EvalRow> rows;

  nlohmann::ordered_json ToJson() const;
  // Fixed-width text table, one row per (dataset, language, statistic).
  std::string ToText() const;
};

// Mean and standard error (sample sd / sqrt(runs)) of each statistic over
// the runs. All runs must share language and n. A statistic that is
// undefined in any run is reported without a mean and with a note.
EvalReport EvaluateRuns(const std::string& dataset,
                        const std::vector<PairedScores>& runs,
                        const std::vector<Statistic>& statistics);

// metric = sentence BLEU of each record, human = the record's score.
// Throws too-few-rows for fewer than two records.
PairedScores BleuBaselineEval(std::span<const DatasetRecord> records,
                              const BleuConfig& config = {});

// metric = metadata["metric_score"], human = score.
PairedScores MetricScoresFromRecords(std::span<const DatasetRecord> records);

}  // namespace simdistill

#endif  // SIMDISTILL_EVAL_HARNESS_H_
