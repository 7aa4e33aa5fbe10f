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

#include "simdistill/eval_harness.h"

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "gtest/gtest.h"
#include "oracles.h"
#include "simdistill/error.h"
#include "test_util.h"

namespace simdistill {

namespace {

using ::simdistill::testing::CodeOf;
using V = std::vector<double>;

TEST(Correlations, Examples) {
  EXPECT_NEAR(*PearsonR(V{1, 2, 3}, V{2, 4, 6}), 1.0, 1e-15);
  EXPECT_NEAR(*PearsonR(V{1, 2, 3}, V{3, 2, 1}), -1.0, 1e-15);
  EXPECT_NEAR(*SpearmanRho(V{1, 2, 3, 4}, V{1, 4, 9, 16}), 1.0, 1e-15);
  EXPECT_NEAR(*KendallTau(V{1, 2, 3, 4}, V{1, 3, 2, 4}), 2.0 / 3.0, 1e-15);
}

TEST(Correlations, ConstantInputIsUndefined) {
  EXPECT_EQ(PearsonR(V{1, 1, 1}, V{1, 2, 3}), std::nullopt);
  EXPECT_EQ(SpearmanRho(V{1, 2, 3}, V{5, 5, 5}), std::nullopt);
  EXPECT_EQ(KendallTau(V{2, 2}, V{1, 2}), std::nullopt);
}

TEST(Correlations, InvalidInputs) {
  EXPECT_EQ(CodeOf([] { PearsonR(V{1}, V{1}); }), ErrorCode::kInvalidArgument);
  EXPECT_EQ(CodeOf([] { PearsonR(V{1, 2}, V{1, 2, 3}); }), ErrorCode::kInvalidArgument);
  EXPECT_EQ(CodeOf([] { KendallTau(V{1, NAN}, V{1, 2}); }), ErrorCode::kInvalidArgument);
}

TEST(AverageRanks, Ties) {
  EXPECT_EQ(AverageRanks(V{10, 20, 20, 5}), (V{2, 3.5, 3.5, 1}));
  EXPECT_EQ(AverageRanks(V{7, 7, 7}), (V{2, 2, 2}));
}

TEST(Correlations, MatchOraclesWithTies) {
  std::mt19937_64 rng(8);
  for (int t = 0; t < 300; ++t) {
    const size_t n = 2 + rng() % 60;
    V x(n), y(n);
    for (size_t i = 0; i < n; ++i) {
      x[i] = static_cast<double>(rng() % 6);
      y[i] = static_cast<double>(rng() % 6) + 0.5 * x[i];
    }
    const auto check = [](std::optional<double> got, std::optional<double> want) {
      ASSERT_EQ(got.has_value(), want.has_value());
      if (got) {
        EXPECT_NEAR(*got, *want, 1e-9);
      }
    };
    check(PearsonR(x, y), oracle::Pearson(x, y));
    check(SpearmanRho(x, y), oracle::Spearman(x, y));
    check(KendallTau(x, y), oracle::KendallTauB(x, y));
    const KendallCounts fast = CountKendallPairs(x, y);
    const oracle::PairCounts slow = oracle::CountPairs(x, y);
    EXPECT_EQ(fast.pairs, slow.pairs);
    EXPECT_EQ(fast.x_ties, slow.x_ties);
    EXPECT_EQ(fast.y_ties, slow.y_ties);
    EXPECT_EQ(fast.joint_ties, slow.joint_ties);
    EXPECT_EQ(fast.concordant_minus_discordant, slow.concordant - slow.discordant);
  }
}

PairedScores Paired(V human, V metric) {
  PairedScores p;
  p.human = std::move(human);
  p.metric = std::move(metric);
  p.language = "en";
  return p;
}

TEST(EvaluateRuns, MeanAndStandardError) {
  // Three runs whose Pearson r is 0.1, 0.2 and 0.3 would need tuned data;
  // instead check the aggregation with perfectly (anti)correlated runs.
  const auto report = EvaluateRuns(
      "d", {Paired({1, 2, 3}, {1, 2, 3}), Paired({1, 2, 3}, {3, 2, 1}), Paired({1, 2, 3}, {1, 2, 4})},
      {Statistic::kSpearman});
  ASSERT_EQ(report.rows.size(), 1u);
  const std::vector<double> values = {1.0, -1.0, 1.0};
  const double mean = 1.0 / 3.0;
  double ss = 0;
  for (double v : values) ss += (v - mean) * (v - mean);
  EXPECT_NEAR(*report.rows[0].mean, mean, 1e-15);
  EXPECT_NEAR(report.rows[0].standard_error, std::sqrt(ss / 2) / std::sqrt(3.0), 1e-15);
  EXPECT_EQ(report.rows[0].run_count, 3u);
}

// Permutation of 0..n-1 with exactly `inversions` inversions, built from a
// Lehmer code filled greedily from the front.
V WithInversions(size_t n, size_t inversions) {
  std::vector<size_t> code(n, 0);
  for (size_t i = 0; i < n && inversions > 0; ++i) {
    code[i] = std::min(inversions, n - 1 - i);
    inversions -= code[i];
  }
  std::vector<double> pool(n);
  for (size_t i = 0; i < n; ++i) pool[i] = static_cast<double>(i);
  V out;
  for (size_t i = 0; i < n; ++i) {
    out.push_back(pool[code[i]]);
    pool.erase(pool.begin() + static_cast<long>(code[i]));
  }
  return out;
}

TEST(EvaluateRuns, StandardErrorOfPointOneTwoThree) {
  // n = 16 gives 120 pairs; tau = (120 - 2D) / 120, so D = 54, 48, 42
  // discordant pairs give tau 0.1, 0.2, 0.3.
  V identity(16);
  for (size_t i = 0; i < 16; ++i) identity[i] = static_cast<double>(i);
  std::vector<PairedScores> runs;
  for (size_t d : {54, 48, 42}) runs.push_back(Paired(identity, WithInversions(16, d)));
  EXPECT_NEAR(*KendallTau(runs[0].human, runs[0].metric), 0.1, 1e-15);
  const auto report = EvaluateRuns("d", runs, {Statistic::kKendall});
  // Sample sd of (0.1, 0.2, 0.3) is 0.1.
  EXPECT_NEAR(*report.rows[0].mean, 0.2, 1e-15);
  EXPECT_NEAR(report.rows[0].standard_error, 0.1 / std::sqrt(3.0), 1e-15);
}

TEST(EvaluateRuns, UndefinedAndSingleRun) {
  const auto report = EvaluateRuns("d", {Paired({1, 1, 1}, {1, 2, 3})},
                                   {Statistic::kPearson, Statistic::kKendall});
  ASSERT_EQ(report.rows.size(), 2u);
  EXPECT_EQ(report.rows[0].mean, std::nullopt);
  EXPECT_NE(report.rows[0].note.find("undefined"), std::string::npos);
  EXPECT_TRUE(report.ToJson()["rows"][0]["mean"].is_null());
  EXPECT_NE(report.ToText().find("n/a"), std::string::npos);

  const auto single = EvaluateRuns("d", {Paired({1, 2, 3}, {1, 2, 3})}, {Statistic::kPearson});
  EXPECT_EQ(single.rows[0].note, "single run");
  EXPECT_EQ(single.rows[0].standard_error, 0.0);
}

DatasetRecord Rated(std::string ref, std::string cand, double score) {
  DatasetRecord r;
  r.reference = std::move(ref);
  r.candidate = std::move(cand);
  r.score = score;
  r.score_scale = ScoreScale::kExternal;
  r.origin = Origin::kHumanEval;
  r.language = "en";
  return r;
}

TEST(BleuBaselineEval, ScoresEachRecord) {
  const std::vector<DatasetRecord> records = {Rated("the cat sat", "the cat sat", 90),
                                              Rated("a b c d e", "a b x d e", 40)};
  const PairedScores p = BleuBaselineEval(records);
  EXPECT_EQ(p.metric[0], 100.0);
  EXPECT_EQ(p.human, (V{90, 40}));
  EXPECT_EQ(CodeOf([&] { BleuBaselineEval(std::span(records).first(1)); }),
            ErrorCode::kTooFewRows);
}

TEST(MetricScoresFromRecords, ReadsMetadata) {
  std::vector<DatasetRecord> records = {Rated("a", "b", 1), Rated("c", "d", 2)};
  records[0].metadata["metric_score"] = "0.25";
  records[1].metadata["metric_score"] = "0.5";
  EXPECT_EQ(MetricScoresFromRecords(records).metric, (V{0.25, 0.5}));
  records[1].metadata.clear();
  EXPECT_EQ(CodeOf([&] { MetricScoresFromRecords(records); }), ErrorCode::kMalformedRecord);
}

}  // namespace

}  // namespace simdistill
