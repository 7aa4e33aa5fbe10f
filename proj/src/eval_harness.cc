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
#include <charconv>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "simdistill/error.h"

namespace simdistill {
namespace {

void CheckInputs(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) {
    throw Error(ErrorCode::kInvalidArgument, "sequences differ in length");
  }
  if (x.size() < 2) {
    throw Error(ErrorCode::kInvalidArgument, "need at least two observations");
  }
  for (size_t i = 0; i < x.size(); ++i) {
    if (!std::isfinite(x[i]) || !std::isfinite(y[i])) {
      throw Error(ErrorCode::kInvalidArgument, "non-finite observation");
    }
  }
}

bool IsConstant(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [&](double a) { return a == v[0]; });
}

double Mean(std::span<const double> v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

int64_t TiedPairs(int64_t run) { return run * (run - 1) / 2; }

// Sorts y[lo, hi) and returns the number of strict inversions in it.
int64_t MergeCountInversions(std::vector<double>& y, std::vector<double>& scratch,
                             size_t lo, size_t hi) {
  if (hi - lo < 2) return 0;
  const size_t mid = lo + (hi - lo) / 2;
  int64_t inversions = MergeCountInversions(y, scratch, lo, mid) +
                       MergeCountInversions(y, scratch, mid, hi);
  size_t i = lo, j = mid, k = lo;
  while (i < mid && j < hi) {
    if (y[j] < y[i]) {
      inversions += static_cast<int64_t>(mid - i);
      scratch[k++] = y[j++];
    } else {
      scratch[k++] = y[i++];
    }
  }
  while (i < mid) scratch[k++] = y[i++];
  while (j < hi) scratch[k++] = y[j++];
  std::copy(scratch.begin() + static_cast<long>(lo), scratch.begin() + static_cast<long>(hi),
            y.begin() + static_cast<long>(lo));
  return inversions;
}

std::string FormatNumber(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

}  // namespace

void PairedScores::Validate() const { CheckInputs(human, metric); }

std::optional<double> PearsonR(std::span<const double> x, std::span<const double> y) {
  CheckInputs(x, y);
  if (IsConstant(x) || IsConstant(y)) return std::nullopt;
  const double mx = Mean(x);
  const double my = Mean(y);
  double sxx = 0.0, syy = 0.0, sxy = 0.0;
  for (size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxx += dx * dx;
    syy += dy * dy;
    sxy += dx * dy;
  }
  if (sxx == 0.0 || syy == 0.0) return std::nullopt;
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

std::vector<double> AverageRanks(std::span<const double> x) {
  std::vector<size_t> order(x.size());
  std::iota(order.begin(), order.end(), size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&x](size_t a, size_t b) { return x[a] < x[b]; });
  std::vector<double> ranks(x.size());
  size_t i = 0;
  while (i < order.size()) {
    size_t j = i + 1;
    while (j < order.size() && x[order[j]] == x[order[i]]) ++j;
    // Positions i+1 .. j share their mean rank.
    const double rank = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
    for (size_t k = i; k < j; ++k) ranks[order[k]] = rank;
    i = j;
  }
  return ranks;
}

std::optional<double> SpearmanRho(std::span<const double> x, std::span<const double> y) {
  CheckInputs(x, y);
  const auto rx = AverageRanks(x);
  const auto ry = AverageRanks(y);
  return PearsonR(rx, ry);
}

KendallCounts CountKendallPairs(std::span<const double> x, std::span<const double> y) {
  CheckInputs(x, y);
  const size_t n = x.size();
  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), size_t{0});
  std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    return x[a] < x[b] || (x[a] == x[b] && y[a] < y[b]);
  });

  KendallCounts c;
  c.pairs = static_cast<int64_t>(n) * static_cast<int64_t>(n - 1) / 2;
  int64_t x_run = 1, joint_run = 1;
  for (size_t i = 1; i <= n; ++i) {
    const bool same_x = i < n && x[order[i]] == x[order[i - 1]];
    const bool same_xy = same_x && y[order[i]] == y[order[i - 1]];
    if (same_x) {
      ++x_run;
    } else {
      c.x_ties += TiedPairs(x_run);
      x_run = 1;
    }
    if (same_xy) {
      ++joint_run;
    } else {
      c.joint_ties += TiedPairs(joint_run);
      joint_run = 1;
    }
  }

  std::vector<double> ys(n);
  for (size_t i = 0; i < n; ++i) ys[i] = y[order[i]];
  std::vector<double> scratch(n);
  const int64_t discordant = MergeCountInversions(ys, scratch, 0, n);

  // ys is now sorted.
  int64_t y_run = 1;
  for (size_t i = 1; i <= n; ++i) {
    if (i < n && ys[i] == ys[i - 1]) {
      ++y_run;
    } else {
      c.y_ties += TiedPairs(y_run);
      y_run = 1;
    }
  }
  c.concordant_minus_discordant =
      c.pairs - c.x_ties - c.y_ties + c.joint_ties - 2 * discordant;
  return c;
}

std::optional<double> KendallTau(std::span<const double> x, std::span<const double> y) {
  const KendallCounts c = CountKendallPairs(x, y);
  const int64_t nx = c.pairs - c.x_ties;
  const int64_t ny = c.pairs - c.y_ties;
  if (nx == 0 || ny == 0) return std::nullopt;
  const double denom = std::sqrt(static_cast<double>(nx) * static_cast<double>(ny));
  return std::clamp(static_cast<double>(c.concordant_minus_discordant) / denom, -1.0, 1.0);
}

std::string_view StatisticName(Statistic s) {
  switch (s) {
    case Statistic::kPearson: return "pearson";
    case Statistic::kSpearman: return "spearman";
    case Statistic::kKendall: return "kendall";
  }
  return "";
}

Statistic ParseStatistic(std::string_view name) {
  if (name == "pearson") return Statistic::kPearson;
  if (name == "spearman") return Statistic::kSpearman;
  if (name == "kendall") return Statistic::kKendall;
  throw Error(ErrorCode::kConfigError, "unknown statistic '" + std::string(name) + "'");
}

nlohmann::ordered_json EvalReport::ToJson() const {
  nlohmann::ordered_json j;
  j["kendall_variant"] = "tau-b";
  j["spearman_ties"] = "average-ranks";
  j["rows"] = nlohmann::ordered_json::array();
  for (const auto& row : rows) {
    nlohmann::ordered_json r;
    r["dataset"] = row.dataset;
    r["language"] = row.language;
    r["statistic"] = row.statistic;
    r["mean"] = row.mean ? nlohmann::ordered_json(*row.mean) : nlohmann::ordered_json();
    r["standard_error"] = row.standard_error;
    r["run_count"] = row.run_count;
    r["note"] = row.note;
    j["rows"].push_back(std::move(r));
  }
  return j;
}

std::string EvalReport::ToText() const {
  std::string out = "# kendall = tau-b; spearman ties = average ranks\n";
  char line[512];
  std::snprintf(line, sizeof(line), "%-16s %-10s %-10s %10s %10s %5s  %s\n", "dataset",
                "language", "statistic", "mean", "stderr", "runs", "note");
  out += line;
  for (const auto& row : rows) {
    const std::string mean = row.mean ? FormatNumber(*row.mean) : "n/a";
    std::snprintf(line, sizeof(line), "%-16s %-10s %-10s %10s %10s %5zu  %s\n",
                  row.dataset.c_str(), row.language.c_str(), row.statistic.c_str(),
                  mean.c_str(), FormatNumber(row.standard_error).c_str(), row.run_count,
                  row.note.c_str());
    out += line;
  }
  return out;
}

EvalReport EvaluateRuns(const std::string& dataset, const std::vector<PairedScores>& runs,
                        const std::vector<Statistic>& statistics) {
  if (runs.empty()) throw Error(ErrorCode::kInvalidArgument, "no runs to evaluate");
  for (const auto& run : runs) {
    run.Validate();
    if (run.language != runs[0].language || run.n() != runs[0].n()) {
      throw Error(ErrorCode::kInvalidArgument, "runs must share language and size");
    }
  }
  EvalReport report;
  for (const Statistic stat : statistics) {
    EvalRow row;
    row.dataset = dataset;
    row.language = runs[0].language;
    row.statistic = std::string(StatisticName(stat));
    row.run_count = runs.size();
    std::vector<double> values;
    for (size_t r = 0; r < runs.size(); ++r) {
      std::optional<double> v;
      switch (stat) {
        case Statistic::kPearson: v = PearsonR(runs[r].human, runs[r].metric); break;
        case Statistic::kSpearman: v = SpearmanRho(runs[r].human, runs[r].metric); break;
        case Statistic::kKendall: v = KendallTau(runs[r].human, runs[r].metric); break;
      }
      if (!v) {
        row.note = "undefined correlation (constant input) in run " + std::to_string(r + 1);
        break;
      }
      values.push_back(*v);
    }
    if (row.note.empty()) {
      const double mean = Mean(values);
      row.mean = mean;
      if (values.size() == 1) {
        row.note = "single run";
      } else {
        double ss = 0.0;
        for (double v : values) ss += (v - mean) * (v - mean);
        const double sd = std::sqrt(ss / static_cast<double>(values.size() - 1));
        row.standard_error = sd / std::sqrt(static_cast<double>(values.size()));
      }
    }
    report.rows.push_back(std::move(row));
  }
  return report;
}

PairedScores BleuBaselineEval(std::span<const DatasetRecord> records,
                              const BleuConfig& config) {
  if (records.size() < 2) {
    throw Error(ErrorCode::kTooFewRows, "need at least two rated pairs");
  }
  PairedScores scores;
  scores.language = records[0].language;
  for (const auto& r : records) {
    scores.human.push_back(r.score);
    scores.metric.push_back(SentenceBleu(r.reference, r.candidate, config));
  }
  return scores;
}

PairedScores MetricScoresFromRecords(std::span<const DatasetRecord> records) {
  if (records.size() < 2) {
    throw Error(ErrorCode::kTooFewRows, "need at least two rated pairs");
  }
  PairedScores scores;
  scores.language = records[0].language;
  for (size_t i = 0; i < records.size(); ++i) {
    const auto it = records[i].metadata.find("metric_score");
    double value = 0.0;
    bool ok = it != records[i].metadata.end();
    if (ok) {
      const std::string& s = it->second;
      const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
      ok = ec == std::errc() && end == s.data() + s.size();
    }
    if (!ok) {
      throw Error(ErrorCode::kMalformedRecord,
                  "record " + std::to_string(i + 1) + " lacks a numeric metric_score",
                  static_cast<long>(i + 1));
    }
    scores.human.push_back(records[i].score);
    scores.metric.push_back(value);
  }
  return scores;
}

}  // namespace simdistill
