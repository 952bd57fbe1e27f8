// include/fsbed/eval.h

// Copyright 2026 The fsbed Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef FSBED_EVAL_H_
#define FSBED_EVAL_H_

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "fsbed/corpus.h"

namespace fsbed::eval {

using corpus::Event;

/// Temporal intersection over union, in [0, 1].
double iou(const Event &a, const Event &b);

struct MatchedPair {
  std::size_t gt = 0;
  std::size_t pred = 0;
  double iou = 0.0;

  friend bool operator==(const MatchedPair &, const MatchedPair &) = default;
};

struct MatchResult {
  std::vector<MatchedPair> pairs;  // sorted by gt index
  std::vector<std::size_t> unmatched_gt;
  std::vector<std::size_t> unmatched_pred;

  double total_iou() const;
};

/// Event matching on the bipartite graph whose edges are the (gt, pred)
/// pairs with iou >= min_iou.
///
/// The result has maximum cardinality; among those it maximizes total IoU;
/// remaining ties go to the lexicographically smallest (gt, pred) pair list.
/// Each connected component of the graph is solved separately with
/// shortest augmenting paths.
MatchResult match_events(std::span<const Event> gt, std::span<const Event> pred,
                         double min_iou);

struct ScoreCounts {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;

  ScoreCounts &operator+=(const ScoreCounts &o) {
    tp += o.tp;
    fp += o.fp;
    fn += o.fn;
    return *this;
  }
  friend bool operator==(const ScoreCounts &, const ScoreCounts &) = default;
};

/// Precision, recall and F-score; every 0/0 is defined as 0.
struct Prf {
  double precision = 0.0;
  double recall = 0.0;
  double fscore = 0.0;
};

Prf prf(const ScoreCounts &counts);

struct ScoringOptions {
  double min_iou = 0.3;
  bool ignore_unk = true;  // predictions hitting an UNK event are dropped

  void validate() const;
};

/// Scores one file's predictions against its annotations:
///   1. POS ground truth and predictions with onset < query_start are dropped.
///   2. With ignore_unk, predictions whose best IoU against an UNK event is
///      >= min_iou are dropped.
///   3. The rest are matched; TP = matches, FP = unmatched predictions,
///      FN = unmatched ground truth.
/// Throws std::invalid_argument when `pred_audio_id` names another file.
ScoreCounts score_file(const corpus::FileAnnotations &ann, const std::string &pred_audio_id,
                       std::span<const Event> pred, const corpus::FewShotTask &task,
                       const ScoringOptions &options);

struct ConfidenceInterval {
  double low = 0.0;
  double high = 0.0;
};

struct ScoreSummary {
  ScoreCounts counts;
  Prf prf;
};

struct ScoreReport {
  std::map<std::string, ScoreCounts> files;
  std::map<std::string, ScoreSummary> datasets;
  ScoreSummary overall;              // micro-average over all files
  double macro_fscore = 0.0;         // mean of per-dataset F-scores
  std::optional<ConfidenceInterval> ci;
};

/// Sums counts per dataset and overall. `dataset_of` maps every file in
/// `files` to its dataset; a file without an entry throws
/// std::invalid_argument.
ScoreReport aggregate(const std::map<std::string, ScoreCounts> &files,
                      const std::map<std::string, std::string> &dataset_of);

/// File-level percentile bootstrap of the micro-averaged F-score: 2.5th and
/// 97.5th percentiles (linear interpolation) over `iterations` resamples.
/// Throws std::invalid_argument with fewer than two files.
ConfidenceInterval bootstrap_ci(std::span<const ScoreCounts> files, std::size_t iterations,
                                std::uint64_t seed);

/// Linear-interpolation percentile of an ascending sample, q in [0, 1].
double percentile_sorted(std::span<const double> sorted, double q);

/// Report JSON with every real printed to six decimal places.
struct ReportConfig {
  double min_iou = 0.3;
  bool ignore_unk = true;
  std::size_t bootstrap_iterations = 0;
  std::uint64_t seed = 0;
};

std::string report_to_json(const ScoreReport &report, const ReportConfig &config,
                           const std::vector<std::string> &warnings = {});

}  // namespace fsbed::eval

#endif  // FSBED_EVAL_H_
