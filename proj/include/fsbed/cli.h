// include/fsbed/cli.h

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

#ifndef FSBED_CLI_H_
#define FSBED_CLI_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "fsbed/corpus.h"
#include "fsbed/dsp.h"
#include "fsbed/eval.h"
#include "fsbed/proto.h"
#include "fsbed/synth.h"
#include "fsbed/template_detector.h"

namespace fsbed::cli {

enum ExitCode : int { kOk = 0, kInputError = 2, kDataError = 3 };

/// Writes via a temporary sibling and a rename, so a failed run never
/// leaves a half-written file behind.
void write_file_atomic(const std::filesystem::path &path, const std::string &content);

// score ----------------------------------------------------------------------

struct ScoreOptions {
  std::filesystem::path predictions;
  std::filesystem::path ground_truth;
  eval::ScoringOptions scoring;
  std::size_t bootstrap_iterations = 10000;
  std::uint64_t seed = 0;
  std::optional<std::filesystem::path> out;  // stdout when empty

  void validate() const;
};

struct ScoreRun {
  eval::ScoreReport report;
  std::vector<std::string> warnings;
  std::string json;
};

/// Library form of `score`; throws on input errors.
ScoreRun score_corpus(const ScoreOptions &options);

int cmd_score(const ScoreOptions &options, std::ostream &out, std::ostream &err);

// detect ---------------------------------------------------------------------

enum class DetectMode { kTemplate, kProto };

struct DetectOptions {
  DetectMode mode = DetectMode::kTemplate;
  std::filesystem::path corpus_dir;
  std::optional<std::filesystem::path> model;
  std::optional<std::filesystem::path> out;  // stdout when empty
  dsp::FeatureConfig features;               // template mode; proto uses the checkpoint's
  template_match::TemplateDetectorConfig template_config;
  proto::ProtoInferConfig proto_config;
  std::size_t workers = 1;

  void validate() const;
};

int cmd_detect(const DetectOptions &options, std::ostream &out, std::ostream &err);

// train-proto ----------------------------------------------------------------

struct TrainProtoOptions {
  std::filesystem::path corpus_dir;
  std::filesystem::path out_checkpoint;
  std::optional<std::filesystem::path> loss_log;  // <checkpoint>.loss.csv by default
  dsp::FeatureConfig features;
  proto::TrainOptions training;
  std::size_t hidden_dim = 64;
  std::size_t embed_dim = 32;
  std::size_t workers = 1;

  void validate() const;
};

int cmd_train_proto(const TrainProtoOptions &options, std::ostream &out, std::ostream &err);

// synth ----------------------------------------------------------------------

int cmd_synth(const synth::SynthSpec &spec, const std::filesystem::path &out_dir,
              std::ostream &out, std::ostream &err);

// report ---------------------------------------------------------------------

struct ReportOptions {
  std::filesystem::path report_json;
  std::filesystem::path out_svg;
  std::optional<std::filesystem::path> out_csv;  // <svg stem>.csv by default
};

struct ChartBar {
  std::string name;
  double fscore = 0.0;  // in [0, 1], as read from the report
};

/// Bars for every dataset (sorted by name) followed by "overall".
std::vector<ChartBar> chart_bars(const std::string &report_json);
std::string render_svg(const std::vector<ChartBar> &bars);
std::string chart_csv(const std::vector<ChartBar> &bars);

int cmd_report(const ReportOptions &options, std::ostream &out, std::ostream &err);

}  // namespace fsbed::cli

#endif  // FSBED_CLI_H_
