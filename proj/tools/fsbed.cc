// tools/fsbed.cc

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

// Command-line front end: score, detect, train-proto, synth, report.
// Every subcommand accepts --config <file> with flat `key = value` lines
// named after its long flags; flags given on the command line win.

#include <fstream>
#include <initializer_list>
#include <iostream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "fsbed/cli.h"

namespace {

using namespace fsbed;

std::string trim(const std::string &s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

void add_config_option(CLI::App *app, std::string &path) {
  app->add_option("--config", path, "Flat `key = value` file; command-line flags win");
}

// CLI11 reads config files only for the top-level app, so each subcommand
// merges its own here: every key names a long flag (`min-iou` or `min_iou`),
// and only options absent from the command line take the file's value.
// Options in `required` must then be set by one of the two.
void apply_config(CLI::App *app, const std::string &path, std::initializer_list<const char *> required) {
  if (!path.empty()) {
    std::ifstream in(path);
    if (!in) throw CLI::FileError::Missing(path);
    std::set<const CLI::Option *> from_cli;
    for (const CLI::Option *opt : app->get_options())
      if (opt->count() > 0) from_cli.insert(opt);

    std::map<CLI::Option *, std::vector<std::string>> values;
    std::vector<CLI::Option *> order;
    std::string line;
    for (std::size_t n = 1; std::getline(in, line); ++n) {
      line = trim(line);
      if (line.empty() || line[0] == '#' || line[0] == ';') continue;
      const auto eq = line.find('=');
      if (eq == std::string::npos)
        throw CLI::ConfigError(path + ": line " + std::to_string(n) + ": expected key = value");
      std::string key = trim(line.substr(0, eq)), value = trim(line.substr(eq + 1));
      if (key.rfind("--", 0) == 0) key = key.substr(2);
      for (char &c : key)
        if (c == '_') c = '-';
      if (value.size() >= 2 && (value.front() == '"' || value.front() == '\'') && value.back() == value.front())
        value = value.substr(1, value.size() - 2);
      CLI::Option *opt = key == "config" ? nullptr : app->get_option_no_throw("--" + key);
      if (opt == nullptr)
        throw CLI::ConfigError(path + ": line " + std::to_string(n) + ": unknown key '" + key + "'");
      if (from_cli.count(opt) > 0) continue;
      if (values.count(opt) == 0) order.push_back(opt);
      auto &v = values[opt];
      if (opt->get_items_expected_max() <= 1) v.clear();  // scalar: last line wins
      v.push_back(value);
    }
    for (CLI::Option *opt : order) {
      for (const auto &v : values[opt]) opt->add_result(v);
      opt->run_callback();
    }
  }
  for (const char *name : required)
    if (app->get_option(name)->count() == 0) throw CLI::RequiredError(name);
}

void add_feature_options(CLI::App *app, dsp::FeatureConfig &f, std::string &kind) {
  app->add_option("--sample-rate", f.sample_rate, "Analysis sample rate (Hz)")->capture_default_str();
  app->add_option("--n-fft", f.stft.n_fft, "FFT size (power of two)")->capture_default_str();
  app->add_option("--hop", f.stft.hop, "STFT hop (samples)")->capture_default_str();
  app->add_option("--mel-bands", f.mel.bands)->capture_default_str();
  app->add_option("--fmin", f.mel.fmin)->capture_default_str();
  app->add_option("--fmax", f.mel.fmax)->capture_default_str();
  app->add_option("--pcen-smoothing", f.pcen.smoothing)->capture_default_str();
  app->add_option("--pcen-gain", f.pcen.gain)->capture_default_str();
  app->add_option("--pcen-bias", f.pcen.bias)->capture_default_str();
  app->add_option("--pcen-exponent", f.pcen.exponent)->capture_default_str();
  app->add_option("--pcen-floor", f.pcen.floor)->capture_default_str();
  app->add_option("--mfcc-coeffs", f.mfcc_coeffs)->capture_default_str();
  app->add_option("--features", kind, "logmel | pcen | mfcc_delta")
      ->check(CLI::IsMember({"logmel", "pcen", "mfcc_delta"}))
      ->capture_default_str();
}

}  // namespace

int main(int argc, char **argv) {
  CLI::App app{"Few-shot bioacoustic event detection toolkit"};
  app.require_subcommand(1);
  int status = 0;

  // score
  cli::ScoreOptions score;
  std::string score_out, score_config;
  bool no_unk = false;
  auto *score_cmd = app.add_subcommand("score", "Score a prediction CSV against annotations");
  add_config_option(score_cmd, score_config);
  score_cmd->add_option("--pred", score.predictions, "Prediction CSV (required)");
  score_cmd->add_option("--gt", score.ground_truth, "Annotation directory (required)");
  score_cmd->add_option("--min-iou", score.scoring.min_iou)->capture_default_str();
  score_cmd->add_flag("--no-unk", no_unk, "Do not drop predictions that overlap UNK events");
  score_cmd->add_option("--bootstrap", score.bootstrap_iterations, "Bootstrap iterations (0: no CI)")
      ->capture_default_str();
  score_cmd->add_option("--seed", score.seed)->capture_default_str();
  score_cmd->add_option("--out", score_out, "Report JSON (stdout if omitted)");
  score_cmd->callback([&] {
    apply_config(score_cmd, score_config, {"--pred", "--gt"});
    score.scoring.ignore_unk = !no_unk;
    if (!score_out.empty()) score.out = score_out;
    status = cli::cmd_score(score, std::cout, std::cerr);
  });

  // detect
  cli::DetectOptions detect;
  std::string detect_mode = "template", detect_model, detect_out, detect_kind = "pcen", detect_config;
  auto *detect_cmd = app.add_subcommand("detect", "Run a detector over a corpus");
  add_config_option(detect_cmd, detect_config);
  detect_cmd->add_option("--mode", detect_mode)->check(CLI::IsMember({"template", "proto"}))
      ->capture_default_str();
  detect_cmd->add_option("--corpus", detect.corpus_dir, "Corpus directory (required)");
  detect_cmd->add_option("--model", detect_model, "Checkpoint (proto mode)");
  detect_cmd->add_option("--out", detect_out, "Prediction CSV (stdout if omitted)");
  detect_cmd->add_option("--workers", detect.workers)->capture_default_str();
  detect_cmd->add_option("--alpha", detect.template_config.threshold_alpha)->capture_default_str();
  detect_cmd->add_option("--suppression", detect.template_config.suppression_seconds)
      ->capture_default_str();
  detect_cmd->add_option("--window", detect.proto_config.window_seconds, "0: mean shot duration")
      ->capture_default_str();
  detect_cmd->add_option("--window-hop", detect.proto_config.window_hop_seconds, "0: window/4")
      ->capture_default_str();
  detect_cmd->add_option("--prob-threshold", detect.proto_config.prob_threshold)->capture_default_str();
  detect_cmd->add_option("--median-width", detect.proto_config.median_filter_width)
      ->capture_default_str();
  detect_cmd->add_option("--min-event-fraction", detect.proto_config.min_event_fraction)
      ->capture_default_str();
  add_feature_options(detect_cmd, detect.features, detect_kind);
  detect_cmd->callback([&] {
    apply_config(detect_cmd, detect_config, {"--corpus"});
    detect.mode = detect_mode == "proto" ? cli::DetectMode::kProto : cli::DetectMode::kTemplate;
    if (!detect_model.empty()) detect.model = detect_model;
    if (!detect_out.empty()) detect.out = detect_out;
    detect.template_config.feature_kind = *dsp::parse_feature_kind(detect_kind);
    status = cli::cmd_detect(detect, std::cout, std::cerr);
  });

  // train-proto
  cli::TrainProtoOptions train;
  std::string train_loss, train_kind = "pcen", train_config;
  auto *train_cmd = app.add_subcommand("train-proto", "Train the prototypical embedding");
  add_config_option(train_cmd, train_config);
  train_cmd->add_option("--corpus", train.corpus_dir, "Multi-label training corpus (required)");
  train_cmd->add_option("--out", train.out_checkpoint, "Checkpoint path (required)");
  train_cmd->add_option("--loss-log", train_loss, "Loss CSV (default <out>.loss.csv)");
  train_cmd->add_option("--episodes", train.training.episodes)->capture_default_str();
  train_cmd->add_option("--lr", train.training.learning_rate)->capture_default_str();
  train_cmd->add_option("--n-way", train.training.spec.n_way)->capture_default_str();
  train_cmd->add_option("--k-shot", train.training.spec.k_shot)->capture_default_str();
  train_cmd->add_option("--queries", train.training.spec.queries)->capture_default_str();
  train_cmd->add_option("--hidden", train.hidden_dim)->capture_default_str();
  train_cmd->add_option("--embed", train.embed_dim)->capture_default_str();
  train_cmd->add_option("--seed", train.training.seed)->capture_default_str();
  train_cmd->add_option("--workers", train.workers)->capture_default_str();
  add_feature_options(train_cmd, train.features, train_kind);
  train_cmd->callback([&] {
    apply_config(train_cmd, train_config, {"--corpus", "--out"});
    if (!train_loss.empty()) train.loss_log = train_loss;
    train.features.kind = *dsp::parse_feature_kind(train_kind);
    status = cli::cmd_train_proto(train, std::cout, std::cerr);
  });

  // synth
  synth::SynthSpec spec;
  std::string synth_out, noise = "white", synth_config;
  std::vector<std::string> class_specs;
  bool multi_label = false;
  auto *synth_cmd = app.add_subcommand("synth", "Generate a synthetic annotated corpus");
  add_config_option(synth_cmd, synth_config);
  synth_cmd->add_option("--out", synth_out, "Output root directory (required)");
  synth_cmd->add_option("--files", spec.files)->capture_default_str();
  synth_cmd->add_option("--duration", spec.file_duration, "Seconds per file")->capture_default_str();
  synth_cmd->add_option("--class", class_specs,
                        "name:tone|chirp:f_lo:f_hi:dur_min:dur_max:rate_per_min (repeatable)");
  synth_cmd->add_option("--snr", spec.snr_db, "Event SNR in dB")->capture_default_str();
  synth_cmd->add_option("--noise", noise)->check(CLI::IsMember({"white", "pink"}))->capture_default_str();
  synth_cmd->add_option("--seed", spec.seed)->capture_default_str();
  synth_cmd->add_option("--sample-rate", spec.sample_rate)->capture_default_str();
  synth_cmd->add_flag("--multi-label", multi_label, "Annotate every class (training corpora)");
  synth_cmd->add_option("--dataset", spec.dataset)->capture_default_str();
  synth_cmd->add_option("--prefix", spec.file_prefix)->capture_default_str();
  synth_cmd->callback([&] {
    apply_config(synth_cmd, synth_config, {"--out"});
    try {
      for (const auto &c : class_specs) spec.classes.push_back(synth::parse_class(c));
    } catch (const std::exception &e) {
      std::cerr << "error: " << e.what() << '\n';
      status = cli::kInputError;
      return;
    }
    if (spec.classes.empty()) spec.classes.push_back(synth::parse_class("call:tone:1500:1600:0.3:0.6:8"));
    spec.noise = noise == "pink" ? synth::NoiseKind::kPink : synth::NoiseKind::kWhite;
    spec.mode = multi_label ? corpus::LabelMode::kMultiLabel : corpus::LabelMode::kSingleLabel;
    status = cli::cmd_synth(spec, synth_out, std::cout, std::cerr);
  });

  // report
  cli::ReportOptions report;
  std::string report_csv, report_config;
  auto *report_cmd = app.add_subcommand("report", "Bar chart of a score report");
  add_config_option(report_cmd, report_config);
  report_cmd->add_option("--report", report.report_json, "Score report JSON (required)");
  report_cmd->add_option("--out", report.out_svg, "SVG path (required)");
  report_cmd->add_option("--csv", report_csv, "Plotted numbers (default <out>.csv)");
  report_cmd->callback([&] {
    apply_config(report_cmd, report_config, {"--report", "--out"});
    if (!report_csv.empty()) report.out_csv = report_csv;
    status = cli::cmd_report(report, std::cout, std::cerr);
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : cli::kInputError;
  }
  return status;
}
