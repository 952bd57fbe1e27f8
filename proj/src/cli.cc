// src/cli.cc

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

#include "fsbed/cli.h"

#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "fsbed/parallel.h"
#include "json.hpp"

namespace fsbed::cli {

namespace fs = std::filesystem;

namespace {

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
  return buf;
}

std::string xml_escape(const std::string &text) {
  std::string out;
  for (char c : text) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

// Files of a manifest in (dataset, file) order.
struct CorpusEntry {
  std::string dataset;
  corpus::ManifestFile file;
};

std::vector<CorpusEntry> flatten(const corpus::CorpusManifest &manifest) {
  std::vector<CorpusEntry> out;
  for (const auto &ds : manifest.datasets)
    for (const auto &f : ds.files) out.push_back({ds.name, f});
  return out;
}

void emit(const std::optional<fs::path> &path, const std::string &content, std::ostream &out) {
  if (path) write_file_atomic(*path, content);
  else out << content;
}

}  // namespace

void write_file_atomic(const fs::path &path, const std::string &content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + tmp.string());
    f.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!f) throw std::runtime_error("write failed: " + tmp.string());
  }
  fs::rename(tmp, path);
}

// score ----------------------------------------------------------------------

void ScoreOptions::validate() const {
  scoring.validate();
  if (!fs::is_regular_file(predictions))
    throw std::invalid_argument("prediction file not found: " + predictions.string());
  if (!fs::is_directory(ground_truth))
    throw std::invalid_argument("ground-truth directory not found: " + ground_truth.string());
}

ScoreRun score_corpus(const ScoreOptions &options) {
  options.validate();
  std::ifstream pred_in(options.predictions);
  if (!pred_in) throw std::invalid_argument("cannot open " + options.predictions.string());
  const corpus::PredictionMap predictions = corpus::parse_predictions_csv(pred_in);
  const auto entries = flatten(corpus::scan_corpus(options.ground_truth));

  ScoreRun run;
  std::map<std::string, eval::ScoreCounts> file_counts;
  std::map<std::string, std::string> dataset_of;
  std::set<std::string> known_ids;
  for (const auto &entry : entries) {
    const corpus::FileAnnotations ann = corpus::load_annotations(entry.file.annotation_path);
    if (!known_ids.insert(ann.audio_id).second)
      throw std::invalid_argument("audio id '" + ann.audio_id + "' appears in more than one file");
    if (ann.mode != corpus::LabelMode::kSingleLabel) {
      run.warnings.push_back(entry.file.annotation_path.string() + ": multi-label file skipped");
      continue;
    }
    corpus::FewShotTask task;
    try {
      task = corpus::build_fewshot_task(ann);
    } catch (const corpus::InsufficientShotsError &e) {
      run.warnings.push_back(std::string(e.what()) + "; file skipped");
      continue;
    }
    const auto it = predictions.find(ann.audio_id);
    const std::vector<corpus::Event> none;
    const auto &pred = it == predictions.end() ? none : it->second;
    file_counts[ann.audio_id] = eval::score_file(ann, ann.audio_id, pred, task, options.scoring);
    dataset_of[ann.audio_id] = entry.dataset;
  }
  for (const auto &[id, events] : predictions)
    if (!known_ids.count(id))
      run.warnings.push_back("predictions for unknown audio id '" + id + "'");

  run.report = eval::aggregate(file_counts, dataset_of);
  if (file_counts.size() >= 2 && options.bootstrap_iterations > 0) {
    std::vector<eval::ScoreCounts> counts;
    for (const auto &[id, c] : file_counts) counts.push_back(c);
    run.report.ci = eval::bootstrap_ci(counts, options.bootstrap_iterations, options.seed);
  }
  run.json = eval::report_to_json(run.report,
                                  {options.scoring.min_iou, options.scoring.ignore_unk,
                                   options.bootstrap_iterations, options.seed},
                                  run.warnings);
  return run;
}

int cmd_score(const ScoreOptions &options, std::ostream &out, std::ostream &err) {
  ScoreRun run;
  try {
    run = score_corpus(options);
  } catch (const std::exception &e) {
    err << "error: " << e.what() << '\n';
    return kInputError;
  }
  for (const auto &w : run.warnings) err << "warning: " << w << '\n';
  try {
    emit(options.out, run.json, out);
  } catch (const std::exception &e) {
    err << "error: " << e.what() << '\n';
    return kDataError;
  }
  return kOk;
}

// detect ---------------------------------------------------------------------

void DetectOptions::validate() const {
  if (!fs::is_directory(corpus_dir))
    throw std::invalid_argument("corpus directory not found: " + corpus_dir.string());
  if (mode == DetectMode::kProto) {
    if (!model) throw std::invalid_argument("proto mode needs --model");
    if (!fs::is_regular_file(*model))
      throw std::invalid_argument("checkpoint not found: " + model->string());
  }
  features.validate();
  template_config.validate();
  proto_config.validate();
  if (workers == 0) throw std::invalid_argument("workers must be >= 1");
}

int cmd_detect(const DetectOptions &options, std::ostream &out, std::ostream &err) {
  std::optional<proto::Checkpoint> checkpoint;
  std::vector<CorpusEntry> entries;
  try {
    options.validate();
    if (options.mode == DetectMode::kProto) checkpoint = proto::load_checkpoint(*options.model);
    entries = flatten(corpus::scan_corpus(options.corpus_dir));
  } catch (const std::exception &e) {
    err << "error: " << e.what() << '\n';
    return kInputError;
  }

  dsp::FeatureConfig features = options.features;
  if (checkpoint) {
    features = checkpoint->meta.features;
  } else {
    features.kind = options.template_config.feature_kind;
  }

  struct Slot {
    std::string audio_id;
    std::vector<corpus::Event> events;
    std::vector<std::string> warnings;
    bool audio_failed = false;
  };
  std::vector<Slot> slots(entries.size());
  parallel_for(entries.size(), options.workers, [&](std::size_t i) {
    Slot &slot = slots[i];
    const auto &file = entries[i].file;
    corpus::FileAnnotations ann;
    corpus::FewShotTask task;
    try {
      ann = corpus::load_annotations(file.annotation_path);
      task = corpus::build_fewshot_task(ann);
    } catch (const std::exception &e) {
      slot.warnings.push_back(file.annotation_path.string() + ": " + e.what() + "; file skipped");
      return;
    }
    slot.audio_id = ann.audio_id;
    dsp::FeatureStack stack;
    try {
      stack = dsp::compute_features(dsp::load_wav(file.audio_path), features);
    } catch (const std::exception &e) {
      slot.warnings.push_back(file.audio_path.string() + ": " + e.what() + "; file skipped");
      slot.audio_failed = true;
      return;
    }
    try {
      if (checkpoint) {
        std::vector<corpus::Event> negatives;
        for (const auto &e : ann.events)
          if (e.tag == corpus::Tag::kNeg && e.offset <= task.query_start) negatives.push_back(e);
        slot.events = proto::infer_fewshot(checkpoint->params, stack, task, options.proto_config,
                                           negatives);
      } else {
        slot.events = template_match::detect(stack, task, options.template_config);
      }
    } catch (const std::exception &e) {
      slot.warnings.push_back(ann.audio_id + ": " + e.what() + "; no predictions");
    }
  });

  corpus::PredictionMap predictions;
  std::size_t failed = 0;
  for (auto &slot : slots) {
    for (const auto &w : slot.warnings) err << "warning: " << w << '\n';
    if (slot.audio_failed) ++failed;
    if (!slot.audio_id.empty() && !slot.events.empty())
      predictions[slot.audio_id] = std::move(slot.events);
  }
  if (!entries.empty() && failed == entries.size()) {
    err << "error: no audio file could be processed\n";
    return kDataError;
  }
  try {
    emit(options.out, corpus::write_predictions_csv(predictions), out);
  } catch (const std::exception &e) {
    err << "error: " << e.what() << '\n';
    return kDataError;
  }
  return kOk;
}

// train-proto ----------------------------------------------------------------

void TrainProtoOptions::validate() const {
  if (!fs::is_directory(corpus_dir))
    throw std::invalid_argument("corpus directory not found: " + corpus_dir.string());
  if (out_checkpoint.empty()) throw std::invalid_argument("missing output checkpoint path");
  features.validate();
  training.spec.validate();
  if (!(training.learning_rate >= 0.0)) throw std::invalid_argument("learning rate must be >= 0");
  if (hidden_dim == 0 || embed_dim == 0) throw std::invalid_argument("dims must be positive");
  if (workers == 0) throw std::invalid_argument("workers must be >= 1");
}

int cmd_train_proto(const TrainProtoOptions &options, std::ostream &out, std::ostream &err) {
  std::vector<CorpusEntry> entries;
  try {
    options.validate();
    entries = flatten(corpus::scan_corpus(options.corpus_dir));
  } catch (const std::exception &e) {
    err << "error: " << e.what() << '\n';
    return kInputError;
  }

  struct Slot {
    corpus::FileAnnotations ann;
    dsp::FeatureStack features;
    std::string error;
  };
  std::vector<Slot> slots(entries.size());
  parallel_for(entries.size(), options.workers, [&](std::size_t i) {
    try {
      slots[i].ann = corpus::load_annotations(entries[i].file.annotation_path);
      slots[i].features =
          dsp::compute_features(dsp::load_wav(entries[i].file.audio_path), options.features);
    } catch (const std::exception &e) {
      slots[i].error = e.what();
    }
  });
  proto::TrainingPool pool;
  for (const auto &slot : slots) {
    if (!slot.error.empty()) {
      err << "warning: " << slot.error << "; file skipped\n";
      continue;
    }
    pool.add_file(slot.features, slot.ann);
  }

  const auto &spec = options.training.spec;
  const std::size_t per_class = spec.k_shot + spec.queries;
  const std::size_t available = pool.eligible_classes(per_class);
  if (available < spec.n_way) {
    err << "error: N=" << spec.n_way << " classes requested but only " << available
        << " classes have >= " << per_class << " events\n";
    return kInputError;
  }

  const proto::EmbeddingDims dims{pool.input_dim(), options.hidden_dim, options.embed_dim};
  proto::TrainResult result;
  try {
    result = proto::train(proto::init_params(dims, options.training.seed), pool, options.training);
  } catch (const proto::TrainingDivergedError &e) {
    err << "error: " << e.what() << '\n';
    return kDataError;
  }

  auto loss_path = options.loss_log.value_or([&] {
    auto p = options.out_checkpoint;
    p += ".loss.csv";
    return p;
  }());
  try {
    proto::save_checkpoint(options.out_checkpoint, result.params,
                           {options.features, options.training});
    write_file_atomic(loss_path, proto::loss_log_csv(result.losses));
  } catch (const std::exception &e) {
    err << "error: " << e.what() << '\n';
    return kDataError;
  }
  out << "trained " << result.losses.size() << " episodes on " << pool.classes().size()
      << " classes; checkpoint " << options.out_checkpoint.string() << '\n';
  return kOk;
}

// synth ----------------------------------------------------------------------

int cmd_synth(const synth::SynthSpec &spec, const fs::path &out_dir, std::ostream &out,
              std::ostream &err) {
  try {
    spec.validate();
  } catch (const std::exception &e) {
    err << "error: " << e.what() << '\n';
    return kInputError;
  }
  try {
    const auto dir = synth::write_corpus(spec, out_dir);
    out << "wrote " << spec.files << " files to " << dir.string() << '\n';
  } catch (const std::exception &e) {
    err << "error: " << e.what() << '\n';
    return kDataError;
  }
  return kOk;
}

// report ---------------------------------------------------------------------

std::vector<ChartBar> chart_bars(const std::string &report_json) {
  const auto j = nlohmann::json::parse(report_json);
  const auto read_f = [](const nlohmann::json &node, const std::string &where) {
    const auto &f = node.at("fscore");
    if (!f.is_number()) throw std::invalid_argument(where + ".fscore is not a number");
    const double v = f.get<double>();
    if (!(v >= 0.0 && v <= 1.0)) throw std::invalid_argument(where + ".fscore outside [0, 1]");
    return v;
  };
  std::vector<ChartBar> bars;
  if (j.contains("datasets")) {
    if (!j.at("datasets").is_object()) throw std::invalid_argument("datasets is not an object");
    for (const auto &[name, node] : j.at("datasets").items())
      bars.push_back({name, read_f(node, "datasets." + name)});
  }
  bars.push_back({"overall", read_f(j.at("overall"), "overall")});
  return bars;
}

std::string render_svg(const std::vector<ChartBar> &bars) {
  constexpr int kLeft = 60, kTop = 30, kPlotH = 300, kBarW = 60, kGap = 30;
  const int width = kLeft + static_cast<int>(bars.size()) * (kBarW + kGap) + kGap;
  const int height = kTop + kPlotH + 60;
  std::ostringstream s;
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
    << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  s << "  <text x=\"" << width / 2 << "\" y=\"18\" text-anchor=\"middle\">F-score (%)</text>\n";
  for (int tick = 0; tick <= 100; tick += 20) {
    const int y = kTop + kPlotH - tick * kPlotH / 100;
    s << "  <line x1=\"" << kLeft << "\" y1=\"" << y << "\" x2=\"" << width - kGap / 2 << "\" y2=\""
      << y << "\" stroke=\"#ddd\"/>\n";
    s << "  <text x=\"" << kLeft - 8 << "\" y=\"" << y + 4 << "\" text-anchor=\"end\">" << tick
      << "</text>\n";
  }
  for (std::size_t i = 0; i < bars.size(); ++i) {
    const double pct = bars[i].fscore * 100.0;
    const double h = pct * kPlotH / 100.0;
    const int x = kLeft + kGap + static_cast<int>(i) * (kBarW + kGap);
    const double y = kTop + kPlotH - h;
    const char *fill = bars[i].name == "overall" ? "#555" : "#4477aa";
    s << "  <rect x=\"" << x << "\" y=\"" << fixed(y, 2) << "\" width=\"" << kBarW
      << "\" height=\"" << fixed(h, 2) << "\" fill=\"" << fill << "\"/>\n";
    s << "  <text x=\"" << x + kBarW / 2 << "\" y=\"" << fixed(y - 4, 2)
      << "\" text-anchor=\"middle\">" << fixed(pct, 1) << "</text>\n";
    s << "  <text x=\"" << x + kBarW / 2 << "\" y=\"" << kTop + kPlotH + 18
      << "\" text-anchor=\"middle\">" << xml_escape(bars[i].name) << "</text>\n";
  }
  s << "  <line x1=\"" << kLeft << "\" y1=\"" << kTop << "\" x2=\"" << kLeft << "\" y2=\""
    << kTop + kPlotH << "\" stroke=\"#000\"/>\n";
  s << "</svg>\n";
  return s.str();
}

std::string chart_csv(const std::vector<ChartBar> &bars) {
  std::string out = "name,fscore,fscore_percent\n";
  for (const auto &b : bars)
    out += b.name + "," + fixed(b.fscore, 6) + "," + fixed(b.fscore * 100.0, 4) + "\n";
  return out;
}

int cmd_report(const ReportOptions &options, std::ostream &out, std::ostream &err) {
  std::vector<ChartBar> bars;
  try {
    std::ifstream in(options.report_json);
    if (!in) throw std::invalid_argument("cannot open " + options.report_json.string());
    std::stringstream buf;
    buf << in.rdbuf();
    bars = chart_bars(buf.str());
  } catch (const std::exception &e) {
    err << "error: malformed report: " << e.what() << '\n';
    return kInputError;
  }
  auto csv_path = options.out_csv.value_or(fs::path(options.out_svg).replace_extension(".csv"));
  try {
    write_file_atomic(options.out_svg, render_svg(bars));
    write_file_atomic(csv_path, chart_csv(bars));
  } catch (const std::exception &e) {
    err << "error: " << e.what() << '\n';
    return kDataError;
  }
  out << "wrote " << options.out_svg.string() << " and " << csv_path.string() << '\n';
  return kOk;
}

}  // namespace fsbed::cli
