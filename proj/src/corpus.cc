// src/corpus.cc

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

#include "fsbed/corpus.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "fsbed/wav.h"

namespace fsbed::corpus {

namespace {

std::string_view trim(std::string_view s) {
  const auto not_space = [](char c) { return c != ' ' && c != '\t' && c != '\r' && c != '\n'; };
  while (!s.empty() && !not_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && !not_space(s.back())) s.remove_suffix(1);
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"') s = s.substr(1, s.size() - 2);
  return s;
}

std::vector<std::string_view> split_row(std::string_view line) {
  std::vector<std::string_view> cells;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      cells.push_back(trim(line.substr(start)));
      break;
    }
    cells.push_back(trim(line.substr(start, comma - start)));
    start = comma + 1;
  }
  return cells;
}

std::optional<double> parse_number(std::string_view text) {
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size() || !std::isfinite(value))
    return std::nullopt;
  return value;
}

bool is_blank(std::string_view line) { return trim(line).empty(); }

std::string format_time(double t) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6f", t);
  return buf;
}

void check_time_columns(const std::vector<std::string_view> &header, std::size_t min_cols) {
  if (header.size() < min_cols || header[0] != "Audiofilename" || header[1] != "Starttime" ||
      header[2] != "Endtime")
    throw ParseError(1, "expected header starting with Audiofilename,Starttime,Endtime");
}

// Reads onset/offset from a data row and checks the interval.
std::pair<double, double> parse_interval(const std::vector<std::string_view> &cells,
                                         std::size_t line_no) {
  const auto onset = parse_number(cells[1]);
  const auto offset = parse_number(cells[2]);
  if (!onset || !offset)
    throw ParseError(line_no, "non-numeric time value");
  if (*onset < 0.0) throw ParseError(line_no, "negative onset");
  if (!(*onset < *offset)) throw ParseError(line_no, "onset must be before offset");
  return {*onset, *offset};
}

}  // namespace

std::string_view tag_name(Tag tag) {
  switch (tag) {
    case Tag::kPos: return "POS";
    case Tag::kNeg: return "NEG";
    case Tag::kUnk: return "UNK";
  }
  return "UNK";
}

std::optional<Tag> parse_tag(std::string_view text) {
  if (text == "POS") return Tag::kPos;
  if (text == "NEG") return Tag::kNeg;
  if (text == "UNK") return Tag::kUnk;
  return std::nullopt;
}

void validate_event(const Event &event) {
  if (!(event.onset >= 0.0) || !(event.onset < event.offset) || !std::isfinite(event.offset))
    throw std::invalid_argument("invalid event interval [" + format_time(event.onset) + ", " +
                                format_time(event.offset) + "]");
  if (event.label.empty()) throw std::invalid_argument("event label is empty");
}

bool onset_less(const Event &a, const Event &b) {
  if (a.onset != b.onset) return a.onset < b.onset;
  return a.offset < b.offset;
}

double FewShotTask::mean_shot_duration() const {
  if (shots.empty()) return 0.0;
  double sum = 0.0;
  for (const auto &s : shots) sum += s.duration();
  return sum / static_cast<double>(shots.size());
}

double FewShotTask::median_shot_duration() const {
  if (shots.empty()) return 0.0;
  std::vector<double> d;
  for (const auto &s : shots) d.push_back(s.duration());
  std::sort(d.begin(), d.end());
  const std::size_t n = d.size();
  return n % 2 == 1 ? d[n / 2] : 0.5 * (d[n / 2 - 1] + d[n / 2]);
}

ParseError::ParseError(std::size_t line, const std::string &detail, const std::string &source)
    : std::runtime_error((source.empty() ? "" : source + ": ") +
                         (line > 0 ? "line " + std::to_string(line) + ": " : "") + detail),
      line_(line),
      detail_(detail) {}

LabelMode detect_label_mode(std::string_view header_line) {
  const auto cells = split_row(header_line);
  return cells.size() == 4 && cells[3] == "Q" ? LabelMode::kSingleLabel : LabelMode::kMultiLabel;
}

FileAnnotations parse_annotation_csv(std::istream &text, LabelMode mode,
                                     std::string_view fallback_audio_id) {
  FileAnnotations ann;
  ann.mode = mode;
  ann.audio_id = std::string(fallback_audio_id);

  std::string line;
  std::size_t line_no = 0;
  std::vector<std::string> classes;
  bool have_header = false;
  bool have_rows = false;

  while (std::getline(text, line)) {
    ++line_no;
    if (is_blank(line)) continue;
    const auto cells = split_row(line);
    if (!have_header) {
      if (mode == LabelMode::kSingleLabel) {
        check_time_columns(cells, 4);
        if (cells.size() != 4) throw ParseError(line_no, "single-label header needs exactly 4 columns");
      } else {
        check_time_columns(cells, 4);
      }
      for (std::size_t c = 3; c < cells.size(); ++c) {
        if (cells[c].empty()) throw ParseError(line_no, "empty class column name");
        classes.emplace_back(cells[c]);
      }
      have_header = true;
      continue;
    }
    if (cells.size() != 3 + classes.size())
      throw ParseError(line_no, "expected " + std::to_string(3 + classes.size()) + " columns, got " +
                                    std::to_string(cells.size()));
    const auto [onset, offset] = parse_interval(cells, line_no);
    if (cells[0].empty()) throw ParseError(line_no, "empty Audiofilename");
    if (!have_rows) {
      ann.audio_id = std::string(cells[0]);
      have_rows = true;
    } else if (cells[0] != ann.audio_id) {
      throw ParseError(line_no, "Audiofilename differs from earlier rows");
    }
    for (std::size_t c = 0; c < classes.size(); ++c) {
      const auto tag = parse_tag(cells[3 + c]);
      if (!tag) throw ParseError(line_no, "unknown tag '" + std::string(cells[3 + c]) + "'");
      ann.events.push_back(Event{onset, offset, classes[c], *tag});
    }
  }
  if (!have_header) throw ParseError(0, "missing header");

  std::stable_sort(ann.events.begin(), ann.events.end(), onset_less);
  for (const auto &e : ann.events) ann.duration = std::max(ann.duration, e.offset);
  return ann;
}

FewShotTask build_fewshot_task(const FileAnnotations &ann) {
  if (ann.mode != LabelMode::kSingleLabel)
    throw std::invalid_argument("few-shot tasks need single-label annotations");
  std::vector<Event> pos;
  for (const auto &e : ann.events)
    if (e.tag == Tag::kPos) pos.push_back(e);
  std::stable_sort(pos.begin(), pos.end(), onset_less);

  FewShotTask task;
  task.audio_id = ann.audio_id;
  for (const auto &e : pos) {
    if (!task.shots.empty() && task.shots.back().onset == e.onset &&
        task.shots.back().offset == e.offset)
      continue;  // duplicate interval
    task.shots.push_back(e);
    if (task.shots.size() == FewShotTask::kShots) break;
  }
  if (task.shots.size() < FewShotTask::kShots)
    throw InsufficientShotsError(ann.audio_id + ": " + std::to_string(task.shots.size()) +
                                 " distinct POS events, need 5");
  task.class_label = task.shots.front().label;
  task.query_start = task.shots.back().offset;
  return task;
}

std::string write_predictions_csv(const PredictionMap &predictions) {
  std::string out = "Audiofilename,Starttime,Endtime\n";
  for (const auto &[audio_id, events] : predictions) {
    std::vector<Event> sorted = events;
    std::stable_sort(sorted.begin(), sorted.end(), onset_less);
    for (const auto &e : sorted) {
      out += audio_id;
      out += ',';
      out += format_time(e.onset);
      out += ',';
      out += format_time(e.offset);
      out += '\n';
    }
  }
  return out;
}

PredictionMap parse_predictions_csv(std::istream &text) {
  PredictionMap out;
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  while (std::getline(text, line)) {
    ++line_no;
    if (is_blank(line)) continue;
    const auto cells = split_row(line);
    if (!have_header) {
      check_time_columns(cells, 3);
      if (cells.size() != 3) throw ParseError(line_no, "prediction header needs exactly 3 columns");
      have_header = true;
      continue;
    }
    if (cells.size() != 3)
      throw ParseError(line_no, "expected 3 columns, got " + std::to_string(cells.size()));
    if (cells[0].empty()) throw ParseError(line_no, "empty Audiofilename");
    const auto [onset, offset] = parse_interval(cells, line_no);
    out[std::string(cells[0])].push_back(
        Event{onset, offset, std::string(kPredictionLabel), Tag::kPos});
  }
  if (!have_header) throw ParseError(0, "missing header");
  for (auto &[id, events] : out) std::stable_sort(events.begin(), events.end(), onset_less);
  return out;
}

// Manifests -----------------------------------------------------------------

namespace {

std::vector<ManifestFile> csv_files_in(const std::filesystem::path &dir) {
  std::vector<ManifestFile> files;
  for (const auto &entry : std::filesystem::directory_iterator(dir)) {
    if (!entry.is_regular_file() || entry.path().extension() != ".csv") continue;
    ManifestFile f;
    f.annotation_path = entry.path();
    f.audio_path = entry.path();
    f.audio_path.replace_extension(".wav");
    files.push_back(std::move(f));
  }
  std::sort(files.begin(), files.end(), [](const auto &a, const auto &b) {
    return a.annotation_path.filename() < b.annotation_path.filename();
  });
  return files;
}

}  // namespace

CorpusManifest scan_corpus(const std::filesystem::path &root) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(root)) throw std::runtime_error("not a directory: " + root.string());
  CorpusManifest manifest;
  auto top = csv_files_in(root);
  if (!top.empty()) {
    auto name = fs::absolute(root).lexically_normal().filename().string();
    if (name.empty()) name = fs::absolute(root).lexically_normal().parent_path().filename().string();
    manifest.datasets.push_back({name, std::move(top)});
  }
  std::vector<fs::path> subdirs;
  for (const auto &entry : fs::directory_iterator(root))
    if (entry.is_directory()) subdirs.push_back(entry.path());
  std::sort(subdirs.begin(), subdirs.end());
  for (const auto &dir : subdirs) {
    auto files = csv_files_in(dir);
    if (!files.empty()) manifest.datasets.push_back({dir.filename().string(), std::move(files)});
  }
  return manifest;
}

FileAnnotations load_annotations(const std::filesystem::path &csv_path) {
  std::ifstream in(csv_path);
  if (!in) throw std::runtime_error("cannot open annotation file: " + csv_path.string());
  std::string header;
  while (std::getline(in, header) && is_blank(header)) {
  }
  const LabelMode mode = detect_label_mode(header);
  in.clear();
  in.seekg(0);
  auto stem = csv_path.stem().string() + ".wav";
  try {
    return parse_annotation_csv(in, mode, stem);
  } catch (const ParseError &e) {
    throw ParseError(e.line(), e.detail(), csv_path.string());
  }
}

std::vector<DatasetStats> manifest_stats(const CorpusManifest &manifest) {
  std::vector<DatasetStats> out;
  for (const auto &ds : manifest.datasets) {
    DatasetStats stats;
    stats.name = ds.name;
    std::set<std::string> labels;
    for (const auto &file : ds.files) {
      if (!std::filesystem::exists(file.annotation_path))
        throw std::runtime_error("missing annotation file: " + file.annotation_path.string());
      const FileAnnotations ann = load_annotations(file.annotation_path);
      double duration = ann.duration;
      if (!file.audio_path.empty() && std::filesystem::exists(file.audio_path))
        duration = dsp::read_wav_info(file.audio_path).duration_seconds();
      ++stats.file_count;
      stats.total_duration += duration;
      stats.event_count += ann.events.size();
      for (const auto &e : ann.events) {
        if (e.tag != Tag::kPos) continue;
        ++stats.pos_count;
        labels.insert(e.label);
      }
    }
    stats.label_count = labels.size();
    out.push_back(std::move(stats));
  }
  return out;
}

}  // namespace fsbed::corpus
