// include/fsbed/corpus.h

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

#ifndef FSBED_CORPUS_H_
#define FSBED_CORPUS_H_

#include <cstddef>
#include <filesystem>
#include <istream>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace fsbed::corpus {

enum class Tag { kPos, kNeg, kUnk };

std::string_view tag_name(Tag tag);
std::optional<Tag> parse_tag(std::string_view text);

/// A labelled time interval in seconds. Used for ground truth, shots and
/// predictions alike.
struct Event {
  double onset = 0.0;
  double offset = 0.0;
  std::string label;
  Tag tag = Tag::kPos;

  double duration() const { return offset - onset; }
  friend bool operator==(const Event &, const Event &) = default;
};

/// Throws std::invalid_argument unless 0 <= onset < offset and the label is
/// non-empty.
void validate_event(const Event &event);

/// Orders by onset, then offset. Used with stable sorts so equal intervals
/// keep their input order.
bool onset_less(const Event &a, const Event &b);

enum class LabelMode { kMultiLabel, kSingleLabel };

struct FileAnnotations {
  std::string audio_id;
  double duration = 0.0;
  std::vector<Event> events;  // sorted by (onset, offset)
  LabelMode mode = LabelMode::kSingleLabel;
};

/// The inference unit of both detectors: the first five positive events of
/// the target class, and the time from which detection is scored.
struct FewShotTask {
  static constexpr std::size_t kShots = 5;

  std::string audio_id;
  std::string class_label;
  std::vector<Event> shots;
  double query_start = 0.0;

  double mean_shot_duration() const;
  double median_shot_duration() const;
};

/// Raised for malformed CSV input. `line()` is the 1-based line number in
/// the stream (the header is line 1), or 0 for header-level problems.
class ParseError : public std::runtime_error {
 public:
  ParseError(std::size_t line, const std::string &detail, const std::string &source = {});
  std::size_t line() const { return line_; }
  const std::string &detail() const { return detail_; }

 private:
  std::size_t line_;
  std::string detail_;
};

class InsufficientShotsError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Single-label headers are exactly `Audiofilename,Starttime,Endtime,Q`;
/// anything with more class columns is multi-label.
LabelMode detect_label_mode(std::string_view header_line);

/// Parses an annotation CSV.
///
/// Single-label files carry one tag column; its header name becomes the event
/// label. Multi-label files carry one column per class, and every cell yields
/// an event labelled with that column's class name. Events come back sorted
/// by (onset, offset), ties in input order. The duration is the largest
/// offset; callers with audio at hand overwrite it.
///
/// `fallback_audio_id` names the file when it has no data rows.
FileAnnotations parse_annotation_csv(std::istream &text, LabelMode mode,
                                     std::string_view fallback_audio_id = {});

/// First five distinct POS intervals by onset; query_start is the offset of
/// the fifth. Throws InsufficientShotsError with fewer than five, and
/// std::invalid_argument for multi-label input.
FewShotTask build_fewshot_task(const FileAnnotations &ann);

using PredictionMap = std::map<std::string, std::vector<Event>>;

/// Label given to events read back from a prediction CSV.
inline constexpr std::string_view kPredictionLabel = "PRED";

/// `Audiofilename,Starttime,Endtime` rows sorted by (audio_id, onset), six
/// decimal places.
std::string write_predictions_csv(const PredictionMap &predictions);

PredictionMap parse_predictions_csv(std::istream &text);

// Dataset manifests -------------------------------------------------------

struct ManifestFile {
  std::filesystem::path audio_path;       // may not exist
  std::filesystem::path annotation_path;
};

struct DatasetManifest {
  std::string name;
  std::vector<ManifestFile> files;
};

struct CorpusManifest {
  std::vector<DatasetManifest> datasets;
};

/// Every subdirectory of `root` holding `<name>.csv` files is a dataset. If
/// `root` itself holds CSVs it is treated as one dataset named after the
/// directory. Datasets and files are sorted by name.
CorpusManifest scan_corpus(const std::filesystem::path &root);

struct DatasetStats {
  std::string name;
  std::size_t file_count = 0;
  double total_duration = 0.0;  // seconds
  std::size_t event_count = 0;  // all parsed events, any tag
  std::size_t pos_count = 0;
  std::size_t label_count = 0;  // distinct labels carrying a POS event
};

/// Recomputes statistics from the annotation files. Durations come from WAV
/// headers when the audio exists, else from the largest event offset.
/// Throws std::runtime_error naming the path of a missing annotation file.
std::vector<DatasetStats> manifest_stats(const CorpusManifest &manifest);

/// Reads and parses one annotation file, detecting its label mode from the
/// header.
FileAnnotations load_annotations(const std::filesystem::path &csv_path);

}  // namespace fsbed::corpus

#endif  // FSBED_CORPUS_H_
