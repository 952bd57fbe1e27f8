// include/fsbed/template_detector.h

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

#ifndef FSBED_TEMPLATE_DETECTOR_H_
#define FSBED_TEMPLATE_DETECTOR_H_

#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

#include "fsbed/corpus.h"
#include "fsbed/dsp.h"
#include "fsbed/matrix.h"

namespace fsbed::template_match {

using corpus::Event;
using corpus::FewShotTask;

struct Template {
  Matrix matrix;  // frames x bins excerpt
  double duration_seconds = 0.0;
};

/// Normalized cross-correlation over time lag. scores[i] compares the
/// template with the feature window starting at frame i; t0 is the time of
/// scores[0] (the start of the first window).
struct ScoreTrack {
  std::vector<double> scores;
  double hop_seconds = 0.0;
  double t0 = 0.0;
};

struct TemplateDetectorConfig {
  double threshold_alpha = 2.0;      // threshold = mean + alpha * std
  double suppression_seconds = 0.1;  // keep one of two events closer than this
  dsp::FeatureKind feature_kind = dsp::FeatureKind::kPcen;

  void validate() const;
};

class DegenerateTemplateError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// One template per shot covering the frames that overlap [onset, offset).
/// Throws DegenerateTemplateError for a constant excerpt and
/// std::invalid_argument for a shot outside the feature range.
std::vector<Template> extract_templates(const dsp::FeatureStack &features,
                                        const FewShotTask &task);

/// Pearson correlation of the flattened template against every equally
/// shaped window; constant windows score 0. Length frames - template + 1.
ScoreTrack ncc_score(const dsp::FeatureStack &features, const Template &tmpl);

/// Pointwise maximum, trimmed to the shortest track.
ScoreTrack fuse_tracks(std::span<const ScoreTrack> tracks);

/// Thresholds the fused track into events.
///
/// Scores are placed at window centres, i.e. time t0 + i*hop + d/2 with d the
/// median shot duration. Each maximal run above the threshold becomes an
/// event; runs shorter than d are widened to d around the run's peak. Events
/// starting before the query start are dropped. Of two events closer than the
/// suppression distance (or overlapping), only the one with the higher peak
/// score survives.
std::vector<Event> pick_events(const ScoreTrack &track, const TemplateDetectorConfig &cfg,
                               const FewShotTask &task);

/// extract_templates -> ncc_score -> fuse_tracks -> pick_events.
std::vector<Event> detect(const dsp::FeatureStack &features, const FewShotTask &task,
                          const TemplateDetectorConfig &cfg);

}  // namespace fsbed::template_match

#endif  // FSBED_TEMPLATE_DETECTOR_H_
