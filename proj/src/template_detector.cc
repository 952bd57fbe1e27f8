// src/template_detector.cc

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

#include "fsbed/template_detector.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace fsbed::template_match {

void TemplateDetectorConfig::validate() const {
  if (!(threshold_alpha > 0.0)) throw std::invalid_argument("threshold_alpha must be positive");
  if (!(suppression_seconds >= 0.0))
    throw std::invalid_argument("suppression_seconds must be non-negative");
}

std::vector<Template> extract_templates(const dsp::FeatureStack &features,
                                        const FewShotTask &task) {
  std::vector<Template> out;
  for (std::size_t s = 0; s < task.shots.size(); ++s) {
    const Event &shot = task.shots[s];
    if (shot.onset >= features.end_seconds())
      throw std::invalid_argument("shot " + std::to_string(s + 1) + " starts after the features end");
    const dsp::FrameRange range = dsp::frame_range(features, shot.onset, shot.offset);
    Template t{features.matrix.slice_rows(range.first, range.count), shot.duration()};

    const auto values = t.matrix.data();
    const double mean = std::accumulate(values.begin(), values.end(), 0.0) / values.size();
    double var = 0.0;
    for (double v : values) var += (v - mean) * (v - mean);
    if (!(var > 1e-20))
      throw DegenerateTemplateError("shot " + std::to_string(s + 1) + " [" +
                                    std::to_string(shot.onset) + ", " +
                                    std::to_string(shot.offset) + "] has zero variance");
    out.push_back(std::move(t));
  }
  return out;
}

ScoreTrack ncc_score(const dsp::FeatureStack &features, const Template &tmpl) {
  const std::size_t t_frames = tmpl.matrix.rows();
  if (t_frames == 0 || tmpl.matrix.cols() != features.bins())
    throw std::invalid_argument("template shape does not match the features");
  if (t_frames > features.frames())
    throw std::invalid_argument("template longer than the feature matrix");

  const auto t_values = tmpl.matrix.data();
  const std::size_t n = t_values.size();
  const double t_mean = std::accumulate(t_values.begin(), t_values.end(), 0.0) / n;
  std::vector<double> centered(n);
  double t_norm2 = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    centered[i] = t_values[i] - t_mean;
    t_norm2 += centered[i] * centered[i];
  }

  ScoreTrack track;
  track.hop_seconds = features.hop_seconds;
  const std::size_t lags = features.frames() - t_frames + 1;
  track.scores.assign(lags, 0.0);
  if (!(t_norm2 > 0.0)) return track;

  const auto f_values = features.matrix.data();
  const std::size_t bins = features.bins();
  for (std::size_t lag = 0; lag < lags; ++lag) {
    const double *w = f_values.data() + lag * bins;
    double sum = 0.0, sumsq = 0.0, cross = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      sum += w[i];
      sumsq += w[i] * w[i];
      cross += centered[i] * w[i];
    }
    const double w_var = sumsq - sum * sum / static_cast<double>(n);
    if (!(w_var > 1e-12 * sumsq) || !(w_var > 0.0)) continue;  // constant window
    track.scores[lag] = std::clamp(cross / std::sqrt(t_norm2 * w_var), -1.0, 1.0);
  }
  return track;
}

ScoreTrack fuse_tracks(std::span<const ScoreTrack> tracks) {
  if (tracks.empty()) throw std::invalid_argument("no score tracks to fuse");
  ScoreTrack out;
  out.hop_seconds = tracks.front().hop_seconds;
  out.t0 = tracks.front().t0;
  std::size_t len = tracks.front().scores.size();
  for (const auto &t : tracks) {
    if (std::abs(t.hop_seconds - out.hop_seconds) > 1e-12)
      throw std::invalid_argument("score tracks have different hops");
    len = std::min(len, t.scores.size());
  }
  out.scores.assign(tracks.front().scores.begin(),
                    tracks.front().scores.begin() + static_cast<std::ptrdiff_t>(len));
  for (const auto &t : tracks.subspan(1))
    for (std::size_t i = 0; i < len; ++i) out.scores[i] = std::max(out.scores[i], t.scores[i]);
  return out;
}

std::vector<Event> pick_events(const ScoreTrack &track, const TemplateDetectorConfig &cfg,
                               const FewShotTask &task) {
  cfg.validate();
  const auto &s = track.scores;
  if (s.empty()) return {};
  const double n = static_cast<double>(s.size());
  const double mean = std::accumulate(s.begin(), s.end(), 0.0) / n;
  double var = 0.0;
  for (double v : s) var += (v - mean) * (v - mean);
  const double sd = std::sqrt(var / n);
  // A flat track has nothing above its mean; guard against round-off in it.
  if (!(sd > 1e-12 * std::max(1.0, std::abs(mean)))) return {};
  const double threshold = mean + cfg.threshold_alpha * sd;

  const double h = track.hop_seconds;
  const double d = task.median_shot_duration();
  const auto centre = [&](std::size_t i) { return track.t0 + static_cast<double>(i) * h + 0.5 * d; };

  struct Candidate {
    Event event;
    double peak;
  };
  std::vector<Candidate> candidates;
  for (std::size_t i = 0; i < s.size();) {
    if (!(s[i] > threshold)) {
      ++i;
      continue;
    }
    std::size_t end = i, peak = i;
    while (end < s.size() && s[end] > threshold) {
      if (s[end] > s[peak]) peak = end;
      ++end;
    }
    double onset = centre(i) - 0.5 * h;
    double offset = centre(end - 1) + 0.5 * h;
    if (offset - onset < d) {
      onset = centre(peak) - 0.5 * d;
      offset = centre(peak) + 0.5 * d;
    }
    if (onset >= task.query_start)
      candidates.push_back({Event{onset, offset, task.class_label.empty() ? "POS" : task.class_label,
                                  corpus::Tag::kPos},
                            s[peak]});
    i = end;
  }

  // Events closer than the suppression distance (overlapping ones included)
  // collapse onto the one with the higher peak.
  std::vector<std::size_t> order(candidates.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return candidates[a].peak > candidates[b].peak;
  });
  std::vector<Event> kept;
  for (std::size_t idx : order) {
    const Event &e = candidates[idx].event;
    const bool suppressed = std::any_of(kept.begin(), kept.end(), [&](const Event &k) {
      const double gap = std::max(e.onset, k.onset) - std::min(e.offset, k.offset);
      return gap < cfg.suppression_seconds;
    });
    if (!suppressed) kept.push_back(e);
  }
  std::sort(kept.begin(), kept.end(), corpus::onset_less);
  return kept;
}

std::vector<Event> detect(const dsp::FeatureStack &features, const FewShotTask &task,
                          const TemplateDetectorConfig &cfg) {
  cfg.validate();
  const auto templates = extract_templates(features, task);
  std::vector<ScoreTrack> tracks;
  tracks.reserve(templates.size());
  for (const auto &t : templates) tracks.push_back(ncc_score(features, t));
  return pick_events(fuse_tracks(tracks), cfg, task);
}

}  // namespace fsbed::template_match
