// include/fsbed/synth.h

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

#ifndef FSBED_SYNTH_H_
#define FSBED_SYNTH_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "fsbed/corpus.h"
#include "fsbed/wav.h"

namespace fsbed::synth {

enum class SignalKind { kTone, kChirp };
enum class NoiseKind { kWhite, kPink };

/// One call type. Tones pick a fixed frequency in [freq_low, freq_high] per
/// event; chirps sweep linearly from freq_low to freq_high, in either direction.
struct SynthClass {
  std::string name;
  SignalKind kind = SignalKind::kTone;
  double freq_low = 1000.0;
  double freq_high = 1100.0;
  double min_duration = 0.2;
  double max_duration = 0.5;
  double rate_per_minute = 8.0;
};

/// Parses "name:tone|chirp:f_lo:f_hi:dur_min:dur_max:rate".
SynthClass parse_class(std::string_view text);

struct SynthSpec {
  std::size_t files = 5;
  double file_duration = 120.0;  // seconds
  std::vector<SynthClass> classes;
  double snr_db = 20.0;          // event RMS over noise RMS
  NoiseKind noise = NoiseKind::kWhite;
  std::uint64_t seed = 0;
  int sample_rate = 22050;
  /// Single-label corpora annotate only classes[0]; the other classes are
  /// still audible but unannotated. Multi-label corpora annotate every class.
  corpus::LabelMode mode = corpus::LabelMode::kSingleLabel;
  std::string dataset = "synth";
  std::string file_prefix = "file";

  void validate() const;
};

inline constexpr double kNoiseRms = 0.05;

struct PlantedEvent {
  std::size_t class_index = 0;
  double onset = 0.0;   // seconds, on the sample grid
  double offset = 0.0;
};

struct SynthFile {
  std::string audio_id;        // "<prefix>_<index>.wav"
  dsp::Waveform waveform;
  std::vector<PlantedEvent> events;  // sorted by onset
};

/// Fully determined by (spec, index).
SynthFile synthesize_file(const SynthSpec &spec, std::size_t index);

/// CSV text in the annotation schema for `file` under `spec.mode`.
std::string annotation_csv(const SynthSpec &spec, const SynthFile &file);

/// Writes `<out_dir>/<dataset>/<prefix>_<i>.wav|.csv` for every file and
/// returns the dataset directory.
std::filesystem::path write_corpus(const SynthSpec &spec, const std::filesystem::path &out_dir);

}  // namespace fsbed::synth

#endif  // FSBED_SYNTH_H_
