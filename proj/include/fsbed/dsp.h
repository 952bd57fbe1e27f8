// include/fsbed/dsp.h

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

#ifndef FSBED_DSP_H_
#define FSBED_DSP_H_

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fsbed/matrix.h"
#include "fsbed/wav.h"

namespace fsbed::dsp {

/// Periodic Hann taper, hop and FFT size in samples.
struct SpectrogramConfig {
  std::size_t n_fft = 1024;
  std::size_t hop = 256;

  void validate() const;  // 0 < hop <= n_fft, n_fft a power of two
};

struct MelConfig {
  std::size_t bands = 128;
  double fmin = 50.0;
  double fmax = 11025.0;
};

/// Per-channel energy normalization constants.
struct PcenConfig {
  double smoothing = 0.025;  // s
  double gain = 0.98;        // alpha
  double bias = 2.0;         // delta
  double exponent = 0.5;     // r
  double floor = 1e-6;       // eps

  void validate() const;
};

enum class FeatureKind { kLogMel, kPcen, kMfccDelta };

std::string_view feature_kind_name(FeatureKind kind);
std::optional<FeatureKind> parse_feature_kind(std::string_view name);

/// Frames x bins feature matrix. Frame t is the time cell
/// [t * hop_seconds, (t + 1) * hop_seconds); its analysis window starts at
/// sample t * hop.
struct FeatureStack {
  Matrix matrix;
  double hop_seconds = 0.0;
  FeatureKind kind = FeatureKind::kLogMel;

  std::size_t frames() const { return matrix.rows(); }
  std::size_t bins() const { return matrix.cols(); }
  double end_seconds() const { return static_cast<double>(frames()) * hop_seconds; }
};

std::vector<double> hann_window(std::size_t n);

/// |STFT|, frames x (n_fft/2 + 1). Frame t covers samples
/// [t*hop, t*hop + n_fft). No padding; throws std::invalid_argument when the
/// signal is shorter than one frame.
Matrix stft_magnitude(const Waveform &wav, const SpectrogramConfig &cfg);

/// Triangular filters on the HTK mel scale, each row normalized to unit sum.
/// Stored sparsely: one contiguous run of FFT bins per band.
class MelFilterbank {
 public:
  MelFilterbank(std::size_t fft_bins, const MelConfig &cfg, int sample_rate);

  std::size_t bands() const { return first_.size(); }
  std::size_t fft_bins() const { return fft_bins_; }
  double weight(std::size_t band, std::size_t bin) const;
  Matrix dense() const;

  /// filterbank . power for each frame.
  Matrix apply(const Matrix &power) const;

 private:
  std::size_t fft_bins_;
  std::vector<std::size_t> first_;
  std::vector<std::vector<double>> weights_;
};

double hz_to_mel(double hz);
double mel_to_hz(double mel);

/// frames x bands = filterbank . (mag^2). Throws std::invalid_argument when
/// fmin >= fmax or fmax exceeds Nyquist.
Matrix mel_spectrogram(const Matrix &magnitude, const MelConfig &cfg, int sample_rate);

/// One PCEN output value for energy `e` against smoother state `m`.
double pcen_value(double e, double m, const PcenConfig &cfg);

/// M(t) = (1 - s) M(t-1) + s E(t), M(0) = E(0), applied per band.
FeatureStack pcen(const Matrix &mel, double hop_seconds, const PcenConfig &cfg);

inline constexpr double kLogFloor = 1e-10;

FeatureStack log_mel(const Matrix &mel, double hop_seconds);

/// Orthonormal DCT-II of log(mel + 1e-10), first `n_coeffs` kept, followed
/// by 9-point regression deltas with edge replication: [mfcc, delta] per frame.
FeatureStack mfcc_delta(const Matrix &mel, double hop_seconds, std::size_t n_coeffs);

/// Regression slope over +-`half_width` frames, rows replicated at the edges.
Matrix deltas(const Matrix &features, std::size_t half_width = 4);

struct FrameRange {
  std::size_t first = 0;
  std::size_t count = 0;
};

/// Frames whose cells overlap [t0, t1), clamped to the stack. When nothing
/// overlaps, the nearest single frame is returned.
FrameRange frame_range(const FeatureStack &features, double t0, double t1);

/// Per-bin mean then per-bin population standard deviation over
/// frame_range(t0, t1); length 2 * bins.
std::vector<double> pool_segment(const FeatureStack &features, double t0, double t1);

/// Everything the detectors need to turn audio into a FeatureStack.
struct FeatureConfig {
  int sample_rate = 22050;
  SpectrogramConfig stft;
  MelConfig mel;
  PcenConfig pcen;
  std::size_t mfcc_coeffs = 32;
  FeatureKind kind = FeatureKind::kPcen;

  void validate() const;
};

/// Resamples to cfg.sample_rate if needed, then STFT -> mel -> kind.
FeatureStack compute_features(const Waveform &wav, const FeatureConfig &cfg);

/// Debug dump: `<prefix>.bin` holds row-major float64 values, `<prefix>.json`
/// holds {frames, bins, hop_seconds, kind}.
void write_feature_dump(const FeatureStack &features, const std::filesystem::path &prefix);
FeatureStack read_feature_dump(const std::filesystem::path &prefix);

}  // namespace fsbed::dsp

#endif  // FSBED_DSP_H_
