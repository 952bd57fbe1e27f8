// src/dsp.cc

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

#include "fsbed/dsp.h"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <mutex>
#include <numbers>
#include <stdexcept>

#include "json.hpp"

namespace fsbed::dsp {

namespace {

// FFTW's planner is not reentrant; executing an existing plan is.
std::mutex &fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

class RealFft {
 public:
  explicit RealFft(std::size_t n)
      : n_(n),
        in_(fftw_alloc_real(n)),
        out_(fftw_alloc_complex(n / 2 + 1)) {
    std::lock_guard<std::mutex> lock(fftw_planner_mutex());
    plan_ = fftw_plan_dft_r2c_1d(static_cast<int>(n), in_, out_, FFTW_ESTIMATE);
  }
  ~RealFft() {
    std::lock_guard<std::mutex> lock(fftw_planner_mutex());
    fftw_destroy_plan(plan_);
    fftw_free(in_);
    fftw_free(out_);
  }
  RealFft(const RealFft &) = delete;
  RealFft &operator=(const RealFft &) = delete;

  std::span<double> input() { return {in_, n_}; }
  void execute() { fftw_execute(plan_); }
  double magnitude(std::size_t k) const { return std::hypot(out_[k][0], out_[k][1]); }

 private:
  std::size_t n_;
  double *in_;
  fftw_complex *out_;
  fftw_plan plan_;
};

bool is_power_of_two(std::size_t n) { return n > 0 && (n & (n - 1)) == 0; }

}  // namespace

void SpectrogramConfig::validate() const {
  if (!is_power_of_two(n_fft)) throw std::invalid_argument("n_fft must be a power of two");
  if (hop == 0 || hop > n_fft) throw std::invalid_argument("hop must be in (0, n_fft]");
}

void PcenConfig::validate() const {
  if (!(smoothing > 0.0 && smoothing <= 1.0))
    throw std::invalid_argument("pcen smoothing must be in (0, 1]");
  if (!(gain > 0.0 && gain <= 1.0)) throw std::invalid_argument("pcen gain must be in (0, 1]");
  if (!(bias > 0.0)) throw std::invalid_argument("pcen bias must be positive");
  if (!(exponent > 0.0 && exponent <= 1.0))
    throw std::invalid_argument("pcen exponent must be in (0, 1]");
  if (!(floor > 0.0)) throw std::invalid_argument("pcen floor must be positive");
}

std::string_view feature_kind_name(FeatureKind kind) {
  switch (kind) {
    case FeatureKind::kLogMel: return "logmel";
    case FeatureKind::kPcen: return "pcen";
    case FeatureKind::kMfccDelta: return "mfcc_delta";
  }
  return "logmel";
}

std::optional<FeatureKind> parse_feature_kind(std::string_view name) {
  if (name == "logmel") return FeatureKind::kLogMel;
  if (name == "pcen") return FeatureKind::kPcen;
  if (name == "mfcc_delta") return FeatureKind::kMfccDelta;
  return std::nullopt;
}

std::vector<double> hann_window(std::size_t n) {
  std::vector<double> w(n);
  for (std::size_t i = 0; i < n; ++i)
    w[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) / n);
  return w;
}

Matrix stft_magnitude(const Waveform &wav, const SpectrogramConfig &cfg) {
  cfg.validate();
  if (wav.samples.size() < cfg.n_fft)
    throw std::invalid_argument("signal shorter than one frame (" +
                                std::to_string(wav.samples.size()) + " < " +
                                std::to_string(cfg.n_fft) + " samples)");
  const std::size_t frames = 1 + (wav.samples.size() - cfg.n_fft) / cfg.hop;
  const std::size_t bins = cfg.n_fft / 2 + 1;
  const auto window = hann_window(cfg.n_fft);

  Matrix out(frames, bins);
  RealFft fft(cfg.n_fft);
  auto in = fft.input();
  for (std::size_t t = 0; t < frames; ++t) {
    const double *frame = wav.samples.data() + t * cfg.hop;
    for (std::size_t i = 0; i < cfg.n_fft; ++i) in[i] = frame[i] * window[i];
    fft.execute();
    auto row = out.row(t);
    for (std::size_t k = 0; k < bins; ++k) row[k] = fft.magnitude(k);
  }
  return out;
}

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

MelFilterbank::MelFilterbank(std::size_t fft_bins, const MelConfig &cfg, int sample_rate)
    : fft_bins_(fft_bins) {
  if (fft_bins < 2) throw std::invalid_argument("need at least two FFT bins");
  if (cfg.bands == 0) throw std::invalid_argument("need at least one mel band");
  if (!(cfg.fmin >= 0.0 && cfg.fmin < cfg.fmax))
    throw std::invalid_argument("mel fmin must be >= 0 and below fmax");
  if (cfg.fmax > sample_rate / 2.0 + 1e-9)
    throw std::invalid_argument("mel fmax exceeds the Nyquist frequency");

  const std::size_t n_fft = (fft_bins - 1) * 2;
  const double bin_hz = static_cast<double>(sample_rate) / static_cast<double>(n_fft);
  const double mel_lo = hz_to_mel(cfg.fmin);
  const double mel_hi = hz_to_mel(cfg.fmax);
  std::vector<double> edges(cfg.bands + 2);
  for (std::size_t i = 0; i < edges.size(); ++i)
    edges[i] = mel_to_hz(mel_lo + (mel_hi - mel_lo) * static_cast<double>(i) /
                                      static_cast<double>(cfg.bands + 1));

  first_.resize(cfg.bands);
  weights_.resize(cfg.bands);
  for (std::size_t b = 0; b < cfg.bands; ++b) {
    const double lo = edges[b], center = edges[b + 1], hi = edges[b + 2];
    std::vector<double> raw(fft_bins, 0.0);
    double sum = 0.0;
    for (std::size_t k = 0; k < fft_bins; ++k) {
      const double f = static_cast<double>(k) * bin_hz;
      double w = 0.0;
      if (f > lo && f <= center) w = (f - lo) / (center - lo);
      else if (f > center && f < hi) w = (hi - f) / (hi - center);
      raw[k] = w;
      sum += w;
    }
    if (sum <= 0.0) {
      // Band narrower than the bin spacing: give it the bin nearest its center.
      const auto k = std::min(static_cast<std::size_t>(std::lround(center / bin_hz)), fft_bins - 1);
      raw[k] = 1.0;
      sum = 1.0;
    }
    std::size_t first = 0;
    while (raw[first] == 0.0) ++first;
    std::size_t last = fft_bins - 1;
    while (raw[last] == 0.0) --last;
    first_[b] = first;
    for (std::size_t k = first; k <= last; ++k) weights_[b].push_back(raw[k] / sum);
  }
}

double MelFilterbank::weight(std::size_t band, std::size_t bin) const {
  const std::size_t first = first_.at(band);
  if (bin < first || bin >= first + weights_[band].size()) return 0.0;
  return weights_[band][bin - first];
}

Matrix MelFilterbank::dense() const {
  Matrix out(bands(), fft_bins_);
  for (std::size_t b = 0; b < bands(); ++b)
    for (std::size_t i = 0; i < weights_[b].size(); ++i) out(b, first_[b] + i) = weights_[b][i];
  return out;
}

Matrix MelFilterbank::apply(const Matrix &power) const {
  if (power.cols() != fft_bins_) throw std::invalid_argument("filterbank/spectrum size mismatch");
  Matrix out(power.rows(), bands());
  for (std::size_t t = 0; t < power.rows(); ++t) {
    const auto in = power.row(t);
    auto row = out.row(t);
    for (std::size_t b = 0; b < bands(); ++b) {
      double acc = 0.0;
      const auto &w = weights_[b];
      for (std::size_t i = 0; i < w.size(); ++i) acc += w[i] * in[first_[b] + i];
      row[b] = acc;
    }
  }
  return out;
}

Matrix mel_spectrogram(const Matrix &magnitude, const MelConfig &cfg, int sample_rate) {
  const MelFilterbank fb(magnitude.cols(), cfg, sample_rate);
  Matrix power = magnitude;
  for (double &v : power.data()) v *= v;
  return fb.apply(power);
}

double pcen_value(double e, double m, const PcenConfig &cfg) {
  return std::pow(e / std::pow(cfg.floor + m, cfg.gain) + cfg.bias, cfg.exponent) -
         std::pow(cfg.bias, cfg.exponent);
}

FeatureStack pcen(const Matrix &mel, double hop_seconds, const PcenConfig &cfg) {
  cfg.validate();
  FeatureStack out{Matrix(mel.rows(), mel.cols()), hop_seconds, FeatureKind::kPcen};
  if (mel.rows() == 0) return out;
  std::vector<double> smoother(mel.row(0).begin(), mel.row(0).end());
  for (std::size_t t = 0; t < mel.rows(); ++t) {
    const auto e = mel.row(t);
    auto row = out.matrix.row(t);
    for (std::size_t b = 0; b < mel.cols(); ++b) {
      if (t > 0) smoother[b] = (1.0 - cfg.smoothing) * smoother[b] + cfg.smoothing * e[b];
      row[b] = pcen_value(std::max(e[b], 0.0), std::max(smoother[b], 0.0), cfg);
    }
  }
  return out;
}

FeatureStack log_mel(const Matrix &mel, double hop_seconds) {
  FeatureStack out{mel, hop_seconds, FeatureKind::kLogMel};
  for (double &v : out.matrix.data()) v = std::log(std::max(v, 0.0) + kLogFloor);
  return out;
}

Matrix deltas(const Matrix &features, std::size_t half_width) {
  Matrix out(features.rows(), features.cols());
  if (features.rows() == 0 || half_width == 0) return out;
  double norm = 0.0;
  for (std::size_t n = 1; n <= half_width; ++n) norm += static_cast<double>(n * n);
  norm *= 2.0;
  const auto last = static_cast<std::ptrdiff_t>(features.rows()) - 1;
  const auto clamp_row = [last](std::ptrdiff_t t) {
    return static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(t, 0, last));
  };
  for (std::ptrdiff_t t = 0; t <= last; ++t) {
    auto row = out.row(static_cast<std::size_t>(t));
    for (std::size_t n = 1; n <= half_width; ++n) {
      const auto ahead = features.row(clamp_row(t + static_cast<std::ptrdiff_t>(n)));
      const auto behind = features.row(clamp_row(t - static_cast<std::ptrdiff_t>(n)));
      for (std::size_t c = 0; c < features.cols(); ++c)
        row[c] += static_cast<double>(n) * (ahead[c] - behind[c]);
    }
    for (double &v : row) v /= norm;
  }
  return out;
}

FeatureStack mfcc_delta(const Matrix &mel, double hop_seconds, std::size_t n_coeffs) {
  const std::size_t bands = mel.cols();
  if (n_coeffs == 0 || n_coeffs > bands)
    throw std::invalid_argument("mfcc coefficient count must be in [1, mel bands]");
  Matrix dct(n_coeffs, bands);
  for (std::size_t k = 0; k < n_coeffs; ++k) {
    const double scale = std::sqrt((k == 0 ? 1.0 : 2.0) / static_cast<double>(bands));
    for (std::size_t n = 0; n < bands; ++n)
      dct(k, n) = scale * std::cos(std::numbers::pi * static_cast<double>(k) *
                                   (2.0 * static_cast<double>(n) + 1.0) /
                                   (2.0 * static_cast<double>(bands)));
  }
  Matrix cep(mel.rows(), n_coeffs);
  std::vector<double> logs(bands);
  for (std::size_t t = 0; t < mel.rows(); ++t) {
    const auto in = mel.row(t);
    for (std::size_t n = 0; n < bands; ++n) logs[n] = std::log(std::max(in[n], 0.0) + kLogFloor);
    for (std::size_t k = 0; k < n_coeffs; ++k) {
      double acc = 0.0;
      for (std::size_t n = 0; n < bands; ++n) acc += dct(k, n) * logs[n];
      cep(t, k) = acc;
    }
  }
  const Matrix d = deltas(cep);
  FeatureStack out{Matrix(mel.rows(), 2 * n_coeffs), hop_seconds, FeatureKind::kMfccDelta};
  for (std::size_t t = 0; t < mel.rows(); ++t) {
    auto row = out.matrix.row(t);
    std::copy(cep.row(t).begin(), cep.row(t).end(), row.begin());
    std::copy(d.row(t).begin(), d.row(t).end(), row.begin() + static_cast<std::ptrdiff_t>(n_coeffs));
  }
  return out;
}

FrameRange frame_range(const FeatureStack &features, double t0, double t1) {
  const std::size_t frames = features.frames();
  if (frames == 0) throw std::invalid_argument("empty feature stack");
  const double h = features.hop_seconds;
  const auto nearest = [&](double t) {
    const double idx = std::floor(t / h);
    return static_cast<std::size_t>(std::clamp(idx, 0.0, static_cast<double>(frames - 1)));
  };
  if (t1 - t0 < h) return {nearest(0.5 * (t0 + t1)), 1};

  constexpr double kSlack = 1e-9;  // absorbs t = k*h round-off
  const double first = std::max(0.0, std::floor(t0 / h + kSlack));
  const double end = std::min(static_cast<double>(frames), std::ceil(t1 / h - kSlack));
  if (end <= first) return {nearest(0.5 * (t0 + t1)), 1};
  return {static_cast<std::size_t>(first), static_cast<std::size_t>(end - first)};
}

std::vector<double> pool_segment(const FeatureStack &features, double t0, double t1) {
  const FrameRange range = frame_range(features, t0, t1);
  const std::size_t bins = features.bins();
  std::vector<double> out(2 * bins, 0.0);
  for (std::size_t t = range.first; t < range.first + range.count; ++t) {
    const auto row = features.matrix.row(t);
    for (std::size_t b = 0; b < bins; ++b) out[b] += row[b];
  }
  const double n = static_cast<double>(range.count);
  for (std::size_t b = 0; b < bins; ++b) out[b] /= n;
  for (std::size_t t = range.first; t < range.first + range.count; ++t) {
    const auto row = features.matrix.row(t);
    for (std::size_t b = 0; b < bins; ++b) {
      const double d = row[b] - out[b];
      out[bins + b] += d * d;
    }
  }
  for (std::size_t b = 0; b < bins; ++b) out[bins + b] = std::sqrt(out[bins + b] / n);
  return out;
}

void FeatureConfig::validate() const {
  if (sample_rate <= 0) throw std::invalid_argument("sample rate must be positive");
  stft.validate();
  if (mel.bands == 0) throw std::invalid_argument("mel band count must be positive");
  if (!(mel.fmin >= 0.0 && mel.fmin < mel.fmax))
    throw std::invalid_argument("mel fmin must be >= 0 and below fmax");
  if (mel.fmax > sample_rate / 2.0 + 1e-9)
    throw std::invalid_argument("mel fmax exceeds the Nyquist frequency");
  pcen.validate();
  if (kind == FeatureKind::kMfccDelta && (mfcc_coeffs == 0 || mfcc_coeffs > mel.bands))
    throw std::invalid_argument("mfcc coefficient count must be in [1, mel bands]");
}

FeatureStack compute_features(const Waveform &wav, const FeatureConfig &cfg) {
  cfg.validate();
  const Waveform resampled =
      wav.sample_rate == cfg.sample_rate ? wav : resample_linear(wav, cfg.sample_rate);
  const Matrix mag = stft_magnitude(resampled, cfg.stft);
  const Matrix mel = mel_spectrogram(mag, cfg.mel, cfg.sample_rate);
  const double hop_seconds = static_cast<double>(cfg.stft.hop) / cfg.sample_rate;
  switch (cfg.kind) {
    case FeatureKind::kLogMel: return log_mel(mel, hop_seconds);
    case FeatureKind::kPcen: return pcen(mel, hop_seconds, cfg.pcen);
    case FeatureKind::kMfccDelta: return mfcc_delta(mel, hop_seconds, cfg.mfcc_coeffs);
  }
  throw std::logic_error("unhandled feature kind");
}

void write_feature_dump(const FeatureStack &features, const std::filesystem::path &prefix) {
  auto bin_path = prefix;
  bin_path += ".bin";
  auto json_path = prefix;
  json_path += ".json";
  std::ofstream bin(bin_path, std::ios::binary);
  if (!bin) throw std::runtime_error("cannot write " + bin_path.string());
  const auto data = features.matrix.data();
  bin.write(reinterpret_cast<const char *>(data.data()),
            static_cast<std::streamsize>(data.size() * sizeof(double)));
  nlohmann::json meta = {{"frames", features.frames()},
                         {"bins", features.bins()},
                         {"hop_seconds", features.hop_seconds},
                         {"kind", feature_kind_name(features.kind)}};
  std::ofstream js(json_path);
  if (!js) throw std::runtime_error("cannot write " + json_path.string());
  js << meta.dump(2) << '\n';
}

FeatureStack read_feature_dump(const std::filesystem::path &prefix) {
  auto bin_path = prefix;
  bin_path += ".bin";
  auto json_path = prefix;
  json_path += ".json";
  std::ifstream js(json_path);
  if (!js) throw std::runtime_error("cannot open " + json_path.string());
  const auto meta = nlohmann::json::parse(js);
  const auto kind = parse_feature_kind(meta.at("kind").get<std::string>());
  if (!kind) throw std::runtime_error("unknown feature kind in " + json_path.string());
  FeatureStack out{Matrix(meta.at("frames").get<std::size_t>(), meta.at("bins").get<std::size_t>()),
                   meta.at("hop_seconds").get<double>(), *kind};
  std::ifstream bin(bin_path, std::ios::binary);
  auto data = out.matrix.data();
  bin.read(reinterpret_cast<char *>(data.data()),
           static_cast<std::streamsize>(data.size() * sizeof(double)));
  if (!bin) throw std::runtime_error("truncated feature dump " + bin_path.string());
  return out;
}

}  // namespace fsbed::dsp
