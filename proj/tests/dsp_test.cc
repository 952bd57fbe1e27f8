// tests/dsp_test.cc

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

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <cstring>
#include <numbers>
#include <random>

#include "doctest.h"
#include "test_support.h"

using namespace fsbed;
using namespace fsbed::dsp;

namespace {

// Minimal RIFF writer for hand-built fixtures.
std::string raw_wav(std::uint16_t format, std::uint16_t channels, std::uint16_t bits, std::uint32_t rate,
                    const std::string &data, std::uint32_t claimed_data_size) {
  std::string out;
  const auto u32 = [&out](std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
  };
  const auto u16 = [&out](std::uint16_t v) {
    out.push_back(static_cast<char>(v & 0xff));
    out.push_back(static_cast<char>(v >> 8));
  };
  out += "RIFF";
  u32(static_cast<std::uint32_t>(36 + data.size()));
  out += "WAVEfmt ";
  u32(16);
  u16(format);
  u16(channels);
  u32(rate);
  u32(rate * channels * bits / 8);
  u16(static_cast<std::uint16_t>(channels * bits / 8));
  u16(bits);
  out += "data";
  u32(claimed_data_size);
  out += data;
  return out;
}

std::string int32_samples(const std::vector<std::int32_t> &v) {
  std::string s(v.size() * 4, '\0');
  std::memcpy(s.data(), v.data(), s.size());
  return s;
}

std::vector<double> noise(std::size_t n, unsigned seed, double scale = 0.3) {
  std::mt19937 rng(seed);
  std::normal_distribution<double> d(0.0, scale);
  std::vector<double> x(n);
  for (double &v : x) v = std::clamp(d(rng), -1.0, 1.0);
  return x;
}

FeatureStack stack(const std::vector<std::vector<double>> &rows, double hop) {
  Matrix m(rows.size(), rows.empty() ? 0 : rows[0].size());
  for (std::size_t t = 0; t < rows.size(); ++t)
    for (std::size_t b = 0; b < rows[t].size(); ++b) m(t, b) = rows[t][b];
  return FeatureStack{m, hop, FeatureKind::kLogMel};
}

bool all_finite(const Matrix &m) {
  return std::all_of(m.data().begin(), m.data().end(), [](double v) { return std::isfinite(v); });
}

}  // namespace

// WAV ---------------------------------------------------------------------

TEST_CASE("16-bit silence loads as zeros") {
  testing::TempDir dir("wav");
  write_wav_pcm16(dir / "z.wav", std::vector<double>(1000, 0.0), 22050);
  const auto wav = load_wav(dir / "z.wav");
  CHECK(wav.sample_rate == 22050);
  REQUIRE(wav.samples.size() == 1000);
  CHECK(std::all_of(wav.samples.begin(), wav.samples.end(), [](double v) { return v == 0.0; }));
}

TEST_CASE("16-bit full scale is 32767/32768") {
  testing::TempDir dir("wav");
  write_wav_pcm16(dir / "f.wav", std::vector<double>(64, 1.0), 8000);
  const auto wav = load_wav(dir / "f.wav");
  const double expected = 32767.0 / 32768.0;  // 0.999969482421875
  for (double v : wav.samples) CHECK(v == expected);
}

TEST_CASE("stereo channels x and -x average to silence") {
  testing::TempDir dir("wav");
  auto x = noise(500, 1);
  std::vector<double> neg(x.size());
  std::transform(x.begin(), x.end(), neg.begin(), [](double v) { return -v; });
  write_wav_pcm16(dir / "s.wav", std::vector<std::vector<double>>{x, neg}, 16000);
  const auto info = read_wav_info(dir / "s.wav");
  CHECK(info.channels == 2);
  const auto wav = load_wav(dir / "s.wav");
  REQUIRE(wav.samples.size() == 500);
  for (double v : wav.samples) CHECK(v == 0.0);
}

TEST_CASE("32-bit integer and float PCM") {
  testing::TempDir dir("wav");
  const std::vector<std::int32_t> ints{0, 1 << 30, -(1 << 30), INT32_MIN};
  testing::write_text(dir / "i32.wav", raw_wav(1, 1, 32, 8000, int32_samples(ints), 16));
  const auto wav = load_wav(dir / "i32.wav");
  REQUIRE(wav.samples.size() == 4);
  CHECK(wav.samples[0] == 0.0);
  CHECK(wav.samples[1] == 0.5);
  CHECK(wav.samples[2] == -0.5);
  CHECK(wav.samples[3] == -1.0);

  const std::vector<double> f{0.25, -0.75, 0.5};
  write_wav_float32(dir / "f32.wav", f, 44100);
  const auto back = load_wav(dir / "f32.wav");
  CHECK(back.sample_rate == 44100);
  CHECK(back.samples == f);
}

TEST_CASE("truncated and unsupported WAV files are rejected") {
  testing::TempDir dir("wav");
  const std::string four_samples = int32_samples({1, 2, 3, 4});
  testing::write_text(dir / "trunc.wav", raw_wav(1, 1, 16, 8000, four_samples, 4000));
  CHECK_THROWS_AS(load_wav(dir / "trunc.wav"), WavError);
  testing::write_text(dir / "adpcm.wav", raw_wav(2, 1, 4, 8000, four_samples, 16));
  CHECK_THROWS_AS(load_wav(dir / "adpcm.wav"), WavError);
  testing::write_text(dir / "short.wav", "RIFF");
  CHECK_THROWS_AS(load_wav(dir / "short.wav"), WavError);
  testing::write_text(dir / "text.wav", std::string(64, 'x'));
  CHECK_THROWS_AS(load_wav(dir / "text.wav"), WavError);
  CHECK_THROWS_AS(load_wav(dir / "absent.wav"), WavError);
}

TEST_CASE("linear resampling") {
  Waveform w{{0.0, 1.0, 2.0, 3.0}, 4};
  CHECK(resample_linear(w, 4).samples == w.samples);
  const auto up = resample_linear(w, 8);
  CHECK(up.sample_rate == 8);
  CHECK(up.samples[0] == 0.0);
  CHECK(up.samples[1] == doctest::Approx(0.5));
  CHECK(up.samples[2] == doctest::Approx(1.0));
  CHECK_THROWS_AS(resample_linear(w, 0), std::invalid_argument);
}

// STFT --------------------------------------------------------------------

TEST_CASE("STFT of silence is zero") {
  const Waveform w{std::vector<double>(4096, 0.0), 22050};
  const auto mag = stft_magnitude(w, {});
  CHECK(mag.rows() == 1 + (4096 - 1024) / 256);
  CHECK(mag.cols() == 513);
  for (double v : mag.data()) CHECK(v == 0.0);
}

TEST_CASE("STFT configuration errors") {
  const Waveform w{std::vector<double>(1023, 0.1), 22050};
  CHECK_THROWS_AS(stft_magnitude(w, {}), std::invalid_argument);
  const Waveform ok{std::vector<double>(2048, 0.1), 22050};
  CHECK_THROWS_AS(stft_magnitude(ok, SpectrogramConfig{1000, 256}), std::invalid_argument);
  CHECK_THROWS_AS(stft_magnitude(ok, SpectrogramConfig{1024, 0}), std::invalid_argument);
  CHECK_THROWS_AS(stft_magnitude(ok, SpectrogramConfig{1024, 2048}), std::invalid_argument);
}

TEST_CASE("sine on a bin centre peaks at that bin and matches a direct DFT") {
  const std::size_t n = 1024, k = 37;
  const int sr = 22050;
  std::vector<double> x(20 * n);
  for (std::size_t i = 0; i < x.size(); ++i)
    x[i] = 0.5 * std::sin(2.0 * std::numbers::pi * static_cast<double>(k * i) / n + 0.3);
  const auto mag = stft_magnitude(Waveform{x, sr}, SpectrogramConfig{n, 256});
  for (std::size_t t = 0; t < mag.rows(); ++t) {
    const auto row = mag.row(t);
    CHECK(static_cast<std::size_t>(std::max_element(row.begin(), row.end()) - row.begin()) == k);
  }

  // Oracle: direct O(N^2) DFT of frame 3.
  const std::size_t t = 3;
  const auto w = hann_window(n);
  for (std::size_t bin = 0; bin <= n / 2; bin += 7) {
    std::complex<double> acc = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      acc += x[t * 256 + i] * w[i] *
             std::polar(1.0, -2.0 * std::numbers::pi * static_cast<double>(bin * i % n) / n);
    CHECK(mag(t, bin) == doctest::Approx(std::abs(acc)).epsilon(1e-9).scale(1.0));
  }
}

TEST_CASE("impulse at the frame centre has a flat spectrum equal to w(N/2)") {
  const std::size_t n = 512;
  std::vector<double> x(n, 0.0);
  x[n / 2] = 1.0;
  const auto w = hann_window(n);
  CHECK(w[n / 2] == 1.0);
  const auto mag = stft_magnitude(Waveform{x, 16000}, SpectrogramConfig{n, 128});
  REQUIRE(mag.rows() == 1);
  for (double v : mag.data()) CHECK(v == doctest::Approx(w[n / 2]).epsilon(1e-12));
}

TEST_CASE("Parseval: per-frame identity and overlap-corrected total energy") {
  const std::size_t n = 1024, hop = 256;
  const auto x = noise(22050 * 20, 7);
  const auto mag = stft_magnitude(Waveform{x, 22050}, SpectrogramConfig{n, hop});
  const auto w = hann_window(n);

  // One frame, exact up to round-off: N * sum (x w)^2 = |X0|^2 + 2 sum |Xk|^2 + |X_{N/2}|^2.
  for (std::size_t t : {0u, 100u, 700u}) {
    double time_energy = 0.0;
    for (std::size_t i = 0; i < n; ++i) time_energy += std::pow(x[t * hop + i] * w[i], 2);
    double spec = 0.0;
    for (std::size_t k = 0; k <= n / 2; ++k)
      spec += (k == 0 || k == n / 2 ? 1.0 : 2.0) * mag(t, k) * mag(t, k);
    CHECK(spec / n == doctest::Approx(time_energy).epsilon(1e-9));
  }

  // All frames: Hann^2 summed over hops of N/4 covers each sample 3N/(8 hop) = 1.5 times.
  double spec_total = 0.0;
  for (std::size_t t = 0; t < mag.rows(); ++t)
    for (std::size_t k = 0; k <= n / 2; ++k)
      spec_total += (k == 0 || k == n / 2 ? 1.0 : 2.0) * mag(t, k) * mag(t, k);
  const std::size_t covered = (mag.rows() - 1) * hop + n;
  double signal_energy = 0.0;
  for (std::size_t i = 0; i < covered; ++i) signal_energy += x[i] * x[i];
  const double overlap = 3.0 * n / (8.0 * hop);
  CHECK(std::abs(spec_total / n - overlap * signal_energy) / (overlap * signal_energy) < 0.01);
}

// Mel ---------------------------------------------------------------------

TEST_CASE("mel of zero is zero and filter rows sum to one") {
  const auto mel = mel_spectrogram(Matrix(3, 513), MelConfig{}, 22050);
  CHECK(mel.cols() == 128);
  for (double v : mel.data()) CHECK(v == 0.0);

  for (const MelConfig cfg : {MelConfig{}, MelConfig{40, 0.0, 8000.0}, MelConfig{256, 50.0, 11025.0}}) {
    const MelFilterbank fb(513, cfg, 22050);
    const Matrix d = fb.dense();
    for (std::size_t b = 0; b < fb.bands(); ++b) {
      double sum = 0.0;
      for (std::size_t k = 0; k < d.cols(); ++k) {
        CHECK(d(b, k) >= 0.0);
        sum += d(b, k);
      }
      CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
    }
  }
}

TEST_CASE("single-bin energy reads out the analytic triangle weight") {
  // Oracle: HTK mel edges, triangle evaluated at the bin frequency, divided by
  // the triangle's sum over all bin frequencies.
  const int sr = 16000;
  const std::size_t n_fft = 512, bins = n_fft / 2 + 1;
  const MelConfig cfg{6, 100.0, 4000.0};
  const auto mel = [](double f) { return 2595.0 * std::log10(1.0 + f / 700.0); };
  const auto hz = [](double m) { return 700.0 * (std::pow(10.0, m / 2595.0) - 1.0); };
  std::vector<double> edge(cfg.bands + 2);
  for (std::size_t i = 0; i < edge.size(); ++i)
    edge[i] = hz(mel(cfg.fmin) + (mel(cfg.fmax) - mel(cfg.fmin)) * i / (cfg.bands + 1.0));
  const auto tri = [&](std::size_t b, double f) {
    const double lo = edge[b], c = edge[b + 1], hi = edge[b + 2];
    if (f <= lo || f >= hi) return 0.0;
    return f <= c ? (f - lo) / (c - lo) : (hi - f) / (hi - c);
  };
  const double bin_hz = static_cast<double>(sr) / n_fft;

  for (std::size_t k : {5u, 20u, 40u, 77u, 120u}) {
    Matrix power(1, bins);
    power(0, k) = 1.0;
    const auto out = mel_spectrogram(power, cfg, sr);  // magnitude 1 squared is 1
    for (std::size_t b = 0; b < cfg.bands; ++b) {
      double area = 0.0;
      for (std::size_t j = 0; j < bins; ++j) area += tri(b, j * bin_hz);
      CHECK(out(0, b) == doctest::Approx(tri(b, k * bin_hz) / area).epsilon(1e-12));
    }
  }

  // A bin under exactly one triangle: one band spanning 0..Nyquist.
  const MelConfig one{1, 0.0, 8000.0};
  Matrix power(1, bins);
  power(0, 3) = 1.0;
  const auto out = mel_spectrogram(power, one, sr);
  double area = 0.0;
  edge = {0.0, hz(mel(8000.0) / 2.0), 8000.0};
  for (std::size_t j = 0; j < bins; ++j) area += tri(0, j * bin_hz);
  CHECK(out(0, 0) == doctest::Approx(tri(0, 3 * bin_hz) / area).epsilon(1e-12));
}

TEST_CASE("mel configuration errors") {
  CHECK_THROWS_AS(MelFilterbank(513, MelConfig{128, 500.0, 500.0}, 22050), std::invalid_argument);
  CHECK_THROWS_AS(MelFilterbank(513, MelConfig{128, 50.0, 12000.0}, 22050), std::invalid_argument);
  CHECK_THROWS_AS(MelFilterbank(513, MelConfig{0, 50.0, 8000.0}, 22050), std::invalid_argument);
  CHECK(hz_to_mel(mel_to_hz(1234.5)) == doctest::Approx(1234.5));
}

// PCEN --------------------------------------------------------------------

TEST_CASE("PCEN of zero input is exactly zero") {
  const auto out = pcen(Matrix(50, 8), 256.0 / 22050, PcenConfig{});
  CHECK(out.kind == FeatureKind::kPcen);
  for (double v : out.matrix.data()) CHECK(v == 0.0);
}

TEST_CASE("PCEN of a constant input reaches the steady-state closed form") {
  const PcenConfig cfg;
  const double c = 1.0;
  const double closed = std::pow(c / std::pow(cfg.floor + c, cfg.gain) + cfg.bias, cfg.exponent) -
                        std::pow(cfg.bias, cfg.exponent);
  CHECK(closed == doctest::Approx(0.3178369622944073).epsilon(1e-15));
  const auto burn_in = static_cast<std::size_t>(5.0 / cfg.smoothing);
  const auto out = pcen(Matrix(burn_in + 20, 4, c), 0.01, cfg);
  for (std::size_t t = burn_in; t < out.frames(); ++t)
    for (double v : out.matrix.row(t)) CHECK(std::abs(v - closed) <= 1e-6);
}

TEST_CASE("PCEN is gain invariant only in the alpha=1, delta,eps->0 limit") {
  PcenConfig cfg;
  cfg.gain = 1.0;
  cfg.bias = 1e-12;
  cfg.floor = 1e-12;
  std::mt19937 rng(5);
  std::uniform_real_distribution<double> u(0.01, 10.0);
  Matrix e(200, 6);
  for (double &v : e.data()) v = u(rng);
  Matrix e2 = e;
  for (double &v : e2.data()) v *= 2.0;
  const auto a = pcen(e, 0.01, cfg), b = pcen(e2, 0.01, cfg);
  for (std::size_t i = 0; i < a.matrix.data().size(); ++i)
    CHECK(std::abs(a.matrix.data()[i] - b.matrix.data()[i]) <= 1e-3);

  // With the default constants the gain does matter.
  const auto da = pcen(e, 0.01, PcenConfig{}), db = pcen(e2, 0.01, PcenConfig{});
  double diff = 0.0;
  for (std::size_t i = 0; i < da.matrix.data().size(); ++i)
    diff = std::max(diff, std::abs(da.matrix.data()[i] - db.matrix.data()[i]));
  CHECK(diff > 1e-3);
}

TEST_CASE("PCEN output is nondecreasing in E for a fixed smoother state") {
  std::mt19937 rng(9);
  std::uniform_real_distribution<double> u(0.0, 100.0);
  const PcenConfig cfg;
  for (int i = 0; i < 1000; ++i) {
    const double m = u(rng), e1 = u(rng), e2 = u(rng);
    CHECK(pcen_value(std::min(e1, e2), m, cfg) <= pcen_value(std::max(e1, e2), m, cfg));
  }
}

TEST_CASE("PCEN configuration validation") {
  PcenConfig cfg;
  cfg.smoothing = 0.0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = {};
  cfg.gain = 1.5;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = {};
  cfg.exponent = 2.0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = {};
  cfg.bias = 0.0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}

// MFCC --------------------------------------------------------------------

TEST_CASE("constant mel gives zero deltas and c0 equals the scaled log sum") {
  Matrix mel(20, 16);
  for (std::size_t t = 0; t < 20; ++t)
    for (std::size_t b = 0; b < 16; ++b) mel(t, b) = 0.5 + 0.1 * b;
  const auto f = mfcc_delta(mel, 0.01, 8);
  CHECK(f.bins() == 16);
  double log_sum = 0.0;
  for (std::size_t b = 0; b < 16; ++b) log_sum += std::log(mel(0, b) + kLogFloor);
  for (std::size_t t = 0; t < 20; ++t) {
    CHECK(f.matrix(t, 0) == doctest::Approx(log_sum / std::sqrt(16.0)).epsilon(1e-12));
    for (std::size_t c = 8; c < 16; ++c) CHECK(f.matrix(t, c) == 0.0);
  }
}

TEST_CASE("a linear ramp has a delta equal to its slope away from the edges") {
  const double slope = 0.37;
  Matrix ramp(30, 3);
  for (std::size_t t = 0; t < 30; ++t)
    for (std::size_t c = 0; c < 3; ++c) ramp(t, c) = 1.0 + c + slope * t;
  const Matrix d = deltas(ramp);
  for (std::size_t t = 4; t < 26; ++t)
    for (std::size_t c = 0; c < 3; ++c) CHECK(d(t, c) == doctest::Approx(slope).epsilon(1e-12));
  // Edge replication flattens the ends: frame 0 sees rows (0,0,0,0 | 1,2,3,4).
  CHECK(d(0, 0) == doctest::Approx(slope * (1 + 4 + 9 + 16) / 60.0));

  // Through the full MFCC path: log mel ramps by `slope` per frame in every band.
  Matrix mel(30, 8);
  for (std::size_t t = 0; t < 30; ++t)
    for (std::size_t b = 0; b < 8; ++b) mel(t, b) = std::exp(0.1 * b + slope * t);
  const auto f = mfcc_delta(mel, 0.01, 4);
  for (std::size_t t = 4; t < 26; ++t)
    CHECK(f.matrix(t, 4) == doctest::Approx(slope * std::sqrt(8.0)).epsilon(1e-9));
}

TEST_CASE("deltas of short inputs use edge padding without error") {
  Matrix few(3, 2, 1.0);
  few(2, 0) = 4.0;
  const Matrix d = deltas(few);
  CHECK(d.rows() == 3);
  CHECK(d(0, 1) == 0.0);
  CHECK(d(0, 0) > 0.0);
  CHECK_THROWS_AS(mfcc_delta(Matrix(5, 4), 0.01, 5), std::invalid_argument);
  CHECK_THROWS_AS(mfcc_delta(Matrix(5, 4), 0.01, 0), std::invalid_argument);
}

// Pooling -----------------------------------------------------------------

TEST_CASE("pool_segment arithmetic") {
  const auto f = stack({{0, 0}, {1, 1}, {5, 7}}, 0.1);
  auto v = pool_segment(f, 0.0, 0.2);
  CHECK(v == std::vector<double>{0.5, 0.5, 0.5, 0.5});

  v = pool_segment(f, 0.2, 0.3);
  CHECK(v == std::vector<double>{5, 7, 0, 0});

  const auto c = stack({{3, -2}, {3, -2}, {3, -2}, {3, -2}}, 0.1);
  CHECK(pool_segment(c, 0.05, 0.35) == std::vector<double>{3, -2, 0, 0});
}

TEST_CASE("frame ranges follow the time-cell convention") {
  const auto f = stack(std::vector<std::vector<double>>(10, {0.0}), 0.1);
  auto r = frame_range(f, 0.2, 0.5);
  CHECK(r.first == 2);
  CHECK(r.count == 3);
  r = frame_range(f, 0.25, 0.27);  // shorter than a hop
  CHECK(r.first == 2);
  CHECK(r.count == 1);
  r = frame_range(f, 0.95, 3.0);  // clipped at the end
  CHECK(r.first == 9);
  CHECK(r.count == 1);
  r = frame_range(f, 5.0, 6.0);  // outside: nearest frame
  CHECK(r.first == 9);
  CHECK(r.count == 1);
  CHECK_THROWS(frame_range(FeatureStack{}, 0.0, 1.0));
}

TEST_CASE("pool_segment is invariant to frame order") {
  std::mt19937 rng(17);
  std::normal_distribution<double> g;
  std::vector<std::vector<double>> rows(12, std::vector<double>(5));
  for (auto &r : rows)
    for (double &v : r) v = g(rng);
  const auto a = pool_segment(stack(rows, 0.1), 0.0, 1.2);
  for (int trial = 0; trial < 10; ++trial) {
    std::shuffle(rows.begin(), rows.end(), rng);
    const auto b = pool_segment(stack(rows, 0.1), 0.0, 1.2);
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(b[i] == doctest::Approx(a[i]).epsilon(1e-12));
  }
}

// Whole front-end ---------------------------------------------------------

TEST_CASE("features are finite for random noise, silence, and clipped input") {
  FeatureConfig cfg;
  for (const auto kind : {FeatureKind::kLogMel, FeatureKind::kPcen, FeatureKind::kMfccDelta}) {
    cfg.kind = kind;
    for (unsigned seed = 0; seed < 4; ++seed) {
      auto x = noise(22050, seed, seed == 3 ? 5.0 : 0.2);
      if (seed == 2) std::fill(x.begin(), x.begin() + 11025, 0.0);
      const auto f = compute_features(Waveform{x, 22050}, cfg);
      CHECK(f.kind == kind);
      CHECK(f.frames() >= 1);
      CHECK(all_finite(f.matrix));
    }
    const auto silent = compute_features(Waveform{std::vector<double>(4096, 0.0), 22050}, cfg);
    CHECK(all_finite(silent.matrix));
  }
}

TEST_CASE("compute_features resamples foreign rates") {
  const auto x = noise(16000, 3);
  const auto f = compute_features(Waveform{x, 16000}, FeatureConfig{});
  CHECK(f.hop_seconds == doctest::Approx(256.0 / 22050));
  CHECK(f.frames() == 1 + (22050 - 1024) / 256);
}

TEST_CASE("feature configuration validation") {
  FeatureConfig cfg;
  cfg.mel.fmax = 20000.0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = {};
  cfg.kind = FeatureKind::kMfccDelta;
  cfg.mfcc_coeffs = 200;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  CHECK(parse_feature_kind("pcen") == FeatureKind::kPcen);
  CHECK(parse_feature_kind("mfcc_delta") == FeatureKind::kMfccDelta);
  CHECK_FALSE(parse_feature_kind("mfcc").has_value());
  CHECK(feature_kind_name(FeatureKind::kLogMel) == "logmel");
}

TEST_CASE("feature dump round trip") {
  testing::TempDir dir("dump");
  const auto f = compute_features(Waveform{noise(8192, 2), 22050}, FeatureConfig{});
  write_feature_dump(f, dir / "feat");
  CHECK(std::filesystem::file_size(dir / "feat.bin") == f.matrix.data().size() * sizeof(double));
  const auto back = read_feature_dump(dir / "feat");
  CHECK(back.matrix == f.matrix);
  CHECK(back.hop_seconds == f.hop_seconds);
  CHECK(back.kind == f.kind);
}
