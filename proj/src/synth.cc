// src/synth.cc

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

#include "fsbed/synth.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <random>
#include <stdexcept>

namespace fsbed::synth {

namespace {

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
  std::uint64_t x = seed ^ (a * 0x9E3779B97F4A7C15ULL) ^ (b * 0xC2B2AE3D27D4EB4FULL);
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

double parse_double(std::string_view s, std::string_view what) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size())
    throw std::invalid_argument("bad " + std::string(what) + " '" + std::string(s) + "'");
  return v;
}

std::string fixed6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

constexpr double kRampSeconds = 0.005;

}  // namespace

SynthClass parse_class(std::string_view text) {
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  while (true) {
    const auto colon = text.find(':', start);
    parts.push_back(text.substr(start, colon == std::string_view::npos ? colon : colon - start));
    if (colon == std::string_view::npos) break;
    start = colon + 1;
  }
  if (parts.size() != 7)
    throw std::invalid_argument("class spec needs name:kind:f_lo:f_hi:dur_min:dur_max:rate, got '" +
                                std::string(text) + "'");
  SynthClass c;
  c.name = std::string(parts[0]);
  if (parts[1] == "tone") c.kind = SignalKind::kTone;
  else if (parts[1] == "chirp") c.kind = SignalKind::kChirp;
  else throw std::invalid_argument("class kind must be tone or chirp, got '" + std::string(parts[1]) + "'");
  c.freq_low = parse_double(parts[2], "f_lo");
  c.freq_high = parse_double(parts[3], "f_hi");
  c.min_duration = parse_double(parts[4], "dur_min");
  c.max_duration = parse_double(parts[5], "dur_max");
  c.rate_per_minute = parse_double(parts[6], "rate");
  return c;
}

void SynthSpec::validate() const {
  if (files == 0) throw std::invalid_argument("synth needs at least one file");
  if (!(file_duration > 0.0)) throw std::invalid_argument("file duration must be positive");
  if (classes.empty()) throw std::invalid_argument("synth needs at least one class");
  if (sample_rate <= 0) throw std::invalid_argument("sample rate must be positive");
  if (!std::isfinite(snr_db)) throw std::invalid_argument("snr must be finite");
  if (dataset.empty() || file_prefix.empty())
    throw std::invalid_argument("dataset and file prefix must be non-empty");
  for (const auto &c : classes) {
    if (c.name.empty() || c.name.find(',') != std::string::npos)
      throw std::invalid_argument("class names must be non-empty and comma-free");
    if (!(c.rate_per_minute > 0.0)) throw std::invalid_argument(c.name + ": rate must be positive");
    if (!(c.min_duration > 2 * kRampSeconds && c.min_duration <= c.max_duration))
      throw std::invalid_argument(c.name + ": need 0.01 < dur_min <= dur_max");
    const double nyquist = sample_rate / 2.0;
    if (!(c.freq_low > 0.0 && c.freq_high > 0.0 && c.freq_low < nyquist && c.freq_high < nyquist))
      throw std::invalid_argument(c.name + ": frequencies must lie in (0, Nyquist)");
    if (c.kind == SignalKind::kTone && c.freq_low > c.freq_high)
      throw std::invalid_argument(c.name + ": tone needs f_lo <= f_hi");
    if (c.rate_per_minute * file_duration / 60.0 < 6.0)
      throw std::invalid_argument(c.name + ": expected events per file below 6 (rate x duration)");
  }
}

SynthFile synthesize_file(const SynthSpec &spec, std::size_t index) {
  spec.validate();
  SynthFile file;
  file.audio_id = spec.file_prefix + "_" + std::to_string(index) + ".wav";
  const auto n = static_cast<std::size_t>(std::llround(spec.file_duration * spec.sample_rate));
  const double sr = spec.sample_rate;
  auto &x = file.waveform.samples;
  x.assign(n, 0.0);
  file.waveform.sample_rate = spec.sample_rate;

  // Background noise at kNoiseRms.
  {
    std::mt19937_64 rng(mix_seed(spec.seed, index, 0));
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::vector<double> noise(n);
    if (spec.noise == NoiseKind::kWhite) {
      for (auto &v : noise) v = gauss(rng);
    } else {
      // Paul Kellet's pinking filter.
      double b0 = 0, b1 = 0, b2 = 0, b3 = 0, b4 = 0, b5 = 0, b6 = 0;
      for (auto &v : noise) {
        const double w = gauss(rng);
        b0 = 0.99886 * b0 + w * 0.0555179;
        b1 = 0.99332 * b1 + w * 0.0750759;
        b2 = 0.96900 * b2 + w * 0.1538520;
        b3 = 0.86650 * b3 + w * 0.3104856;
        b4 = 0.55000 * b4 + w * 0.5329522;
        b5 = -0.7616 * b5 - w * 0.0168980;
        v = b0 + b1 + b2 + b3 + b4 + b5 + b6 + w * 0.5362;
        b6 = w * 0.115926;
      }
    }
    double energy = 0.0;
    for (double v : noise) energy += v * v;
    const double scale = energy > 0.0 ? kNoiseRms / std::sqrt(energy / static_cast<double>(n)) : 0.0;
    for (std::size_t i = 0; i < n; ++i) x[i] = noise[i] * scale;
  }

  const double amplitude = kNoiseRms * std::pow(10.0, spec.snr_db / 20.0) * std::numbers::sqrt2;
  for (std::size_t c = 0; c < spec.classes.size(); ++c) {
    const SynthClass &cls = spec.classes[c];
    std::mt19937_64 rng(mix_seed(spec.seed, index, c + 1));
    std::exponential_distribution<double> gap(cls.rate_per_minute / 60.0);
    std::uniform_real_distribution<double> dur(cls.min_duration, cls.max_duration);
    std::uniform_real_distribution<double> freq(std::min(cls.freq_low, cls.freq_high),
                                                std::max(cls.freq_low, cls.freq_high));
    std::uniform_real_distribution<double> phase0(0.0, 2.0 * std::numbers::pi);
    double t = 0.0;
    while (true) {
      t += gap(rng);
      const double d = dur(rng);
      const double f = freq(rng);
      const double phase = phase0(rng);
      const auto first = static_cast<std::size_t>(std::llround(t * sr));
      const auto last = static_cast<std::size_t>(std::llround((t + d) * sr));
      if (last >= n) break;
      const auto len = static_cast<double>(last - first);
      const double ramp = kRampSeconds * sr;
      for (std::size_t i = first; i < last; ++i) {
        const double k = static_cast<double>(i - first);
        const double tau = k / sr;
        double env = 1.0;
        if (k < ramp) env = 0.5 - 0.5 * std::cos(std::numbers::pi * k / ramp);
        else if (len - k < ramp) env = 0.5 - 0.5 * std::cos(std::numbers::pi * (len - k) / ramp);
        double arg;
        if (cls.kind == SignalKind::kTone) {
          arg = 2.0 * std::numbers::pi * f * tau;
        } else {
          const double sweep = (cls.freq_high - cls.freq_low) / (len / sr);
          arg = 2.0 * std::numbers::pi * (cls.freq_low * tau + 0.5 * sweep * tau * tau);
        }
        x[i] += amplitude * env * std::sin(arg + phase);
      }
      file.events.push_back({c, static_cast<double>(first) / sr, static_cast<double>(last) / sr});
      t += d;
    }
  }
  std::stable_sort(file.events.begin(), file.events.end(),
                   [](const PlantedEvent &a, const PlantedEvent &b) { return a.onset < b.onset; });
  return file;
}

std::string annotation_csv(const SynthSpec &spec, const SynthFile &file) {
  std::string out = "Audiofilename,Starttime,Endtime";
  if (spec.mode == corpus::LabelMode::kSingleLabel) {
    out += ",Q\n";
    for (const auto &e : file.events) {
      if (e.class_index != 0) continue;
      out += file.audio_id + "," + fixed6(e.onset) + "," + fixed6(e.offset) + ",POS\n";
    }
    return out;
  }
  for (const auto &c : spec.classes) out += "," + c.name;
  out += '\n';
  for (const auto &e : file.events) {
    out += file.audio_id + "," + fixed6(e.onset) + "," + fixed6(e.offset);
    for (std::size_t c = 0; c < spec.classes.size(); ++c) out += c == e.class_index ? ",POS" : ",NEG";
    out += '\n';
  }
  return out;
}

std::filesystem::path write_corpus(const SynthSpec &spec, const std::filesystem::path &out_dir) {
  spec.validate();
  const auto dir = out_dir / spec.dataset;
  std::filesystem::create_directories(dir);
  for (std::size_t i = 0; i < spec.files; ++i) {
    const SynthFile file = synthesize_file(spec, i);
    const auto stem = dir / (spec.file_prefix + "_" + std::to_string(i));
    auto wav_path = stem;
    wav_path += ".wav";
    auto csv_path = stem;
    csv_path += ".csv";
    dsp::write_wav_pcm16(wav_path, file.waveform.samples, spec.sample_rate);
    std::ofstream csv(csv_path);
    if (!csv) throw std::runtime_error("cannot write " + csv_path.string());
    csv << annotation_csv(spec, file);
    if (!csv) throw std::runtime_error("write failed: " + csv_path.string());
  }
  return dir;
}

}  // namespace fsbed::synth
