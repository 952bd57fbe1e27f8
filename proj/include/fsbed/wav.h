// include/fsbed/wav.h

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

#ifndef FSBED_WAV_H_
#define FSBED_WAV_H_

#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <vector>

namespace fsbed::dsp {

/// Mono audio, samples nominally in [-1, 1].
struct Waveform {
  std::vector<double> samples;
  int sample_rate = 0;

  double duration_seconds() const {
    return sample_rate > 0 ? static_cast<double>(samples.size()) / sample_rate : 0.0;
  }
};

class WavError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct WavInfo {
  int sample_rate = 0;
  int channels = 0;
  int bits_per_sample = 0;
  bool is_float = false;
  std::uint64_t frames = 0;  // samples per channel

  double duration_seconds() const {
    return sample_rate > 0 ? static_cast<double>(frames) / sample_rate : 0.0;
  }
};

/// Header-only read. Throws WavError on anything but RIFF/WAVE PCM 16/32-bit
/// integer or 32-bit float (plain or WAVE_FORMAT_EXTENSIBLE).
WavInfo read_wav_info(const std::filesystem::path &path);

/// Integer samples are scaled by 1/2^(bits-1); channels are averaged.
Waveform load_wav(const std::filesystem::path &path);

/// Linear interpolation onto a new rate. Returns the input unchanged when
/// the rates already agree.
Waveform resample_linear(const Waveform &wav, int target_rate);

/// 16-bit PCM mono. Samples are clipped to [-1, 1] and rounded.
void write_wav_pcm16(const std::filesystem::path &path, std::span<const double> samples,
                     int sample_rate);

/// Writes an interleaved multi-channel 16-bit file; `channels` holds one
/// equally sized vector per channel.
void write_wav_pcm16(const std::filesystem::path &path,
                     const std::vector<std::vector<double>> &channels, int sample_rate);

/// 32-bit float mono.
void write_wav_float32(const std::filesystem::path &path, std::span<const double> samples,
                       int sample_rate);

}  // namespace fsbed::dsp

#endif  // FSBED_WAV_H_
