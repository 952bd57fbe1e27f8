// src/wav.cc

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

#include "fsbed/wav.h"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstring>
#include <fstream>
#include <string>

namespace fsbed::dsp {

namespace {

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatFloat = 3;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

std::uint16_t le16(const unsigned char *p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}
std::uint32_t le32(const unsigned char *p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

void put16(std::string &out, std::uint16_t v) {
  out.push_back(static_cast<char>(v & 0xFF));
  out.push_back(static_cast<char>(v >> 8));
}
void put32(std::string &out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

struct ParsedWav {
  WavInfo info;
  std::uint64_t data_offset = 0;
  std::uint64_t data_bytes = 0;
};

ParsedWav parse_header(std::ifstream &in, const std::filesystem::path &path) {
  const std::string where = path.string() + ": ";
  std::array<unsigned char, 12> riff{};
  if (!in.read(reinterpret_cast<char *>(riff.data()), riff.size()))
    throw WavError(where + "truncated RIFF header");
  if (std::memcmp(riff.data(), "RIFF", 4) != 0 || std::memcmp(riff.data() + 8, "WAVE", 4) != 0)
    throw WavError(where + "not a RIFF/WAVE file");

  ParsedWav parsed;
  bool have_fmt = false;
  std::uint16_t format = 0;
  while (true) {
    std::array<unsigned char, 8> chunk{};
    if (!in.read(reinterpret_cast<char *>(chunk.data()), chunk.size()))
      throw WavError(where + (have_fmt ? "missing data chunk" : "missing fmt chunk"));
    const std::uint32_t size = le32(chunk.data() + 4);
    if (std::memcmp(chunk.data(), "fmt ", 4) == 0) {
      if (size < 16) throw WavError(where + "fmt chunk too small");
      std::vector<unsigned char> fmt(size);
      if (!in.read(reinterpret_cast<char *>(fmt.data()), size))
        throw WavError(where + "truncated fmt chunk");
      format = le16(fmt.data());
      parsed.info.channels = le16(fmt.data() + 2);
      parsed.info.sample_rate = static_cast<int>(le32(fmt.data() + 4));
      parsed.info.bits_per_sample = le16(fmt.data() + 14);
      if (format == kFormatExtensible) {
        if (size < 26) throw WavError(where + "extensible fmt chunk too small");
        format = le16(fmt.data() + 24);  // first two bytes of the subformat GUID
      }
      if (size % 2 == 1) in.ignore(1);
      have_fmt = true;
    } else if (std::memcmp(chunk.data(), "data", 4) == 0) {
      if (!have_fmt) throw WavError(where + "data chunk before fmt chunk");
      parsed.data_offset = static_cast<std::uint64_t>(in.tellg());
      parsed.data_bytes = size;
      break;
    } else {
      in.seekg(size + (size % 2), std::ios::cur);
      if (!in) throw WavError(where + "truncated chunk");
    }
  }

  auto &info = parsed.info;
  if (info.channels < 1) throw WavError(where + "zero channels");
  if (info.sample_rate < 1) throw WavError(where + "invalid sample rate");
  if (format == kFormatPcm && (info.bits_per_sample == 16 || info.bits_per_sample == 32)) {
    info.is_float = false;
  } else if (format == kFormatFloat && info.bits_per_sample == 32) {
    info.is_float = true;
  } else {
    throw WavError(where + "unsupported codec (format " + std::to_string(format) + ", " +
                   std::to_string(info.bits_per_sample) + " bits)");
  }
  const std::uint64_t frame_bytes =
      static_cast<std::uint64_t>(info.channels) * (info.bits_per_sample / 8);
  info.frames = parsed.data_bytes / frame_bytes;
  return parsed;
}

}  // namespace

WavInfo read_wav_info(const std::filesystem::path &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw WavError("cannot open " + path.string());
  return parse_header(in, path).info;
}

Waveform load_wav(const std::filesystem::path &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw WavError("cannot open " + path.string());
  const ParsedWav parsed = parse_header(in, path);
  const WavInfo &info = parsed.info;
  const std::size_t bytes_per_sample = info.bits_per_sample / 8;
  const std::size_t frame_bytes = bytes_per_sample * info.channels;

  std::vector<unsigned char> raw(parsed.data_bytes);
  in.read(reinterpret_cast<char *>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (static_cast<std::uint64_t>(in.gcount()) != parsed.data_bytes)
    throw WavError(path.string() + ": truncated data chunk");
  if (info.frames == 0) throw WavError(path.string() + ": no samples");

  Waveform wav;
  wav.sample_rate = info.sample_rate;
  wav.samples.resize(info.frames);
  const double inv_channels = 1.0 / info.channels;
  for (std::size_t f = 0; f < info.frames; ++f) {
    double acc = 0.0;
    for (int c = 0; c < info.channels; ++c) {
      const unsigned char *p = raw.data() + f * frame_bytes + c * bytes_per_sample;
      if (info.is_float) {
        float v;
        const std::uint32_t bits = le32(p);
        std::memcpy(&v, &bits, sizeof(v));
        acc += v;
      } else if (info.bits_per_sample == 16) {
        acc += static_cast<std::int16_t>(le16(p)) / 32768.0;
      } else {
        acc += static_cast<std::int32_t>(le32(p)) / 2147483648.0;
      }
    }
    wav.samples[f] = acc * inv_channels;
  }
  return wav;
}

Waveform resample_linear(const Waveform &wav, int target_rate) {
  if (target_rate <= 0) throw std::invalid_argument("target sample rate must be positive");
  if (wav.sample_rate == target_rate || wav.samples.empty()) {
    Waveform copy = wav;
    copy.sample_rate = target_rate;
    return copy;
  }
  const double ratio = static_cast<double>(wav.sample_rate) / target_rate;
  const auto n_out = static_cast<std::size_t>(
      std::floor((static_cast<double>(wav.samples.size()) - 1.0) / ratio) + 1.0);
  Waveform out;
  out.sample_rate = target_rate;
  out.samples.resize(n_out);
  const std::size_t last = wav.samples.size() - 1;
  for (std::size_t i = 0; i < n_out; ++i) {
    const double pos = static_cast<double>(i) * ratio;
    const auto lo = std::min(static_cast<std::size_t>(pos), last);
    const std::size_t hi = std::min(lo + 1, last);
    const double frac = pos - static_cast<double>(lo);
    out.samples[i] = wav.samples[lo] + frac * (wav.samples[hi] - wav.samples[lo]);
  }
  return out;
}

namespace {

void write_file(const std::filesystem::path &path, std::uint16_t format, int channels,
                int bits, int sample_rate, const std::string &payload) {
  std::string out;
  out.reserve(44 + payload.size());
  out += "RIFF";
  put32(out, static_cast<std::uint32_t>(36 + payload.size()));
  out += "WAVEfmt ";
  put32(out, 16);
  put16(out, format);
  put16(out, static_cast<std::uint16_t>(channels));
  put32(out, static_cast<std::uint32_t>(sample_rate));
  put32(out, static_cast<std::uint32_t>(sample_rate * channels * bits / 8));
  put16(out, static_cast<std::uint16_t>(channels * bits / 8));
  put16(out, static_cast<std::uint16_t>(bits));
  out += "data";
  put32(out, static_cast<std::uint32_t>(payload.size()));
  out += payload;
  std::ofstream f(path, std::ios::binary);
  if (!f) throw WavError("cannot write " + path.string());
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!f) throw WavError("write failed: " + path.string());
}

std::int16_t to_pcm16(double x) {
  const double clipped = std::clamp(x, -1.0, 1.0);
  return static_cast<std::int16_t>(std::clamp(std::lround(clipped * 32767.0), -32768L, 32767L));
}

}  // namespace

void write_wav_pcm16(const std::filesystem::path &path, std::span<const double> samples,
                     int sample_rate) {
  std::string payload;
  payload.reserve(samples.size() * 2);
  for (double x : samples) put16(payload, static_cast<std::uint16_t>(to_pcm16(x)));
  write_file(path, kFormatPcm, 1, 16, sample_rate, payload);
}

void write_wav_pcm16(const std::filesystem::path &path,
                     const std::vector<std::vector<double>> &channels, int sample_rate) {
  if (channels.empty()) throw std::invalid_argument("no channels");
  const std::size_t n = channels.front().size();
  for (const auto &c : channels)
    if (c.size() != n) throw std::invalid_argument("channel lengths differ");
  std::string payload;
  payload.reserve(n * channels.size() * 2);
  for (std::size_t i = 0; i < n; ++i)
    for (const auto &c : channels) put16(payload, static_cast<std::uint16_t>(to_pcm16(c[i])));
  write_file(path, kFormatPcm, static_cast<int>(channels.size()), 16, sample_rate, payload);
}

void write_wav_float32(const std::filesystem::path &path, std::span<const double> samples,
                       int sample_rate) {
  std::string payload;
  payload.reserve(samples.size() * 4);
  for (double x : samples) {
    const auto f = static_cast<float>(x);
    std::uint32_t bits;
    std::memcpy(&bits, &f, sizeof(bits));
    put32(payload, bits);
  }
  write_file(path, kFormatFloat, 1, 32, sample_rate, payload);
}

}  // namespace fsbed::dsp
