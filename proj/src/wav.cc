// Copyright 2026 The Speechprint Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "speechprint/wav.h"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>

#include "speechprint/errors.h"

namespace speechprint {
namespace {

constexpr uint16_t kFormatPcm = 1;
constexpr uint16_t kFormatFloat = 3;
constexpr uint16_t kFormatExtensible = 0xFFFE;

uint16_t ReadU16(const uint8_t* p) {
  return static_cast<uint16_t>(p[0] | (p[1] << 8));
}

uint32_t ReadU32(const uint8_t* p) {
  return static_cast<uint32_t>(p[0]) | (static_cast<uint32_t>(p[1]) << 8) |
         (static_cast<uint32_t>(p[2]) << 16) |
         (static_cast<uint32_t>(p[3]) << 24);
}

void PutU16(std::vector<uint8_t>& out, uint16_t v) {
  out.push_back(static_cast<uint8_t>(v & 0xff));
  out.push_back(static_cast<uint8_t>(v >> 8));
}

void PutU32(std::vector<uint8_t>& out, uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<uint8_t>(v >> (8 * i)));
}

void PutTag(std::vector<uint8_t>& out, const char* tag) {
  out.insert(out.end(), tag, tag + 4);
}

bool TagIs(const uint8_t* p, const char* tag) {
  return std::memcmp(p, tag, 4) == 0;
}

WavFormat ParseFmtChunk(const uint8_t* p, uint32_t size) {
  if (size < 16) throw DecodeError("fmt chunk too small");
  uint16_t tag = ReadU16(p);
  const uint16_t channels = ReadU16(p + 2);
  const uint32_t rate = ReadU32(p + 4);
  const uint16_t bits = ReadU16(p + 14);
  if (tag == kFormatExtensible) {
    if (size < 40) throw DecodeError("extensible fmt chunk too small");
    tag = ReadU16(p + 24);
  }
  WavFormat format;
  if (tag == kFormatPcm && bits == 16) {
    format.sample_format = SampleFormat::kPcm16;
  } else if (tag == kFormatFloat && bits == 32) {
    format.sample_format = SampleFormat::kFloat32;
  } else {
    throw UnsupportedFormat("unsupported codec: format tag " +
                            std::to_string(tag) + ", " + std::to_string(bits) +
                            " bits");
  }
  if (channels != 1 && channels != 2) {
    throw UnsupportedFormat("unsupported channel count " +
                            std::to_string(channels));
  }
  if (rate == 0) throw DecodeError("zero sample rate");
  format.channels = channels;
  format.sample_rate = static_cast<int>(rate);
  return format;
}

}  // namespace

void WavStreamDecoder::ParseHeader() {
  size_t pos = 0;
  if (!riff_seen_) {
    if (pending_.size() < 12) return;
    if (!TagIs(pending_.data(), "RIFF") || !TagIs(pending_.data() + 8, "WAVE")) {
      throw DecodeError("not a RIFF/WAVE stream");
    }
    riff_seen_ = true;
    pos = 12;
  }
  while (!in_data_ && pending_.size() - pos >= 8) {
    const uint8_t* chunk = pending_.data() + pos;
    const uint32_t size = ReadU32(chunk + 4);
    if (TagIs(chunk, "data")) {
      if (!format_) throw DecodeError("data chunk before fmt chunk");
      in_data_ = true;
      unbounded_data_ = size == 0 || size == 0xFFFFFFFFu;
      data_remaining_ = size;
      pos += 8;
      break;
    }
    const uint64_t padded = static_cast<uint64_t>(size) + (size & 1u);
    if (pending_.size() - pos < 8 + padded) break;
    if (TagIs(chunk, "fmt ")) format_ = ParseFmtChunk(chunk + 8, size);
    pos += 8 + padded;
  }
  pending_.erase(pending_.begin(), pending_.begin() + static_cast<long>(pos));
}

void WavStreamDecoder::DecodeFrames(std::vector<double>& out) {
  const WavFormat& fmt = *format_;
  const size_t frame = fmt.frame_bytes();
  size_t usable = pending_.size();
  if (!unbounded_data_) {
    usable = static_cast<size_t>(std::min<uint64_t>(usable, data_remaining_));
  }
  usable -= usable % frame;
  const uint8_t* p = pending_.data();
  for (size_t off = 0; off < usable; off += frame) {
    double acc = 0.0;
    for (int c = 0; c < fmt.channels; ++c) {
      double v = 0.0;
      if (fmt.sample_format == SampleFormat::kPcm16) {
        const auto s = static_cast<int16_t>(ReadU16(p + off + 2 * c));
        v = static_cast<double>(s) / 32768.0;
      } else {
        const uint32_t bits = ReadU32(p + off + 4 * c);
        float f = 0.0f;
        std::memcpy(&f, &bits, sizeof(f));
        if (!std::isfinite(f)) throw DecodeError("non-finite float sample");
        v = f;
        if (v > 1.0 || v < -1.0) {
          v = v > 1.0 ? 1.0 : -1.0;
          ++stats_.clipped_samples;
        }
      }
      acc += v;
    }
    out.push_back(acc / fmt.channels);
  }
  pending_.erase(pending_.begin(), pending_.begin() + static_cast<long>(usable));
  if (!unbounded_data_) {
    data_remaining_ -= usable;
    if (data_remaining_ < frame) {
      data_complete_ = true;
      pending_.clear();
    }
  }
}

void WavStreamDecoder::Push(std::span<const uint8_t> bytes,
                            std::vector<double>& out) {
  if (data_complete_) return;
  pending_.insert(pending_.end(), bytes.begin(), bytes.end());
  if (!in_data_) ParseHeader();
  if (in_data_) DecodeFrames(out);
}

void WavStreamDecoder::Finish() {
  if (!in_data_) throw DecodeError("stream ended before audio data");
  if (!data_complete_ && !pending_.empty()) {
    throw DecodeError("stream ended inside a sample frame");
  }
}

AudioBuffer DecodeWav(std::span<const uint8_t> bytes, DecodeStats* stats) {
  WavStreamDecoder decoder;
  std::vector<double> samples;
  decoder.Push(bytes, samples);
  decoder.Finish();
  if (!decoder.data_complete() && !decoder.unbounded_data()) {
    throw DecodeError("data chunk truncated");
  }
  if (stats != nullptr) *stats = decoder.stats();
  return AudioBuffer(std::move(samples), decoder.format()->sample_rate);
}

AudioBuffer ReadWavFile(const std::filesystem::path& path, DecodeStats* stats) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                             std::istreambuf_iterator<char>());
  return DecodeWav(bytes, stats);
}

std::vector<uint8_t> EncodeWav(const AudioBuffer& audio, SampleFormat format) {
  const uint16_t bits = format == SampleFormat::kPcm16 ? 16 : 32;
  const uint32_t data_bytes = static_cast<uint32_t>(audio.size() * (bits / 8));
  std::vector<uint8_t> out;
  out.reserve(44 + data_bytes);
  PutTag(out, "RIFF");
  PutU32(out, 36 + data_bytes);
  PutTag(out, "WAVE");
  PutTag(out, "fmt ");
  PutU32(out, 16);
  PutU16(out, format == SampleFormat::kPcm16 ? kFormatPcm : kFormatFloat);
  PutU16(out, 1);
  PutU32(out, static_cast<uint32_t>(audio.sample_rate()));
  PutU32(out, static_cast<uint32_t>(audio.sample_rate()) * (bits / 8));
  PutU16(out, bits / 8);
  PutU16(out, bits);
  PutTag(out, "data");
  PutU32(out, data_bytes);
  for (double s : audio.samples()) {
    if (format == SampleFormat::kPcm16) {
      const double scaled = std::round(s * 32768.0);
      const auto v = static_cast<int16_t>(std::clamp(scaled, -32768.0, 32767.0));
      PutU16(out, static_cast<uint16_t>(v));
    } else {
      const auto f = static_cast<float>(s);
      uint32_t bits32 = 0;
      std::memcpy(&bits32, &f, sizeof(f));
      PutU32(out, bits32);
    }
  }
  return out;
}

void WriteWavFile(const std::filesystem::path& path, const AudioBuffer& audio,
                  SampleFormat format) {
  const auto bytes = EncodeWav(audio, format);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed for " + path.string());
}

void WriteRawFloat32(const std::filesystem::path& path,
                     const AudioBuffer& audio) {
  std::vector<uint8_t> bytes;
  bytes.reserve(audio.size() * 4);
  for (double s : audio.samples()) {
    const auto f = static_cast<float>(s);
    uint32_t bits = 0;
    std::memcpy(&bits, &f, sizeof(f));
    PutU32(bytes, bits);
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
}

}  // namespace speechprint
