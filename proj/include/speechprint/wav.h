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

// RIFF/WAVE decoding and encoding. Accepts 16-bit PCM and 32-bit IEEE float,
// mono or stereo; stereo is averaged down to mono.

#ifndef SPEECHPRINT_WAV_H_
#define SPEECHPRINT_WAV_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "speechprint/audio.h"

namespace speechprint {

enum class SampleFormat { kPcm16, kFloat32 };

struct WavFormat {
  SampleFormat sample_format = SampleFormat::kPcm16;
  int channels = 1;
  int sample_rate = kCanonicalSampleRate;

  size_t frame_bytes() const {
    return static_cast<size_t>(channels) *
           (sample_format == SampleFormat::kPcm16 ? 2 : 4);
  }
};

struct DecodeStats {
  // Float samples outside [-1, 1] that were clamped.
  size_t clipped_samples = 0;
};

// Throws DecodeError on a malformed container and UnsupportedFormat on codecs,
// bit depths or channel counts outside the accepted set.
AudioBuffer DecodeWav(std::span<const uint8_t> bytes,
                      DecodeStats* stats = nullptr);
AudioBuffer ReadWavFile(const std::filesystem::path& path,
                        DecodeStats* stats = nullptr);

std::vector<uint8_t> EncodeWav(const AudioBuffer& audio,
                               SampleFormat format = SampleFormat::kPcm16);
void WriteWavFile(const std::filesystem::path& path, const AudioBuffer& audio,
                  SampleFormat format = SampleFormat::kPcm16);

// Little-endian float32 samples with no header.
void WriteRawFloat32(const std::filesystem::path& path,
                     const AudioBuffer& audio);

// Incremental decoder for a WAV byte stream arriving in arbitrary chunks. The
// header must precede the sample data; a data chunk whose declared size is 0
// or 0xFFFFFFFF is read until the stream ends.
class WavStreamDecoder {
 public:
  // Appends newly decoded mono samples to `out`.
  void Push(std::span<const uint8_t> bytes, std::vector<double>& out);

  // Throws DecodeError if the header never completed or a partial sample
  // frame is left over.
  void Finish();

  const std::optional<WavFormat>& format() const { return format_; }
  const DecodeStats& stats() const { return stats_; }
  bool data_complete() const { return data_complete_; }
  bool unbounded_data() const { return unbounded_data_; }

 private:
  void ParseHeader();
  void DecodeFrames(std::vector<double>& out);

  std::vector<uint8_t> pending_;
  std::optional<WavFormat> format_;
  bool riff_seen_ = false;
  bool in_data_ = false;
  bool data_complete_ = false;
  uint64_t data_remaining_ = 0;
  bool unbounded_data_ = false;
  DecodeStats stats_;
};

}  // namespace speechprint

#endif  // SPEECHPRINT_WAV_H_
