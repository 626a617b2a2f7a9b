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

// Seeded query deterioration: random offset, playback-rate change and
// additive Gaussian noise at a calibrated SNR.

#ifndef SPEECHPRINT_DEGRADE_H_
#define SPEECHPRINT_DEGRADE_H_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <variant>
#include <vector>

#include "speechprint/audio.h"

namespace speechprint {

inline constexpr double kMinBenchRate = 0.97;
inline constexpr double kMaxBenchRate = 1.03;

struct NoiseAddition {
  AudioBuffer audio;          // clipped result
  std::vector<double> noise;  // the scaled noise that was added
  size_t clipped_samples = 0;
};

// Adds zero-mean Gaussian noise scaled so that the realized noise power is
// exactly P_signal / 10^(snr_db / 10). No SNR means no noise. Throws
// SilentSignal for a finite SNR on a silent input.
NoiseAddition AddNoiseDetailed(const AudioBuffer& audio,
                               std::optional<double> snr_db, uint64_t seed);
AudioBuffer AddNoise(const AudioBuffer& audio, std::optional<double> snr_db,
                     uint64_t seed);

// Start sample of a uniformly drawn window of `length` samples inside
// `total`: uniform over [0, total - length]. Throws TooShort if
// length > total.
size_t DrawOffsetSamples(size_t total, size_t length, uint64_t seed);

// Contiguous query_len_s slice at a seeded uniform offset.
AudioBuffer RandomOffsetSlice(const AudioBuffer& audio, double query_len_s,
                              uint64_t seed);

// Plays the audio back `rate` times faster: duration becomes
// duration / rate at the same nominal sample rate, shifting pitch and tempo
// together. Rates outside [0.97, 1.03] are accepted with a warning; rate <= 0
// throws ConfigError.
AudioBuffer ChangeRate(const AudioBuffer& audio, double rate);

struct RandomOffset {};
struct FixedOffset {
  double seconds = 0.0;
};
using OffsetPolicy = std::variant<RandomOffset, FixedOffset>;

struct DeteriorationSpec {
  std::optional<double> snr_db;
  OffsetPolicy offset = RandomOffset{};
  double rate = 1.0;
  double query_len_s = 6.0;

  void Validate() const;  // rate in [0.97, 1.03], query_len_s > 0
};

// Offset slice, then rate change, then noise; every random choice is derived
// from `seed`.
AudioBuffer MakeQuery(const AudioBuffer& audio, const DeteriorationSpec& spec,
                      uint64_t seed);

// 10 * log10(P_signal / P_noise) over whole buffers.
double MeasureSnrDb(std::span<const double> signal, std::span<const double> noise);

}  // namespace speechprint

#endif  // SPEECHPRINT_DEGRADE_H_
