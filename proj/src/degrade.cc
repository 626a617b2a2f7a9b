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

#include "speechprint/degrade.h"

#include <cmath>
#include <string>

#include "speechprint/errors.h"
#include "speechprint/hash.h"
#include "speechprint/log.h"

namespace speechprint {
namespace {

double MeanPower(std::span<const double> x) {
  if (x.empty()) return 0.0;
  double acc = 0.0;
  for (double v : x) acc += v * v;
  return acc / static_cast<double>(x.size());
}

}  // namespace

double MeasureSnrDb(std::span<const double> signal,
                    std::span<const double> noise) {
  return 10.0 * std::log10(MeanPower(signal) / MeanPower(noise));
}

NoiseAddition AddNoiseDetailed(const AudioBuffer& audio,
                               std::optional<double> snr_db, uint64_t seed) {
  NoiseAddition result;
  if (!snr_db) {
    result.audio = audio;
    result.noise.assign(audio.size(), 0.0);
    return result;
  }
  const double signal_power = MeanPower(audio.samples());
  if (!(signal_power > 0.0)) {
    throw SilentSignal("cannot set an SNR against a silent signal");
  }
  Rng rng(seed);
  std::vector<double> noise(audio.size());
  for (double& n : noise) n = rng.Gaussian();
  const double raw_power = MeanPower(noise);
  const double target_power = signal_power / std::pow(10.0, *snr_db / 10.0);
  const double gain = std::sqrt(target_power / raw_power);
  for (double& n : noise) n *= gain;

  std::vector<double> out(audio.size());
  const auto in = audio.samples();
  for (size_t i = 0; i < out.size(); ++i) out[i] = in[i] + noise[i];
  result.clipped_samples = ClipInPlace(out);
  result.audio = AudioBuffer(std::move(out), audio.sample_rate());
  result.noise = std::move(noise);
  return result;
}

AudioBuffer AddNoise(const AudioBuffer& audio, std::optional<double> snr_db,
                     uint64_t seed) {
  return AddNoiseDetailed(audio, snr_db, seed).audio;
}

size_t DrawOffsetSamples(size_t total, size_t length, uint64_t seed) {
  if (length > total) throw TooShort("query longer than the audio");
  Rng rng(seed);
  return static_cast<size_t>(rng.Below(total - length + 1));
}

AudioBuffer RandomOffsetSlice(const AudioBuffer& audio, double query_len_s,
                              uint64_t seed) {
  if (!(query_len_s > 0.0)) throw ConfigError("query length must be positive");
  const auto length =
      static_cast<size_t>(std::llround(query_len_s * audio.sample_rate()));
  const size_t start = DrawOffsetSamples(audio.size(), length, seed);
  auto samples = audio.samples().subspan(start, length);
  return AudioBuffer({samples.begin(), samples.end()}, audio.sample_rate());
}

AudioBuffer ChangeRate(const AudioBuffer& audio, double rate) {
  if (!(rate > 0.0)) throw ConfigError("playback rate must be positive");
  if (rate < kMinBenchRate || rate > kMaxBenchRate) {
    LogWarning("playback rate " + std::to_string(rate) +
               " outside the benchmark range [0.97, 1.03]");
  }
  if (rate == 1.0) return audio;
  auto out = ResampleSamples(audio.samples(), audio.sample_rate() * rate,
                             audio.sample_rate());
  ClipInPlace(out);
  return AudioBuffer(std::move(out), audio.sample_rate());
}

void DeteriorationSpec::Validate() const {
  if (!(rate >= kMinBenchRate && rate <= kMaxBenchRate)) {
    throw ConfigError("rate must lie in [0.97, 1.03]");
  }
  if (!(query_len_s > 0.0)) throw ConfigError("query length must be positive");
  if (const auto* fixed = std::get_if<FixedOffset>(&offset)) {
    if (!(fixed->seconds >= 0.0)) throw ConfigError("offset must be >= 0");
  }
}

AudioBuffer MakeQuery(const AudioBuffer& audio, const DeteriorationSpec& spec,
                      uint64_t seed) {
  spec.Validate();
  AudioBuffer query;
  if (const auto* fixed = std::get_if<FixedOffset>(&spec.offset)) {
    query = SliceSeconds(audio, fixed->seconds, spec.query_len_s);
  } else {
    query = RandomOffsetSlice(audio, spec.query_len_s, MixSeed(seed, 1));
  }
  query = ChangeRate(query, spec.rate);
  return AddNoise(query, spec.snr_db, MixSeed(seed, 2));
}

}  // namespace speechprint
