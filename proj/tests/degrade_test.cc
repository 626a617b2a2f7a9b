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


#include <algorithm>
#include <cmath>
#include <vector>

#include "gtest/gtest.h"
#include "speechprint/corpus.h"
#include "speechprint/degrade.h"
#include "speechprint/errors.h"
#include "speechprint/hash.h"
#include "test_util.h"

namespace speechprint {
namespace {

using testing::DominantHz;
using testing::Sine;

// Asymptotic Kolmogorov distribution tail, with Stephens' small-sample
// correction.
double KolmogorovPValue(double d, size_t n) {
  const double sn = std::sqrt(static_cast<double>(n));
  const double lambda = d * (sn + 0.12 + 0.11 / sn);
  double p = 0.0;
  for (int k = 1; k <= 100; ++k) {
    p += 2.0 * ((k % 2) ? 1.0 : -1.0) * std::exp(-2.0 * k * k * lambda * lambda);
  }
  return std::clamp(p, 0.0, 1.0);
}

AudioBuffer Speech(double seconds, uint64_t seed = 1) {
  return SynthesizeSpeech(DefaultSpeakers(1)[0], seconds, seed);
}

TEST(NoiseTest, NoSnrMeansIdentical) {
  const AudioBuffer audio = Speech(2.0);
  EXPECT_EQ(AddNoise(audio, std::nullopt, 1), audio);
}

TEST(NoiseTest, RealizedSnrMatchesRequest) {
  const AudioBuffer audio = Speech(3.0);
  for (uint64_t seed = 0; seed < 100; ++seed) {
    const double snr = -5.0 + 0.4 * static_cast<double>(seed);
    const NoiseAddition n = AddNoiseDetailed(audio, snr, seed);
    EXPECT_NEAR(MeasureSnrDb(audio.samples(), n.noise), snr, 0.01) << seed;
  }
}

TEST(NoiseTest, DeterministicPerSeed) {
  const AudioBuffer audio = Speech(1.0);
  EXPECT_EQ(AddNoise(audio, 20.0, 9), AddNoise(audio, 20.0, 9));
  EXPECT_NE(AddNoise(audio, 20.0, 9), AddNoise(audio, 20.0, 10));
}

TEST(NoiseTest, SilentInputRejected) {
  const AudioBuffer silence(std::vector<double>(800, 0.0), 8000);
  EXPECT_THROW(AddNoise(silence, 10.0, 1), SilentSignal);
  EXPECT_EQ(AddNoise(silence, std::nullopt, 1), silence);
}

TEST(NoiseTest, LoudNoiseIsClipped) {
  const NoiseAddition n = AddNoiseDetailed(Sine(200.0, 0.5, 8000, 0.9), -20.0, 3);
  EXPECT_GT(n.clipped_samples, 0u);
  for (double s : n.audio.samples()) EXPECT_LE(std::abs(s), 1.0);
}

TEST(OffsetTest, FullLengthForcesZero) {
  for (uint64_t seed = 0; seed < 10; ++seed) EXPECT_EQ(DrawOffsetSamples(1000, 1000, seed), 0u);
  const AudioBuffer audio = Speech(2.0);
  EXPECT_EQ(RandomOffsetSlice(audio, 2.0, 5), audio);
  EXPECT_THROW(DrawOffsetSamples(1000, 1001, 1), TooShort);
  EXPECT_THROW(RandomOffsetSlice(audio, 2.5, 1), TooShort);
}

TEST(OffsetTest, UniformOverAdmissibleStarts) {
  const size_t n = 10000;
  std::vector<double> starts(n);
  for (size_t i = 0; i < n; ++i) {
    starts[i] = static_cast<double>(DrawOffsetSamples(80000, 48000, MixSeed(99, i))) / 8000.0;
  }
  std::sort(starts.begin(), starts.end());
  EXPECT_GE(starts.front(), 0.0);
  EXPECT_LE(starts.back(), 4.0);
  double d = 0.0;
  for (size_t i = 0; i < n; ++i) {
    const double cdf = starts[i] / 4.0;
    d = std::max({d, (i + 1.0) / n - cdf, cdf - static_cast<double>(i) / n});
  }
  EXPECT_GT(KolmogorovPValue(d, n), 0.01) << "D = " << d;
}

TEST(RateTest, DurationScales) {
  const AudioBuffer audio = Speech(10.0);
  EXPECT_EQ(ChangeRate(audio, 1.0).size(), audio.size());
  EXPECT_NEAR(ChangeRate(audio, 1.03).duration_seconds(), 10.0 / 1.03, 1.0 / 8000);
  EXPECT_NEAR(ChangeRate(audio, 0.97).duration_seconds(), 10.0 / 0.97, 1.0 / 8000);
  EXPECT_THROW(ChangeRate(audio, 0.0), ConfigError);
  EXPECT_THROW(ChangeRate(audio, -1.0), ConfigError);
}

TEST(RateTest, PitchShiftsWithRate) {
  const size_t n = 8000;
  const AudioBuffer faster = ChangeRate(Sine(200.0, 1.2), 1.03);
  EXPECT_NEAR(DominantHz(faster, n), 206.0, 8000.0 / n);
}

TEST(MakeQueryTest, NoDegradationIsSlice) {
  const AudioBuffer audio = Speech(10.0);
  DeteriorationSpec spec;
  spec.offset = FixedOffset{2.0};
  spec.query_len_s = 3.0;
  EXPECT_EQ(MakeQuery(audio, spec, 1), SliceSeconds(audio, 2.0, 3.0));
}

TEST(MakeQueryTest, DeterministicAndValidated) {
  const AudioBuffer audio = Speech(10.0);
  DeteriorationSpec spec;
  spec.snr_db = 20.0;
  spec.rate = 0.98;
  EXPECT_EQ(MakeQuery(audio, spec, 4), MakeQuery(audio, spec, 4));
  EXPECT_NEAR(MakeQuery(audio, spec, 4).duration_seconds(), 6.0 / 0.98, 1.0 / 8000);
  spec.rate = 1.05;
  EXPECT_THROW(MakeQuery(audio, spec, 4), ConfigError);
  spec.rate = 1.0;
  spec.query_len_s = 11.0;
  EXPECT_THROW(MakeQuery(audio, spec, 4), TooShort);
}

TEST(MakeQueryTest, NoiseMeasuredAgainstFinalSignal) {
  const AudioBuffer audio = Speech(10.0);
  DeteriorationSpec spec;
  spec.rate = 1.02;
  spec.offset = FixedOffset{1.0};
  const AudioBuffer clean = MakeQuery(audio, spec, 8);
  spec.snr_db = 15.0;
  const AudioBuffer noisy = MakeQuery(audio, spec, 8);
  ASSERT_EQ(clean.size(), noisy.size());
  std::vector<double> noise(clean.size());
  for (size_t i = 0; i < noise.size(); ++i) noise[i] = noisy.samples()[i] - clean.samples()[i];
  EXPECT_NEAR(MeasureSnrDb(clean.samples(), noise), 15.0, 0.01);
}

}  // namespace
}  // namespace speechprint
