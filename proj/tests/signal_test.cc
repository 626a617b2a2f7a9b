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


#include <cmath>
#include <cstdint>
#include <cstring>
#include <random>
#include <string>
#include <vector>

#include "gtest/gtest.h"
#include "speechprint/audio.h"
#include "speechprint/errors.h"
#include "speechprint/wav.h"
#include "test_util.h"

namespace speechprint {
namespace {

using testing::DominantHz;
using testing::Sine;

// Builds a canonical 44-byte-header WAV by hand.
std::vector<uint8_t> RawWav(uint16_t format_tag, uint16_t channels, uint32_t rate,
                            uint16_t bits, const std::vector<uint8_t>& data) {
  std::vector<uint8_t> out;
  auto put = [&](uint64_t v, int n) {
    for (int i = 0; i < n; ++i) out.push_back(static_cast<uint8_t>(v >> (8 * i)));
  };
  auto tag = [&](const char* s) { out.insert(out.end(), s, s + 4); };
  tag("RIFF");
  put(36 + data.size(), 4);
  tag("WAVE");
  tag("fmt ");
  put(16, 4);
  put(format_tag, 2);
  put(channels, 2);
  put(rate, 4);
  put(rate * channels * bits / 8, 4);
  put(channels * bits / 8, 2);
  put(bits, 2);
  tag("data");
  put(data.size(), 4);
  out.insert(out.end(), data.begin(), data.end());
  return out;
}

std::vector<uint8_t> Pcm16(const std::vector<int16_t>& v) {
  std::vector<uint8_t> out;
  for (int16_t s : v) {
    out.push_back(static_cast<uint8_t>(s & 0xff));
    out.push_back(static_cast<uint8_t>((static_cast<uint16_t>(s) >> 8) & 0xff));
  }
  return out;
}

TEST(WavTest, SilenceDecodesToZeros) {
  const auto audio = DecodeWav(RawWav(1, 1, 8000, 16, Pcm16(std::vector<int16_t>(8000, 0))));
  EXPECT_EQ(audio.sample_rate(), 8000);
  ASSERT_EQ(audio.size(), 8000u);
  for (double s : audio.samples()) EXPECT_EQ(s, 0.0);
}

TEST(WavTest, StereoOppositeChannelsDownmixToZero) {
  std::vector<int16_t> frames;
  for (int i = 0; i < 100; ++i) {
    frames.push_back(16384);
    frames.push_back(-16384);
  }
  const auto audio = DecodeWav(RawWav(1, 2, 8000, 16, Pcm16(frames)));
  ASSERT_EQ(audio.size(), 100u);
  for (double s : audio.samples()) EXPECT_EQ(s, 0.0);
}

TEST(WavTest, Pcm16ScaleIsOneOver32768) {
  const std::vector<int16_t> values = {-32768, -1, 0, 1, 12345, 32767};
  const auto audio = DecodeWav(RawWav(1, 1, 8000, 16, Pcm16(values)));
  ASSERT_EQ(audio.size(), values.size());
  for (size_t i = 0; i < values.size(); ++i) {
    EXPECT_EQ(audio.samples()[i], values[i] / 32768.0);
  }
  EXPECT_EQ(audio.samples()[0], -1.0);
}

TEST(WavTest, Float32ClipsAndCounts) {
  std::vector<uint8_t> data;
  for (float f : {0.25f, 1.5f, -2.0f}) {
    uint8_t b[4];
    std::memcpy(b, &f, 4);
    data.insert(data.end(), b, b + 4);
  }
  DecodeStats stats;
  const auto audio = DecodeWav(RawWav(3, 1, 16000, 32, data), &stats);
  EXPECT_EQ(audio.sample_rate(), 16000);
  ASSERT_EQ(audio.size(), 3u);
  EXPECT_EQ(audio.samples()[0], 0.25);
  EXPECT_EQ(audio.samples()[1], 1.0);
  EXPECT_EQ(audio.samples()[2], -1.0);
  EXPECT_EQ(stats.clipped_samples, 2u);
}

TEST(WavTest, EncodeDecodeRoundTrip) {
  const AudioBuffer tone = Sine(300.0, 0.5);
  const auto f32 = DecodeWav(EncodeWav(tone, SampleFormat::kFloat32));
  ASSERT_EQ(f32.size(), tone.size());
  for (size_t i = 0; i < tone.size(); ++i) {
    EXPECT_EQ(f32.samples()[i], static_cast<float>(tone.samples()[i]));
  }
  const auto pcm = DecodeWav(EncodeWav(tone));
  for (size_t i = 0; i < tone.size(); ++i) {
    EXPECT_NEAR(pcm.samples()[i], tone.samples()[i], 1.0 / 32768.0);
  }
}

TEST(WavTest, Errors) {
  EXPECT_THROW(DecodeWav(std::vector<uint8_t>{'R', 'I', 'F', 'X', 0, 0}), DecodeError);
  EXPECT_THROW(DecodeWav(std::vector<uint8_t>(10, 0)), DecodeError);
  EXPECT_THROW(DecodeWav(RawWav(2, 1, 8000, 4, {0, 0})), UnsupportedFormat);
  EXPECT_THROW(DecodeWav(RawWav(1, 1, 8000, 24, {0, 0, 0})), UnsupportedFormat);
}

TEST(WavTest, StreamDecoderMatchesBatchForAnyChunking) {
  const auto bytes = EncodeWav(Sine(440.0, 0.3, 11025));
  const auto batch = DecodeWav(bytes);
  std::mt19937 gen(3);
  for (int round = 0; round < 5; ++round) {
    WavStreamDecoder decoder;
    std::vector<double> out;
    size_t pos = 0;
    while (pos < bytes.size()) {
      const size_t n = std::min<size_t>(1 + gen() % 97, bytes.size() - pos);
      decoder.Push(std::span<const uint8_t>(bytes).subspan(pos, n), out);
      pos += n;
    }
    decoder.Finish();
    ASSERT_TRUE(decoder.format().has_value());
    EXPECT_EQ(decoder.format()->sample_rate, 11025);
    EXPECT_TRUE(decoder.data_complete());
    EXPECT_EQ(out, std::vector<double>(batch.samples().begin(), batch.samples().end()));
  }
}

TEST(WavTest, StreamDecoderRejectsTruncatedHeader) {
  const auto bytes = EncodeWav(Sine(440.0, 0.1));
  WavStreamDecoder decoder;
  std::vector<double> out;
  decoder.Push(std::span<const uint8_t>(bytes).first(20), out);
  EXPECT_THROW(decoder.Finish(), DecodeError);
}

TEST(ResampleTest, SameRateIsIdentity) {
  const AudioBuffer tone = Sine(200.0, 0.25);
  EXPECT_EQ(Resample(tone, 8000), tone);
}

TEST(ResampleTest, HalvingRateHalvesLength) {
  const AudioBuffer x = Sine(200.0, 1000.0 / 16000.0, 16000);
  ASSERT_EQ(x.size(), 1000u);
  const AudioBuffer y = Resample(x, 8000);
  EXPECT_EQ(y.size(), 500u);
  EXPECT_EQ(y.sample_rate(), 8000);
}

TEST(ResampleTest, TonePeakSurvivesDownsampling) {
  const AudioBuffer y = Resample(Sine(200.0, 1.0, 16000), 8000);
  const size_t n = 8000;
  EXPECT_NEAR(DominantHz(y, n), 200.0, 8000.0 / n);
}

TEST(ResampleTest, RemovesContentAboveNewNyquist) {
  const AudioBuffer y = Resample(Sine(6000.0, 0.5, 16000), 8000);
  double peak = 0.0;
  for (double s : y.samples().subspan(200, y.size() - 400)) peak = std::max(peak, std::abs(s));
  EXPECT_LT(peak, 0.01);
}

TEST(ResampleTest, StreamingMatchesOneShot) {
  const AudioBuffer x = testing::WhiteNoise(0.7, 11, 0.2, 44100);
  const auto batch = ResampleSamples(x.samples(), 44100, 8000);
  EXPECT_EQ(batch.size(), static_cast<size_t>(std::llround(x.size() * 8000.0 / 44100.0)));
  std::mt19937 gen(5);
  StreamingResampler rs(44100, 8000);
  std::vector<double> out;
  size_t pos = 0;
  while (pos < x.size()) {
    const size_t n = std::min<size_t>(1 + gen() % 3000, x.size() - pos);
    rs.Push(x.samples().subspan(pos, n), out);
    pos += n;
  }
  rs.Finish(out);
  ASSERT_EQ(out.size(), batch.size());
  for (size_t i = 0; i < out.size(); ++i) EXPECT_NEAR(out[i], batch[i], 1e-12) << i;
}

TEST(SliceTest, Cases) {
  std::vector<double> ramp(80000);
  for (size_t i = 0; i < ramp.size(); ++i) ramp[i] = static_cast<double>(i) / 80000.0;
  const AudioBuffer audio(ramp, 8000);
  EXPECT_EQ(SliceSeconds(audio, 0.0, 10.0), audio);
  EXPECT_THROW(SliceSeconds(audio, 9.5, 1.0), RangeError);
  EXPECT_THROW(SliceSeconds(audio, -1.0, 1.0), RangeError);
  const AudioBuffer s = SliceSeconds(audio, 2.0, 3.0);
  ASSERT_EQ(s.size(), 24000u);
  EXPECT_EQ(s.samples()[0], audio.samples()[16000]);
  EXPECT_EQ(s.samples()[23999], audio.samples()[39999]);
}

TEST(AudioBufferTest, RejectsOutOfRangeSamples) {
  EXPECT_THROW(AudioBuffer({0.0, 1.5}, 8000), RangeError);
  EXPECT_THROW(AudioBuffer({std::nan("")}, 8000), RangeError);
  std::vector<double> x = {2.0, -3.0, 0.5};
  EXPECT_EQ(ClipInPlace(x), 2u);
  EXPECT_EQ(x, (std::vector<double>{1.0, -1.0, 0.5}));
}

}  // namespace
}  // namespace speechprint
