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

// Canonical in-memory audio and the sample-level operations on it.

#ifndef SPEECHPRINT_AUDIO_H_
#define SPEECHPRINT_AUDIO_H_

#include <cstddef>
#include <span>
#include <vector>

namespace speechprint {

// Rate all fingerprinting runs at. Telephony early media is narrowband.
inline constexpr int kCanonicalSampleRate = 8000;

// Mono samples in [-1, 1] plus a sample rate. Immutable once constructed, so
// a buffer can be shared freely between threads.
class AudioBuffer {
 public:
  AudioBuffer() = default;

  // Throws ConfigError for a non-positive rate and RangeError for samples
  // that are not finite or exceed unit magnitude.
  AudioBuffer(std::vector<double> samples, int sample_rate);

  std::span<const double> samples() const { return samples_; }
  int sample_rate() const { return sample_rate_; }
  size_t size() const { return samples_.size(); }
  bool empty() const { return samples_.empty(); }
  double duration_seconds() const {
    return sample_rate_ > 0 ? static_cast<double>(samples_.size()) / sample_rate_
                            : 0.0;
  }

  friend bool operator==(const AudioBuffer&, const AudioBuffer&) = default;

 private:
  std::vector<double> samples_;
  int sample_rate_ = kCanonicalSampleRate;
};

// Clamps every sample to [-1, 1]; returns the number of samples changed.
size_t ClipInPlace(std::span<double> samples);

// Band-limited arbitrary-ratio resampler (Kaiser-windowed sinc, 16 zero
// crossings per side on the narrower band, beta 8; roughly 80 dB stopband
// rejection, passband edge at 95% of the output Nyquist when downsampling).
//
// Works incrementally: Push() emits every output sample whose kernel support
// is fully available; Finish() flushes the tail against zero padding. Feeding
// a signal in any chunking produces the same output as one-shot resampling,
// and the total output length is round(n_in * output_rate / input_rate).
class StreamingResampler {
 public:
  StreamingResampler(double input_rate, double output_rate);

  void Push(std::span<const double> input, std::vector<double>& output);
  void Finish(std::vector<double>& output);

  double ratio() const { return ratio_; }

 private:
  double Interpolate(double position) const;
  void Emit(std::vector<double>& output, bool flushing);

  double ratio_;       // output samples per input sample
  double step_;        // input samples per output sample
  double cutoff_;      // normalized to the input Nyquist
  double half_width_;  // kernel half-width in input samples
  std::vector<double> history_;
  long long history_base_ = 0;  // absolute index of history_[0]
  long long consumed_ = 0;      // total input samples pushed
  long long produced_ = 0;      // total output samples emitted
  bool finished_ = false;
};

// One-shot resampling of raw samples; no clipping.
std::vector<double> ResampleSamples(std::span<const double> samples,
                                    double input_rate, double output_rate);

// Resamples to target_rate and clips the result to [-1, 1]. Returns the input
// unchanged when the rates already match. Throws ConfigError if
// target_rate <= 0.
AudioBuffer Resample(const AudioBuffer& audio, int target_rate);

// Contiguous sub-buffer [start_s, start_s + dur_s). Throws RangeError when the
// window falls outside the buffer.
AudioBuffer SliceSeconds(const AudioBuffer& audio, double start_s,
                         double dur_s);

}  // namespace speechprint

#endif  // SPEECHPRINT_AUDIO_H_
