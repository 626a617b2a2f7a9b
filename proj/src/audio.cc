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

#include "speechprint/audio.h"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <utility>

#include "speechprint/errors.h"

namespace speechprint {

AudioBuffer::AudioBuffer(std::vector<double> samples, int sample_rate)
    : samples_(std::move(samples)), sample_rate_(sample_rate) {
  if (sample_rate_ <= 0) throw ConfigError("sample rate must be positive");
  for (double s : samples_) {
    if (!std::isfinite(s) || std::abs(s) > 1.0) {
      throw RangeError("audio samples must be finite and within [-1, 1]");
    }
  }
}

size_t ClipInPlace(std::span<double> samples) {
  size_t clipped = 0;
  for (double& s : samples) {
    if (s > 1.0) {
      s = 1.0;
      ++clipped;
    } else if (s < -1.0) {
      s = -1.0;
      ++clipped;
    }
  }
  return clipped;
}

namespace {

constexpr int kZeroCrossings = 16;
constexpr double kKaiserBeta = 8.0;
constexpr double kPassbandFraction = 0.95;
constexpr int kTableResolution = 4096;  // entries per zero crossing

// K(u) = sinc(u) * kaiser(u / kZeroCrossings) for u in [0, kZeroCrossings].
const std::vector<double>& KernelTable() {
  static const std::vector<double> table = [] {
    std::vector<double> t(kZeroCrossings * kTableResolution + 2, 0.0);
    const double norm = std::cyl_bessel_i(0.0, kKaiserBeta);
    for (size_t i = 0; i + 1 < t.size(); ++i) {
      const double u = static_cast<double>(i) / kTableResolution;
      const double ratio = u / kZeroCrossings;
      if (ratio >= 1.0) continue;
      const double sinc =
          u == 0.0 ? 1.0
                   : std::sin(std::numbers::pi * u) / (std::numbers::pi * u);
      const double window =
          std::cyl_bessel_i(0.0, kKaiserBeta * std::sqrt(1.0 - ratio * ratio)) /
          norm;
      t[i] = sinc * window;
    }
    return t;
  }();
  return table;
}

inline double KernelAt(const std::vector<double>& table, double u) {
  const double pos = u * kTableResolution;
  const auto idx = static_cast<size_t>(pos);
  if (idx + 1 >= table.size()) return 0.0;
  const double frac = pos - static_cast<double>(idx);
  return table[idx] + frac * (table[idx + 1] - table[idx]);
}

}  // namespace

StreamingResampler::StreamingResampler(double input_rate, double output_rate) {
  if (!(input_rate > 0.0) || !(output_rate > 0.0)) {
    throw ConfigError("resampling rates must be positive");
  }
  ratio_ = output_rate / input_rate;
  step_ = input_rate / output_rate;
  cutoff_ = kPassbandFraction * std::min(1.0, ratio_);
  half_width_ = kZeroCrossings / cutoff_;
}

double StreamingResampler::Interpolate(double position) const {
  const auto& table = KernelTable();
  const auto first = static_cast<long long>(std::ceil(position - half_width_));
  const auto last = static_cast<long long>(std::floor(position + half_width_));
  double acc = 0.0;
  for (long long k = std::max(first, history_base_); k <= last; ++k) {
    if (k >= consumed_) break;
    const double x = history_[static_cast<size_t>(k - history_base_)];
    acc += x * KernelAt(table, cutoff_ * std::abs(position - k));
  }
  return acc * cutoff_;
}

void StreamingResampler::Emit(std::vector<double>& output, bool flushing) {
  const auto total = static_cast<long long>(std::llround(consumed_ * ratio_));
  while (true) {
    if (flushing && produced_ >= total) break;
    const double t = static_cast<double>(produced_) * step_;
    if (!flushing) {
      const auto last = static_cast<long long>(std::floor(t + half_width_));
      if (last >= consumed_) break;
    }
    output.push_back(Interpolate(t));
    ++produced_;
  }
  // Drop history no future output can reach.
  const double next = static_cast<double>(produced_) * step_;
  const auto keep_from =
      static_cast<long long>(std::ceil(next - half_width_)) - 1;
  if (keep_from > history_base_ + 4096) {
    const auto drop = std::min<long long>(keep_from - history_base_,
                                          static_cast<long long>(history_.size()));
    history_.erase(history_.begin(), history_.begin() + drop);
    history_base_ += drop;
  }
}

void StreamingResampler::Push(std::span<const double> input,
                              std::vector<double>& output) {
  if (finished_) throw ConfigError("resampler already finished");
  history_.insert(history_.end(), input.begin(), input.end());
  consumed_ += static_cast<long long>(input.size());
  Emit(output, false);
}

void StreamingResampler::Finish(std::vector<double>& output) {
  if (finished_) return;
  Emit(output, true);
  finished_ = true;
}

std::vector<double> ResampleSamples(std::span<const double> samples,
                                    double input_rate, double output_rate) {
  if (input_rate == output_rate) {
    return {samples.begin(), samples.end()};
  }
  StreamingResampler resampler(input_rate, output_rate);
  std::vector<double> out;
  out.reserve(static_cast<size_t>(samples.size() * resampler.ratio()) + 1);
  resampler.Push(samples, out);
  resampler.Finish(out);
  return out;
}

AudioBuffer Resample(const AudioBuffer& audio, int target_rate) {
  if (target_rate <= 0) throw ConfigError("target rate must be positive");
  if (audio.sample_rate() == target_rate) return audio;
  auto out = ResampleSamples(audio.samples(), audio.sample_rate(), target_rate);
  ClipInPlace(out);
  return AudioBuffer(std::move(out), target_rate);
}

AudioBuffer SliceSeconds(const AudioBuffer& audio, double start_s,
                         double dur_s) {
  if (!(start_s >= 0.0) || !(dur_s >= 0.0)) {
    throw RangeError("slice start and duration must be non-negative");
  }
  const auto start = static_cast<size_t>(std::llround(start_s * audio.sample_rate()));
  const auto count = static_cast<size_t>(std::llround(dur_s * audio.sample_rate()));
  if (start + count > audio.size()) {
    throw RangeError("slice extends past the end of the audio");
  }
  auto samples = audio.samples().subspan(start, count);
  return AudioBuffer({samples.begin(), samples.end()}, audio.sample_rate());
}

}  // namespace speechprint
