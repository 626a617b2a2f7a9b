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

// Time-frequency images for the three fingerprinting front ends: a linear
// spectrogram restricted to the vocal fundamental band, and 40-band mel
// filterbanks over either the vocal band or a wider speech band.

#ifndef SPEECHPRINT_SPECTRAL_H_
#define SPEECHPRINT_SPECTRAL_H_

#include <cmath>
#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "speechprint/audio.h"
#include "speechprint/matrix.h"

namespace speechprint {

enum class Variant { kLinearVocal, kMelVocal, kMelWide };

inline constexpr Variant kAllVariants[] = {
    Variant::kLinearVocal, Variant::kMelVocal, Variant::kMelWide};

// "linear-vocal", "mel-vocal", "mel-wide".
std::string_view VariantName(Variant variant);
Variant ParseVariant(std::string_view name);  // throws ConfigError

inline constexpr double kVocalMinHz = 100.0;
inline constexpr double kVocalMaxHz = 350.0;
inline constexpr double kWideMinHz = 300.0;
inline constexpr double kWideMaxHz = 2000.0;
inline constexpr int kMelBands = 40;
inline constexpr double kDefaultWindowSeconds = 0.1;
inline constexpr double kDefaultStrideSeconds = 0.025;
// Gain inside log1p(gain * magnitude).
inline constexpr double kLogGain = 1000.0;

struct SpectralConfig {
  Variant variant = Variant::kMelVocal;
  double window_s = kDefaultWindowSeconds;
  double stride_s = kDefaultStrideSeconds;
  // Mel band count; ignored by the linear variant, whose row count is the
  // number of FFT bins that land inside the band.
  int n_bins = kMelBands;
  double f_min = kVocalMinHz;
  double f_max = kVocalMaxHz;
  // 0 picks the smallest power of two covering the window, doubled for mel
  // variants until every filter receives at least one FFT bin.
  int fft_size = 0;

  static SpectralConfig ForVariant(Variant variant,
                                   double stride_s = kDefaultStrideSeconds,
                                   double window_s = kDefaultWindowSeconds);

  // Throws ConfigError when the band/bin invariants of the variant are
  // violated or stride/window are inconsistent.
  void Validate() const;

  friend bool operator==(const SpectralConfig&, const SpectralConfig&) = default;
};

// Magnitude STFT: rows are FFT bins 0..fft_size/2, columns are frames.
struct Spectrogram {
  Matrix magnitudes;
  int sample_rate = kCanonicalSampleRate;
  size_t fft_size = 0;
  size_t window_samples = 0;
  size_t stride_samples = 0;

  double bin_hz() const {
    return static_cast<double>(sample_rate) / static_cast<double>(fft_size);
  }
};

// Log-compressed, non-negative band image: rows are bands, columns frames.
struct SpectralImage {
  Matrix data;
  double frame_stride_s = 0.0;
  SpectralConfig config;

  size_t n_bins() const { return data.rows(); }
  size_t n_frames() const { return data.cols(); }
};

// floor((n_samples - window) / stride) + 1, or 0 when shorter than a window.
size_t FrameCount(size_t n_samples, size_t window, size_t stride);

// Hann-windowed magnitude spectrogram, scaled so a full-band sinusoid of
// amplitude A peaks near A. fft_size 0 means next power of two >= window.
// Throws TooShort when the audio is shorter than one window.
Spectrogram StftMagnitude(const AudioBuffer& audio, double window_s,
                          double stride_s, size_t fft_size = 0);

// Rows of FFT bins whose center frequency lies in [f_min, f_max].
class LinearBand {
 public:
  LinearBand(size_t fft_size, int sample_rate, double f_min, double f_max);
  size_t first_bin() const { return first_; }
  size_t size() const { return count_; }
  void Apply(std::span<const double> magnitudes, std::span<double> out) const;

 private:
  size_t first_ = 0;
  size_t count_ = 0;
};

// Triangular filters with peak weight 1 and centers equally spaced in mel
// between mel(f_min) and mel(f_max) (n_mels + 2 edge points).
class MelFilterbank {
 public:
  MelFilterbank(size_t fft_size, int sample_rate, int n_mels, double f_min,
                double f_max);

  size_t size() const { return filters_.size(); }
  double center_hz(size_t m) const { return centers_hz_[m]; }
  // Weight of filter m applied to FFT bin k.
  double weight(size_t m, size_t k) const;
  // Linear (uncompressed) band energies.
  void Apply(std::span<const double> magnitudes, std::span<double> out) const;

 private:
  struct Filter {
    size_t first_bin = 0;
    std::vector<double> weights;
  };
  std::vector<Filter> filters_;
  std::vector<double> centers_hz_;
};

double HzToMel(double hz);
double MelToHz(double mel);

SpectralImage BandSelectLinear(const Spectrogram& spec, double f_min,
                               double f_max);
SpectralImage MelFilterbankImage(const Spectrogram& spec, int n_mels,
                                 double f_min, double f_max);

// Computes image columns one frame at a time. Batch and streaming
// fingerprinting both go through here so their outputs are identical.
class SpectralFrontEnd {
 public:
  explicit SpectralFrontEnd(const SpectralConfig& config,
                            int sample_rate = kCanonicalSampleRate);
  ~SpectralFrontEnd();
  SpectralFrontEnd(SpectralFrontEnd&&) noexcept;
  SpectralFrontEnd& operator=(SpectralFrontEnd&&) noexcept;

  const SpectralConfig& config() const { return config_; }
  int sample_rate() const { return sample_rate_; }
  size_t window_samples() const { return window_; }
  size_t stride_samples() const { return stride_; }
  size_t fft_size() const;
  size_t n_bins() const;
  double frame_stride_s() const {
    return static_cast<double>(stride_) / sample_rate_;
  }

  // `frame` holds exactly window_samples() samples; `out` has n_bins() slots.
  void Column(std::span<const double> frame, std::span<double> out);

 private:
  struct Impl;
  SpectralConfig config_;
  int sample_rate_;
  size_t window_;
  size_t stride_;
  std::unique_ptr<Impl> impl_;
};

// Full image for one variant. Throws TooShort for audio under one window.
SpectralImage MakeImage(const AudioBuffer& audio, const SpectralConfig& config);

// Image as CSV, one row per band.
std::string ImageToCsv(const SpectralImage& image);

// Log compression shared by every variant.
inline double CompressMagnitude(double x) { return std::log1p(kLogGain * x); }

}  // namespace speechprint

#endif  // SPEECHPRINT_SPECTRAL_H_
