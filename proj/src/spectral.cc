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

#include "speechprint/spectral.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <optional>
#include <sstream>

#include "speechprint/errors.h"
#include "speechprint/fft.h"

namespace speechprint {

std::string_view VariantName(Variant variant) {
  switch (variant) {
    case Variant::kLinearVocal:
      return "linear-vocal";
    case Variant::kMelVocal:
      return "mel-vocal";
    case Variant::kMelWide:
      return "mel-wide";
  }
  return "unknown";
}

Variant ParseVariant(std::string_view name) {
  for (Variant v : kAllVariants) {
    if (VariantName(v) == name) return v;
  }
  throw ConfigError("unknown variant '" + std::string(name) + "'");
}

SpectralConfig SpectralConfig::ForVariant(Variant variant, double stride_s,
                                          double window_s) {
  SpectralConfig cfg;
  cfg.variant = variant;
  cfg.stride_s = stride_s;
  cfg.window_s = window_s;
  cfg.n_bins = kMelBands;
  if (variant == Variant::kMelWide) {
    cfg.f_min = kWideMinHz;
    cfg.f_max = kWideMaxHz;
  } else {
    cfg.f_min = kVocalMinHz;
    cfg.f_max = kVocalMaxHz;
  }
  return cfg;
}

void SpectralConfig::Validate() const {
  if (!(stride_s > 0.0)) throw ConfigError("stride must be positive");
  if (!(window_s >= stride_s)) throw ConfigError("window shorter than stride");
  const bool wide = variant == Variant::kMelWide;
  const double want_min = wide ? kWideMinHz : kVocalMinHz;
  const double want_max = wide ? kWideMaxHz : kVocalMaxHz;
  if (f_min != want_min || f_max != want_max) {
    throw ConfigError(std::string(VariantName(variant)) +
                      " band must span exactly its fixed frequency range");
  }
  if (variant != Variant::kLinearVocal && n_bins != kMelBands) {
    throw ConfigError("mel variants use 40 bands");
  }
  if (fft_size < 0 ||
      (fft_size > 0 && !IsPowerOfTwo(static_cast<size_t>(fft_size)))) {
    throw ConfigError("fft_size must be 0 or a power of two");
  }
}

size_t FrameCount(size_t n_samples, size_t window, size_t stride) {
  if (n_samples < window || stride == 0) return 0;
  return (n_samples - window) / stride + 1;
}

namespace {

size_t SecondsToSamples(double seconds, int sample_rate) {
  return static_cast<size_t>(std::llround(seconds * sample_rate));
}

// Hann-windowed FFT magnitudes of one frame.
class MagnitudeAnalyzer {
 public:
  MagnitudeAnalyzer(size_t window, size_t fft_size)
      : fft_(fft_size), window_(window) {
    if (fft_size < window) throw ConfigError("FFT shorter than window");
    double sum = 0.0;
    for (size_t n = 0; n < window; ++n) {
      window_[n] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * n / window);
      sum += window_[n];
    }
    scale_ = 2.0 / sum;
  }

  size_t bins() const { return fft_.bins(); }
  size_t fft_size() const { return fft_.size(); }

  void Compute(std::span<const double> frame, std::span<double> mags) {
    auto in = fft_.input();
    for (size_t n = 0; n < window_.size(); ++n) in[n] = frame[n] * window_[n];
    std::fill(in.begin() + static_cast<long>(window_.size()), in.end(), 0.0);
    fft_.Execute();
    auto out = fft_.output();
    for (size_t k = 0; k < out.size(); ++k) mags[k] = std::abs(out[k]) * scale_;
  }

 private:
  RealFft fft_;
  std::vector<double> window_;
  double scale_ = 1.0;
};

void CheckBand(double f_min, double f_max, int sample_rate) {
  if (!(f_min >= 0.0) || !(f_min < f_max)) {
    throw ConfigError("frequency band must satisfy 0 <= f_min < f_max");
  }
  if (f_max > sample_rate / 2.0) throw ConfigError("f_max above Nyquist");
}

}  // namespace

Spectrogram StftMagnitude(const AudioBuffer& audio, double window_s,
                          double stride_s, size_t fft_size) {
  const int sr = audio.sample_rate();
  const size_t window = SecondsToSamples(window_s, sr);
  const size_t stride = SecondsToSamples(stride_s, sr);
  if (window == 0 || stride == 0) {
    throw ConfigError("window and stride must cover at least one sample");
  }
  if (fft_size == 0) fft_size = NextPowerOfTwo(window);
  const size_t frames = FrameCount(audio.size(), window, stride);
  if (frames == 0) throw TooShort("audio shorter than one analysis window");

  MagnitudeAnalyzer analyzer(window, fft_size);
  Spectrogram spec;
  spec.sample_rate = sr;
  spec.fft_size = fft_size;
  spec.window_samples = window;
  spec.stride_samples = stride;
  spec.magnitudes = Matrix(analyzer.bins(), frames);
  std::vector<double> mags(analyzer.bins());
  const auto samples = audio.samples();
  for (size_t f = 0; f < frames; ++f) {
    analyzer.Compute(samples.subspan(f * stride, window), mags);
    for (size_t k = 0; k < mags.size(); ++k) spec.magnitudes(k, f) = mags[k];
  }
  return spec;
}

LinearBand::LinearBand(size_t fft_size, int sample_rate, double f_min,
                       double f_max) {
  CheckBand(f_min, f_max, sample_rate);
  const double bin_hz = static_cast<double>(sample_rate) / fft_size;
  const auto first = static_cast<long>(std::ceil(f_min / bin_hz - 1e-9));
  const auto last = static_cast<long>(std::floor(f_max / bin_hz + 1e-9));
  if (last < first) throw ConfigError("no FFT bin falls inside the band");
  first_ = static_cast<size_t>(first);
  count_ = static_cast<size_t>(last - first + 1);
}

void LinearBand::Apply(std::span<const double> magnitudes,
                       std::span<double> out) const {
  for (size_t i = 0; i < count_; ++i) out[i] = magnitudes[first_ + i];
}

double HzToMel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double MelToHz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

MelFilterbank::MelFilterbank(size_t fft_size, int sample_rate, int n_mels,
                             double f_min, double f_max) {
  if (n_mels < 2) throw ConfigError("need at least two mel bands");
  CheckBand(f_min, f_max, sample_rate);
  const double mel_lo = HzToMel(f_min);
  const double mel_hi = HzToMel(f_max);
  std::vector<double> edges(static_cast<size_t>(n_mels) + 2);
  for (size_t i = 0; i < edges.size(); ++i) {
    edges[i] = MelToHz(mel_lo + (mel_hi - mel_lo) * i / (n_mels + 1));
  }
  const double bin_hz = static_cast<double>(sample_rate) / fft_size;
  const size_t n_bins = fft_size / 2 + 1;
  for (int m = 1; m <= n_mels; ++m) {
    const double lo = edges[m - 1];
    const double mid = edges[m];
    const double hi = edges[m + 1];
    Filter filter;
    bool started = false;
    for (size_t k = 0; k < n_bins; ++k) {
      const double f = k * bin_hz;
      const double w =
          std::max(0.0, std::min((f - lo) / (mid - lo), (hi - f) / (hi - mid)));
      if (w > 0.0) {
        if (!started) {
          filter.first_bin = k;
          started = true;
        }
        filter.weights.resize(k - filter.first_bin + 1, 0.0);
        filter.weights.back() = w;
      }
    }
    if (!started) {
      throw ConfigError("band too narrow for the requested mel filters at this "
                        "FFT resolution");
    }
    filters_.push_back(std::move(filter));
    centers_hz_.push_back(mid);
  }
}

double MelFilterbank::weight(size_t m, size_t k) const {
  const Filter& f = filters_[m];
  if (k < f.first_bin || k >= f.first_bin + f.weights.size()) return 0.0;
  return f.weights[k - f.first_bin];
}

void MelFilterbank::Apply(std::span<const double> magnitudes,
                          std::span<double> out) const {
  for (size_t m = 0; m < filters_.size(); ++m) {
    const Filter& f = filters_[m];
    double acc = 0.0;
    for (size_t i = 0; i < f.weights.size(); ++i) {
      acc += f.weights[i] * magnitudes[f.first_bin + i];
    }
    out[m] = acc;
  }
}

namespace {

template <typename Band>
SpectralImage ApplyBand(const Spectrogram& spec, const Band& band,
                        SpectralConfig cfg) {
  SpectralImage image;
  image.frame_stride_s =
      static_cast<double>(spec.stride_samples) / spec.sample_rate;
  cfg.window_s = static_cast<double>(spec.window_samples) / spec.sample_rate;
  cfg.stride_s = image.frame_stride_s;
  cfg.fft_size = static_cast<int>(spec.fft_size);
  image.config = cfg;
  const size_t frames = spec.magnitudes.cols();
  image.data = Matrix(band.size(), frames);
  std::vector<double> column(spec.magnitudes.rows());
  std::vector<double> out(band.size());
  for (size_t f = 0; f < frames; ++f) {
    for (size_t k = 0; k < column.size(); ++k) column[k] = spec.magnitudes(k, f);
    band.Apply(column, out);
    for (size_t r = 0; r < out.size(); ++r) {
      image.data(r, f) = CompressMagnitude(out[r]);
    }
  }
  return image;
}

}  // namespace

SpectralImage BandSelectLinear(const Spectrogram& spec, double f_min,
                               double f_max) {
  LinearBand band(spec.fft_size, spec.sample_rate, f_min, f_max);
  SpectralConfig cfg;
  cfg.variant = Variant::kLinearVocal;
  cfg.f_min = f_min;
  cfg.f_max = f_max;
  cfg.n_bins = static_cast<int>(band.size());
  return ApplyBand(spec, band, cfg);
}

SpectralImage MelFilterbankImage(const Spectrogram& spec, int n_mels,
                                 double f_min, double f_max) {
  MelFilterbank bank(spec.fft_size, spec.sample_rate, n_mels, f_min, f_max);
  SpectralConfig cfg;
  cfg.variant = f_min >= kWideMinHz ? Variant::kMelWide : Variant::kMelVocal;
  cfg.f_min = f_min;
  cfg.f_max = f_max;
  cfg.n_bins = n_mels;
  return ApplyBand(spec, bank, cfg);
}

struct SpectralFrontEnd::Impl {
  Impl(size_t window, size_t fft_size) : analyzer(window, fft_size) {}
  MagnitudeAnalyzer analyzer;
  std::optional<LinearBand> linear;
  std::optional<MelFilterbank> mel;
  std::vector<double> mags;
  std::vector<double> bands;
};

SpectralFrontEnd::SpectralFrontEnd(const SpectralConfig& config,
                                   int sample_rate)
    : config_(config), sample_rate_(sample_rate) {
  config_.Validate();
  window_ = SecondsToSamples(config_.window_s, sample_rate);
  stride_ = SecondsToSamples(config_.stride_s, sample_rate);
  if (window_ == 0 || stride_ == 0) {
    throw ConfigError("window and stride must cover at least one sample");
  }
  size_t fft_size = config_.fft_size > 0 ? static_cast<size_t>(config_.fft_size)
                                         : NextPowerOfTwo(window_);
  if (config_.variant == Variant::kLinearVocal) {
    impl_ = std::make_unique<Impl>(window_, fft_size);
    impl_->linear.emplace(fft_size, sample_rate, config_.f_min, config_.f_max);
    config_.n_bins = static_cast<int>(impl_->linear->size());
  } else {
    constexpr size_t kMaxAutoFft = 1 << 16;
    while (true) {
      try {
        MelFilterbank bank(fft_size, sample_rate, config_.n_bins, config_.f_min,
                           config_.f_max);
        impl_ = std::make_unique<Impl>(window_, fft_size);
        impl_->mel.emplace(std::move(bank));
        break;
      } catch (const ConfigError&) {
        if (config_.fft_size > 0 || fft_size >= kMaxAutoFft) throw;
        fft_size *= 2;
      }
    }
  }
  config_.fft_size = static_cast<int>(fft_size);
  impl_->mags.resize(impl_->analyzer.bins());
  impl_->bands.resize(n_bins());
}

SpectralFrontEnd::~SpectralFrontEnd() = default;
SpectralFrontEnd::SpectralFrontEnd(SpectralFrontEnd&&) noexcept = default;
SpectralFrontEnd& SpectralFrontEnd::operator=(SpectralFrontEnd&&) noexcept =
    default;

size_t SpectralFrontEnd::fft_size() const { return impl_->analyzer.fft_size(); }

size_t SpectralFrontEnd::n_bins() const {
  return impl_->linear ? impl_->linear->size() : impl_->mel->size();
}

void SpectralFrontEnd::Column(std::span<const double> frame,
                              std::span<double> out) {
  impl_->analyzer.Compute(frame, impl_->mags);
  if (impl_->linear) {
    impl_->linear->Apply(impl_->mags, impl_->bands);
  } else {
    impl_->mel->Apply(impl_->mags, impl_->bands);
  }
  for (size_t r = 0; r < impl_->bands.size(); ++r) {
    out[r] = CompressMagnitude(impl_->bands[r]);
  }
}

SpectralImage MakeImage(const AudioBuffer& audio, const SpectralConfig& config) {
  SpectralFrontEnd front(config, audio.sample_rate());
  const size_t frames =
      FrameCount(audio.size(), front.window_samples(), front.stride_samples());
  if (frames == 0) throw TooShort("audio shorter than one analysis window");
  SpectralImage image;
  image.config = front.config();
  image.frame_stride_s = front.frame_stride_s();
  image.data = Matrix(front.n_bins(), frames);
  std::vector<double> column(front.n_bins());
  const auto samples = audio.samples();
  for (size_t f = 0; f < frames; ++f) {
    front.Column(samples.subspan(f * front.stride_samples(),
                                 front.window_samples()),
                 column);
    for (size_t r = 0; r < column.size(); ++r) image.data(r, f) = column[r];
  }
  return image;
}

std::string ImageToCsv(const SpectralImage& image) {
  std::ostringstream out;
  char buf[32];
  for (size_t r = 0; r < image.data.rows(); ++r) {
    for (size_t c = 0; c < image.data.cols(); ++c) {
      if (c > 0) out << ',';
      std::snprintf(buf, sizeof(buf), "%.6g", image.data(r, c));
      out << buf;
    }
    out << '\n';
  }
  return out.str();
}

}  // namespace speechprint
