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

#include "speechprint/corpus.h"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <numbers>

#include "speechprint/errors.h"
#include "speechprint/hash.h"
#include "speechprint/wav.h"

namespace speechprint {
namespace {

struct Vowel {
  double f1, f2, f3;
};

// Typical adult male formant frequencies.
constexpr std::array<Vowel, 8> kVowels = {{
    {730, 1090, 2440},
    {270, 2290, 3010},
    {300, 870, 2240},
    {530, 1840, 2480},
    {570, 840, 2410},
    {660, 1720, 2410},
    {520, 1190, 2390},
    {390, 1990, 2550},
}};

constexpr std::array<double, 3> kFormantBandwidth = {80.0, 100.0, 150.0};
constexpr std::array<double, 3> kFormantGain = {1.0, 0.6, 0.3};

// Per-sample control tracks for the synthesizer.
struct Tracks {
  explicit Tracks(size_t n)
      : f0(n, 0.0), voiced(n, 0.0), noise(n, 0.0), noise_hz(n, 2500.0),
        f1(n, 500.0), f2(n, 1500.0), f3(n, 2500.0) {}
  std::vector<double> f0, voiced, noise, noise_hz, f1, f2, f3;
};

double RaisedCosine(double x) {
  x = std::clamp(x, 0.0, 1.0);
  return 0.5 - 0.5 * std::cos(std::numbers::pi * x);
}

void PlanUtterance(const Speaker& spk, Rng& rng, int sr, Tracks& t) {
  const size_t n = t.f0.size();
  auto seconds = [sr](double s) {
    return static_cast<size_t>(std::max(0.0, s) * sr);
  };
  size_t pos = seconds(rng.Uniform(0.05, 0.3));
  Vowel prev = kVowels[rng.Below(kVowels.size())];
  while (pos < n) {
    const int syllables = 3 + static_cast<int>(rng.Below(8));
    const double phrase_start =
        spk.base_f0_hz * (1.0 + spk.pitch_range * rng.Uniform(-0.1, 0.4));
    const double phrase_end = spk.base_f0_hz * (1.0 - spk.pitch_range * 0.4);
    for (int s = 0; s < syllables && pos < n; ++s) {
      const double progress = static_cast<double>(s) / syllables;
      const double base = phrase_start + (phrase_end - phrase_start) * progress;
      // Optional consonant onset.
      if (rng.Uniform() < 0.6) {
        const bool fricative = rng.Uniform() < 0.6;
        const size_t len =
            seconds((fricative ? rng.Uniform(0.04, 0.1) : rng.Uniform(0.015, 0.03)) /
                    spk.speaking_rate);
        const double hz = fricative ? rng.Uniform(1800, 3400) : rng.Uniform(900, 2500);
        const double level = fricative ? rng.Uniform(0.15, 0.35) : rng.Uniform(0.3, 0.6);
        for (size_t i = 0; i < len && pos + i < n; ++i) {
          const double x = static_cast<double>(i) / std::max<size_t>(len, 1);
          t.noise[pos + i] = level * std::sin(std::numbers::pi * x);
          t.noise_hz[pos + i] = hz;
        }
        pos += len;
      }
      // Voiced nucleus.
      const size_t len = seconds(rng.Uniform(0.09, 0.26) / spk.speaking_rate);
      const Vowel target = kVowels[rng.Below(kVowels.size())];
      const bool accent = rng.Uniform() < 0.4;
      const double accent_size = spk.pitch_range * rng.Uniform(0.2, 0.6);
      const double glide = rng.Uniform(-0.08, 0.08);
      const double stress = rng.Uniform(0.55, 1.0);
      const size_t attack = seconds(0.02);
      const size_t release = seconds(0.04);
      for (size_t i = 0; i < len && pos + i < n; ++i) {
        const double x = static_cast<double>(i) / std::max<size_t>(len, 1);
        double f0 = base * (1.0 + glide * (x - 0.5));
        if (accent) f0 *= 1.0 + accent_size * std::sin(std::numbers::pi * x);
        double env = stress;
        if (i < attack) env *= RaisedCosine(static_cast<double>(i) / attack);
        if (len - i < release) env *= RaisedCosine(static_cast<double>(len - i) / release);
        const double mix = RaisedCosine(std::min(1.0, x / 0.35));
        const size_t k = pos + i;
        t.f0[k] = f0;
        t.voiced[k] = env;
        t.f1[k] = spk.formant_scale * (prev.f1 + (target.f1 - prev.f1) * mix);
        t.f2[k] = spk.formant_scale * (prev.f2 + (target.f2 - prev.f2) * mix);
        t.f3[k] = spk.formant_scale * (prev.f3 + (target.f3 - prev.f3) * mix);
      }
      prev = target;
      pos += len;
      // Short gap between words now and then.
      if (rng.Uniform() < 0.35) pos += seconds(rng.Uniform(0.03, 0.12));
    }
    pos += seconds(rng.Uniform(0.2, 0.6));
  }
}

}  // namespace

std::vector<Speaker> DefaultSpeakers(uint64_t seed) {
  Rng rng(seed);
  std::vector<Speaker> speakers(18);
  for (size_t i = 0; i < speakers.size(); ++i) {
    Speaker& s = speakers[i];
    const bool low = i % 2 == 0;
    s.base_f0_hz = low ? rng.Uniform(95.0, 140.0) : rng.Uniform(180.0, 240.0);
    s.formant_scale = low ? rng.Uniform(0.95, 1.05) : rng.Uniform(1.1, 1.2);
    s.pitch_range = rng.Uniform(0.15, 0.35);
    s.speaking_rate = rng.Uniform(0.85, 1.2);
  }
  return speakers;
}

AudioBuffer SynthesizeSpeech(const Speaker& speaker, double duration_s,
                             uint64_t seed, int sample_rate) {
  if (!(duration_s > 0.0)) throw ConfigError("duration must be positive");
  const auto n = static_cast<size_t>(std::llround(duration_s * sample_rate));
  Rng rng(seed);
  Tracks t(n);
  PlanUtterance(speaker, rng, sample_rate, t);

  std::vector<double> out(n, 0.0);
  const double nyquist_guard = 0.475 * sample_rate;
  constexpr size_t kControlHop = 40;
  std::vector<double> amps;
  double phase = 0.0;
  // Two-pole resonator state for the noise source.
  double y1 = 0.0, y2 = 0.0;
  for (size_t i = 0; i < n; ++i) {
    const double f0 = t.f0[i];
    if (t.voiced[i] > 0.0 && f0 > 0.0) {
      phase += 2.0 * std::numbers::pi * f0 / sample_rate;
      if (phase > 2.0 * std::numbers::pi) phase -= 2.0 * std::numbers::pi;
      const auto harmonics = static_cast<size_t>(nyquist_guard / f0);
      if (i % kControlHop == 0 || amps.size() != harmonics) {
        amps.assign(harmonics, 0.0);
        const std::array<double, 3> formants = {t.f1[i], t.f2[i], t.f3[i]};
        for (size_t k = 1; k <= harmonics; ++k) {
          const double f = k * f0;
          double env = 0.05;
          for (size_t q = 0; q < 3; ++q) {
            const double d = (f - formants[q]) / kFormantBandwidth[q];
            env += kFormantGain[q] / (1.0 + d * d);
          }
          amps[k - 1] = env / std::sqrt(static_cast<double>(k));
        }
      }
      const double c = std::cos(phase);
      const double s = std::sin(phase);
      double ck = c, sk = s, acc = 0.0;
      for (size_t k = 0; k < amps.size(); ++k) {
        acc += amps[k] * sk;
        const double next_c = ck * c - sk * s;
        sk = sk * c + ck * s;
        ck = next_c;
      }
      out[i] += t.voiced[i] * acc;
    }
    // Fricative noise through a resonator at noise_hz.
    const double r = 0.9;
    const double theta = 2.0 * std::numbers::pi * t.noise_hz[i] / sample_rate;
    const double excitation = rng.Gaussian();
    const double y = excitation + 2.0 * r * std::cos(theta) * y1 - r * r * y2;
    y2 = y1;
    y1 = y;
    out[i] += t.noise[i] * 0.25 * y;
    out[i] += 1e-3 * rng.Gaussian();
  }
  double peak = 0.0;
  for (double v : out) peak = std::max(peak, std::abs(v));
  if (peak > 0.0) {
    const double gain = 0.7 / peak;
    for (double& v : out) v *= gain;
  }
  return AudioBuffer(std::move(out), sample_rate);
}

std::vector<CorpusFile> SynthesizeCorpus(const CorpusOptions& options) {
  if (options.n_files < 1 || options.n_speakers < 1) {
    throw ConfigError("corpus needs at least one file and one speaker");
  }
  if (!(options.min_duration_s > 0.0) ||
      options.max_duration_s < options.min_duration_s) {
    throw ConfigError("bad corpus duration range");
  }
  auto speakers = DefaultSpeakers(MixSeed(options.seed, 0x5eaceULL));
  while (speakers.size() < static_cast<size_t>(options.n_speakers)) {
    auto more = DefaultSpeakers(MixSeed(options.seed, speakers.size()));
    speakers.insert(speakers.end(), more.begin(), more.end());
  }
  speakers.resize(static_cast<size_t>(options.n_speakers));
  std::vector<CorpusFile> files;
  files.reserve(static_cast<size_t>(options.n_files));
  for (int i = 0; i < options.n_files; ++i) {
    Rng rng(MixSeed(options.seed, static_cast<uint64_t>(i)));
    const double duration = rng.Uniform(options.min_duration_s, options.max_duration_s);
    char name[32];
    std::snprintf(name, sizeof(name), "file_%03d", i);
    files.push_back({name, SynthesizeSpeech(speakers[i % speakers.size()], duration,
                                            MixSeed(options.seed, 1000 + i))});
  }
  return files;
}

void WriteCorpus(const std::filesystem::path& dir,
                 const std::vector<CorpusFile>& files) {
  std::filesystem::create_directories(dir);
  for (const auto& f : files) WriteWavFile(dir / (f.name + ".wav"), f.audio);
}

std::vector<CorpusFile> LoadCorpus(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) {
    throw IoError("corpus directory not found: " + dir.string());
  }
  std::vector<std::filesystem::path> paths;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".wav") {
      paths.push_back(entry.path());
    }
  }
  std::sort(paths.begin(), paths.end());
  std::vector<CorpusFile> files;
  for (const auto& p : paths) {
    files.push_back({p.stem().string(),
                     Resample(ReadWavFile(p), kCanonicalSampleRate)});
  }
  return files;
}

}  // namespace speechprint
