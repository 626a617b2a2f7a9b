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

// Synthetic speech-like corpus so the benchmark and tests run without
// external recordings. Each file is additive harmonic synthesis of voiced
// syllables (speaker-specific pitch, moving formants, intonation contours)
// interleaved with fricative noise bursts and pauses.

#ifndef SPEECHPRINT_CORPUS_H_
#define SPEECHPRINT_CORPUS_H_

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "speechprint/audio.h"

namespace speechprint {

struct Speaker {
  double base_f0_hz = 120.0;
  double formant_scale = 1.0;  // vocal-tract length factor
  double pitch_range = 0.25;   // relative excursion of the intonation
  double speaking_rate = 1.0;  // syllables per second multiplier
};

// 18 speakers, alternating male-like and female-like pitch ranges.
std::vector<Speaker> DefaultSpeakers(uint64_t seed);

AudioBuffer SynthesizeSpeech(const Speaker& speaker, double duration_s,
                             uint64_t seed,
                             int sample_rate = kCanonicalSampleRate);

struct CorpusOptions {
  int n_files = 30;
  int n_speakers = 18;
  double min_duration_s = 12.0;
  double max_duration_s = 18.0;
  uint64_t seed = 20260101;
};

struct CorpusFile {
  std::string name;
  AudioBuffer audio;
};

std::vector<CorpusFile> SynthesizeCorpus(const CorpusOptions& options);

// Writes <dir>/<name>.wav for each file (16-bit PCM).
void WriteCorpus(const std::filesystem::path& dir,
                 const std::vector<CorpusFile>& files);
// Every *.wav in `dir`, sorted by file name, resampled to the canonical rate.
std::vector<CorpusFile> LoadCorpus(const std::filesystem::path& dir);

}  // namespace speechprint

#endif  // SPEECHPRINT_CORPUS_H_
