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


// The accuracy experiment: accuracy against stride length and query length
// for each spectral variant under seeded query deterioration, plus the
// checks of the three expected trends.

#ifndef SPEECHPRINT_BENCH_H_
#define SPEECHPRINT_BENCH_H_

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iterator>
#include <string>
#include <string_view>
#include <vector>

#include "speechprint/corpus.h"
#include "speechprint/index.h"
#include "speechprint/spectral.h"

namespace speechprint {

struct ExperimentGrid {
  std::vector<Variant> variants{std::begin(kAllVariants), std::end(kAllVariants)};
  std::vector<double> strides_ms{12.5, 25.0, 50.0, 100.0};
  std::vector<double> query_lens_s{2.0, 4.0, 6.0, 8.0, 10.0};
  double snr_min_db = 10.0;
  double snr_max_db = 30.0;
  double rate_min = 0.97;
  double rate_max = 1.03;
  int trials_per_cell = 120;
  uint64_t master_seed = 1;
  QueryOptions query;

  void Validate() const;  // throws ConfigError

  // Flat key=value text, list values comma separated, '#' comments. Keys:
  // variants, strides_ms, query_lens_s, snr_db_range, rate_range,
  // trials_per_cell, master_seed, min_band_votes, min_confidence.
  static ExperimentGrid Parse(std::string_view text);
  static ExperimentGrid Load(const std::filesystem::path& path);
  std::string ToString() const;
};

struct CellResult {
  Variant variant = Variant::kLinearVocal;
  double stride_ms = 0.0;
  double query_len_s = 0.0;
  double accuracy = 0.0;
  int n_trials = 0;
  double latency_s = 0.0;  // mean fingerprint + query time per trial

  friend bool operator==(const CellResult&, const CellResult&) = default;
};

// Degradation drawn for one trial. Trials with the same index and query
// length share it across variants and strides, so cells compare paired.
struct TrialPlan {
  size_t file = 0;
  double snr_db = 0.0;
  double rate = 1.0;
  uint64_t seed = 0;
};
TrialPlan PlanTrial(const ExperimentGrid& grid, size_t n_files, double query_len_s,
                    int trial);

using ProgressFn = std::function<void(const CellResult&)>;

// Builds one index per (variant, stride) and runs every cell. Files are
// used round-robin. Throws ConfigError when the corpus has fewer than two
// files or one is shorter than the longest query.
std::vector<CellResult> RunGrid(const std::vector<CorpusFile>& corpus,
                                const ExperimentGrid& grid,
                                const ProgressFn& progress = {});
std::vector<CellResult> RunGrid(const std::filesystem::path& corpus_dir,
                                const ExperimentGrid& grid,
                                const ProgressFn& progress = {});

// Spearman rank correlation with average ranks for ties; NaN when either
// side is constant.
double SpearmanRho(const std::vector<double>& x, const std::vector<double>& y);

inline constexpr double kPlateauSlack = 0.05;
inline constexpr double kStrideRhoMax = -0.5;
inline constexpr double kVariantGapMax = 0.1;

struct HypothesisCheck {
  bool pass = false;
  std::string evidence;
};

struct VariantTrend {
  Variant variant = Variant::kLinearVocal;
  // Accuracy by query length, averaged over strides (lengths ascending).
  std::vector<double> lens_s;
  std::vector<double> acc_by_len;
  // Accuracy by stride, averaged over lengths (strides ascending).
  std::vector<double> strides_ms;
  std::vector<double> acc_by_stride;
  double worst_plateau_gap = 0.0;  // min over len >= 6 s of acc(len) - acc(max)
  double stride_rho = 0.0;
  bool strictly_decreasing = false;
};

struct HypothesisReport {
  HypothesisCheck h1;  // plateau beyond 6 s
  HypothesisCheck h2;  // accuracy falls with stride
  HypothesisCheck h3;  // variants agree
  std::vector<VariantTrend> trends;
  double mean_variant_gap = 0.0;
};

// h1: for every variant and every length >= 6 s, acc(len) - acc(longest)
// >= -0.05, accuracies averaged over strides. h2: per variant, Spearman
// rho(stride, accuracy averaged over lengths) <= -0.5. h3: the largest
// pairwise accuracy gap between variants, averaged over (stride, length)
// cells, is <= 0.1. Throws ConfigError unless the results cover >= 3
// lengths reaching below and above 6 s, >= 3 strides and >= 2 variants on a
// complete grid.
HypothesisReport CheckHypotheses(const std::vector<CellResult>& results);

inline constexpr std::string_view kCsvHeader =
    "variant,stride_ms,query_len_s,accuracy,n_trials,latency_s";

// Throws ConfigError for empty results and IoError for unwritable paths.
std::string ResultsToCsv(const std::vector<CellResult>& results);
std::vector<CellResult> ResultsFromCsv(std::string_view text);
void WriteResultsCsv(const std::filesystem::path& path,
                     const std::vector<CellResult>& results);
// Long format "chart,variant,series,x,accuracy" with one block per chart:
// accuracy_vs_stride (series = query length) and accuracy_vs_length
// (series = stride).
std::string ResultsToLongTable(const std::vector<CellResult>& results);
void WriteLongTable(const std::filesystem::path& path,
                    const std::vector<CellResult>& results);

}  // namespace speechprint

#endif  // SPEECHPRINT_BENCH_H_
