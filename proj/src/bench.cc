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


#include "speechprint/bench.h"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cctype>
#include <cerrno>
#include <cstdlib>
#include <cstring>
#include <limits>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <tuple>

#include "speechprint/degrade.h"
#include "speechprint/errors.h"
#include "speechprint/fileio.h"
#include "speechprint/fingerprint.h"
#include "speechprint/hash.h"
#include "speechprint/log.h"

namespace speechprint {
namespace {

std::string_view Trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> SplitCommas(std::string_view s) {
  std::vector<std::string_view> out;
  size_t start = 0;
  while (true) {
    const size_t comma = s.find(',', start);
    out.push_back(Trim(s.substr(start, comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

double ToDouble(std::string_view s, std::string_view key) {
  std::string tmp(Trim(s));
  char* end = nullptr;
  const double v = std::strtod(tmp.c_str(), &end);
  if (tmp.empty() || end != tmp.c_str() + tmp.size() || !std::isfinite(v)) {
    throw ConfigError("bad number '" + tmp + "' for " + std::string(key));
  }
  return v;
}

uint64_t ToU64(std::string_view s, std::string_view key) {
  std::string tmp(Trim(s));
  char* end = nullptr;
  errno = 0;
  const unsigned long long v = std::strtoull(tmp.c_str(), &end, 0);
  if (tmp.empty() || tmp[0] == '-' || end != tmp.c_str() + tmp.size() || errno) {
    throw ConfigError("bad integer '" + tmp + "' for " + std::string(key));
  }
  return v;
}

std::vector<double> ToDoubles(std::string_view s, std::string_view key) {
  std::vector<double> out;
  for (auto item : SplitCommas(s)) out.push_back(ToDouble(item, key));
  return out;
}

std::string FormatDouble(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::string JoinDoubles(const std::vector<double>& v) {
  std::string out;
  for (size_t i = 0; i < v.size(); ++i) {
    if (i) out += ',';
    out += FormatDouble(v[i]);
  }
  return out;
}

double Mean(const std::vector<double>& v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

std::vector<double> AverageRanks(const std::vector<double>& x) {
  std::vector<size_t> order(x.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](size_t a, size_t b) { return x[a] < x[b]; });
  std::vector<double> ranks(x.size());
  for (size_t i = 0; i < order.size();) {
    size_t j = i;
    while (j + 1 < order.size() && x[order[j + 1]] == x[order[i]]) ++j;
    const double r = 0.5 * static_cast<double>(i + j) + 1.0;
    for (size_t k = i; k <= j; ++k) ranks[order[k]] = r;
    i = j + 1;
  }
  return ranks;
}

}  // namespace

void ExperimentGrid::Validate() const {
  if (variants.empty() || strides_ms.empty() || query_lens_s.empty()) {
    throw ConfigError("grid lists must not be empty");
  }
  if (trials_per_cell < 1) throw ConfigError("trials_per_cell must be >= 1");
  for (double s : strides_ms) {
    if (!(s > 0.0)) throw ConfigError("strides must be positive");
  }
  for (double l : query_lens_s) {
    if (!(l > 0.0)) throw ConfigError("query lengths must be positive");
  }
  if (!(snr_min_db <= snr_max_db)) throw ConfigError("snr range is reversed");
  if (!(rate_min > 0.0 && rate_min <= rate_max)) throw ConfigError("bad rate range");
  if (rate_min < kMinBenchRate || rate_max > kMaxBenchRate) {
    throw ConfigError("rate range must lie within [0.97, 1.03]");
  }
  if (query.min_band_votes < 1) throw ConfigError("min_band_votes must be >= 1");
  if (!(query.min_confidence >= 0.0 && query.min_confidence <= 1.0)) {
    throw ConfigError("min_confidence must lie in [0, 1]");
  }
}

ExperimentGrid ExperimentGrid::Parse(std::string_view text) {
  ExperimentGrid g;
  std::set<std::string> seen;
  size_t pos = 0;
  while (pos < text.size()) {
    size_t eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    std::string_view line = text.substr(pos, eol - pos);
    pos = eol + 1;
    if (const size_t hash = line.find('#'); hash != std::string_view::npos) {
      line = line.substr(0, hash);
    }
    line = Trim(line);
    if (line.empty()) continue;
    const size_t eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError("grid line without '=': " + std::string(line));
    }
    const std::string key(Trim(line.substr(0, eq)));
    const std::string_view value = Trim(line.substr(eq + 1));
    if (!seen.insert(key).second) throw ConfigError("grid key repeated: " + key);
    if (key == "variants") {
      g.variants.clear();
      for (auto v : SplitCommas(value)) g.variants.push_back(ParseVariant(v));
    } else if (key == "strides_ms") {
      g.strides_ms = ToDoubles(value, key);
    } else if (key == "query_lens_s") {
      g.query_lens_s = ToDoubles(value, key);
    } else if (key == "snr_db_range" || key == "rate_range") {
      const auto r = ToDoubles(value, key);
      if (r.size() != 2) throw ConfigError(key + " needs two values");
      (key == "snr_db_range" ? g.snr_min_db : g.rate_min) = r[0];
      (key == "snr_db_range" ? g.snr_max_db : g.rate_max) = r[1];
    } else if (key == "trials_per_cell") {
      const uint64_t t = ToU64(value, key);
      if (t > 1000000) throw ConfigError("trials_per_cell is too large");
      g.trials_per_cell = static_cast<int>(t);
    } else if (key == "master_seed") {
      g.master_seed = ToU64(value, key);
    } else if (key == "min_band_votes") {
      const uint64_t v = ToU64(value, key);
      if (v > 1000) throw ConfigError("min_band_votes is too large");
      g.query.min_band_votes = static_cast<int>(v);
    } else if (key == "min_confidence") {
      g.query.min_confidence = ToDouble(value, key);
    } else {
      throw ConfigError("unknown grid key: " + key);
    }
  }
  g.Validate();
  return g;
}

ExperimentGrid ExperimentGrid::Load(const std::filesystem::path& path) {
  return Parse(ReadFileText(path));
}

std::string ExperimentGrid::ToString() const {
  std::string out = "variants=";
  for (size_t i = 0; i < variants.size(); ++i) {
    if (i) out += ',';
    out += VariantName(variants[i]);
  }
  out += "\nstrides_ms=" + JoinDoubles(strides_ms);
  out += "\nquery_lens_s=" + JoinDoubles(query_lens_s);
  out += "\nsnr_db_range=" + JoinDoubles({snr_min_db, snr_max_db});
  out += "\nrate_range=" + JoinDoubles({rate_min, rate_max});
  out += "\ntrials_per_cell=" + std::to_string(trials_per_cell);
  out += "\nmaster_seed=" + std::to_string(master_seed);
  out += "\nmin_band_votes=" + std::to_string(query.min_band_votes);
  out += "\nmin_confidence=" + FormatDouble(query.min_confidence);
  out += "\n";
  return out;
}

TrialPlan PlanTrial(const ExperimentGrid& grid, size_t n_files, double query_len_s,
                    int trial) {
  // Keyed by the length's bit pattern so every cell of that length sees the
  // same draws.
  uint64_t len_bits = 0;
  static_assert(sizeof(len_bits) == sizeof(query_len_s));
  std::memcpy(&len_bits, &query_len_s, sizeof(len_bits));
  Rng rng(MixSeed(MixSeed(grid.master_seed, len_bits), static_cast<uint64_t>(trial)));
  TrialPlan plan;
  plan.file = static_cast<size_t>(trial) % n_files;
  plan.snr_db = rng.Uniform(grid.snr_min_db, grid.snr_max_db);
  plan.rate = rng.Uniform(grid.rate_min, grid.rate_max);
  plan.seed = rng.Next();
  return plan;
}

std::vector<CellResult> RunGrid(const std::vector<CorpusFile>& corpus,
                                const ExperimentGrid& grid,
                                const ProgressFn& progress) {
  grid.Validate();
  if (corpus.size() < 2) throw ConfigError("the corpus needs at least two files");
  const double longest = *std::max_element(grid.query_lens_s.begin(), grid.query_lens_s.end());
  for (const auto& f : corpus) {
    if (f.audio.duration_seconds() < longest) {
      throw ConfigError("corpus file " + f.name + " is shorter than " +
                        FormatDouble(longest) + " s");
    }
  }

  // Queries depend only on (length, trial); build them once.
  std::map<double, std::vector<AudioBuffer>> queries;
  for (double len : grid.query_lens_s) {
    auto& list = queries[len];
    if (!list.empty()) continue;
    for (int t = 0; t < grid.trials_per_cell; ++t) {
      const TrialPlan plan = PlanTrial(grid, corpus.size(), len, t);
      DeteriorationSpec spec;
      spec.snr_db = plan.snr_db;
      spec.rate = plan.rate;
      spec.query_len_s = len;
      list.push_back(MakeQuery(corpus[plan.file].audio, spec, plan.seed));
    }
  }

  std::vector<CellResult> results;
  for (Variant variant : grid.variants) {
    for (double stride_ms : grid.strides_ms) {
      const Profile profile = Profile::ForVariant(variant, stride_ms / 1000.0);
      const Fingerprinter fingerprinter(profile);
      RetrievalIndex index(profile);
      for (size_t i = 0; i < corpus.size(); ++i) {
        index.Enroll(fingerprinter.Compute(corpus[i].audio, i));
      }
      for (double len : grid.query_lens_s) {
        CellResult cell;
        cell.variant = variant;
        cell.stride_ms = stride_ms;
        cell.query_len_s = len;
        cell.n_trials = grid.trials_per_cell;
        int hits = 0;
        double seconds = 0.0;
        const auto& list = queries.at(len);
        for (int t = 0; t < grid.trials_per_cell; ++t) {
          const size_t source = PlanTrial(grid, corpus.size(), len, t).file;
          const auto start = std::chrono::steady_clock::now();
          QueryResult r;
          try {
            const Fingerprint fp = fingerprinter.Compute(list[t], 0);
            r = index.Query(fp.subs, grid.query);
          } catch (const TooShort&) {
          }
          seconds += std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
          if (r && r->file_id == source) ++hits;
        }
        cell.accuracy = static_cast<double>(hits) / grid.trials_per_cell;
        cell.latency_s = seconds / grid.trials_per_cell;
        results.push_back(cell);
        if (progress) progress(cell);
      }
    }
  }
  return results;
}

std::vector<CellResult> RunGrid(const std::filesystem::path& corpus_dir,
                                const ExperimentGrid& grid,
                                const ProgressFn& progress) {
  return RunGrid(LoadCorpus(corpus_dir), grid, progress);
}

double SpearmanRho(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) {
    throw ConfigError("Spearman needs two equally long series of length >= 2");
  }
  const auto rx = AverageRanks(x);
  const auto ry = AverageRanks(y);
  const double mx = Mean(rx), my = Mean(ry);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (size_t i = 0; i < rx.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) return std::numeric_limits<double>::quiet_NaN();
  return sxy / std::sqrt(sxx * syy);
}

HypothesisReport CheckHypotheses(const std::vector<CellResult>& results) {
  std::set<Variant> variants;
  std::set<double> strides, lens;
  std::map<std::tuple<Variant, double, double>, double> acc;
  for (const auto& r : results) {
    variants.insert(r.variant);
    strides.insert(r.stride_ms);
    lens.insert(r.query_len_s);
    if (!acc.emplace(std::make_tuple(r.variant, r.stride_ms, r.query_len_s), r.accuracy).second) {
      throw ConfigError("results repeat a cell");
    }
  }
  if (variants.size() < 2 || strides.size() < 3 || lens.size() < 3 ||
      *lens.begin() >= 6.0 || *lens.rbegin() <= 6.0) {
    throw ConfigError(
        "hypothesis checks need >= 2 variants, >= 3 strides and >= 3 query "
        "lengths spanning 6 s");
  }
  if (acc.size() != variants.size() * strides.size() * lens.size()) {
    throw ConfigError("results do not form a complete grid");
  }

  HypothesisReport report;
  report.h1.pass = report.h2.pass = true;
  std::ostringstream e1, e2, e3;
  e1.precision(3);
  e2.precision(3);
  e3.precision(3);
  const double max_len = *lens.rbegin();
  for (Variant v : variants) {
    VariantTrend t;
    t.variant = v;
    for (double len : lens) {
      std::vector<double> xs;
      for (double s : strides) xs.push_back(acc.at({v, s, len}));
      t.lens_s.push_back(len);
      t.acc_by_len.push_back(Mean(xs));
    }
    for (double s : strides) {
      std::vector<double> xs;
      for (double len : lens) xs.push_back(acc.at({v, s, len}));
      t.strides_ms.push_back(s);
      t.acc_by_stride.push_back(Mean(xs));
    }
    const double at_max = t.acc_by_len.back();
    t.worst_plateau_gap = std::numeric_limits<double>::infinity();
    for (size_t i = 0; i < t.lens_s.size(); ++i) {
      if (t.lens_s[i] >= 6.0) {
        t.worst_plateau_gap = std::min(t.worst_plateau_gap, t.acc_by_len[i] - at_max);
      }
    }
    t.stride_rho = SpearmanRho(t.strides_ms, t.acc_by_stride);
    t.strictly_decreasing = true;
    for (size_t i = 1; i < t.acc_by_stride.size(); ++i) {
      if (!(t.acc_by_stride[i] < t.acc_by_stride[i - 1])) t.strictly_decreasing = false;
    }
    const bool p1 = t.worst_plateau_gap >= -kPlateauSlack;
    const bool p2 = t.stride_rho <= kStrideRhoMax;  // false for NaN
    report.h1.pass = report.h1.pass && p1;
    report.h2.pass = report.h2.pass && p2;
    e1 << VariantName(v) << ": worst gap " << t.worst_plateau_gap << " vs "
       << FormatDouble(max_len) << " s" << (p1 ? "" : " (fail)") << "; ";
    e2 << VariantName(v) << ": rho " << t.stride_rho
       << (t.strictly_decreasing ? " strictly decreasing" : " not strictly decreasing")
       << (p2 ? "" : " (fail)") << "; ";
    report.trends.push_back(std::move(t));
  }

  double gap_sum = 0.0;
  size_t cells = 0;
  for (double s : strides) {
    for (double len : lens) {
      double lo = 1.0, hi = 0.0;
      for (Variant v : variants) {
        lo = std::min(lo, acc.at({v, s, len}));
        hi = std::max(hi, acc.at({v, s, len}));
      }
      gap_sum += hi - lo;
      ++cells;
    }
  }
  report.mean_variant_gap = gap_sum / static_cast<double>(cells);
  report.h3.pass = report.mean_variant_gap <= kVariantGapMax;
  e3 << "mean max pairwise gap " << report.mean_variant_gap << " over " << cells
     << " cells";
  report.h1.evidence = e1.str();
  report.h2.evidence = e2.str();
  report.h3.evidence = e3.str();
  return report;
}

std::string ResultsToCsv(const std::vector<CellResult>& results) {
  if (results.empty()) throw ConfigError("no results to write");
  std::string out(kCsvHeader);
  out += '\n';
  for (const auto& r : results) {
    out += std::string(VariantName(r.variant)) + ',' + FormatDouble(r.stride_ms) + ',' +
           FormatDouble(r.query_len_s) + ',' + FormatDouble(r.accuracy) + ',' +
           std::to_string(r.n_trials) + ',' + FormatDouble(r.latency_s) + '\n';
  }
  return out;
}

std::vector<CellResult> ResultsFromCsv(std::string_view text) {
  std::vector<CellResult> out;
  size_t pos = 0;
  bool header = true;
  while (pos < text.size()) {
    size_t eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    std::string_view line = Trim(text.substr(pos, eol - pos));
    pos = eol + 1;
    if (line.empty()) continue;
    if (header) {
      if (line != kCsvHeader) throw ConfigError("unexpected CSV header");
      header = false;
      continue;
    }
    const auto f = SplitCommas(line);
    if (f.size() != 6) throw ConfigError("CSV row needs 6 fields");
    CellResult r;
    r.variant = ParseVariant(f[0]);
    r.stride_ms = ToDouble(f[1], "stride_ms");
    r.query_len_s = ToDouble(f[2], "query_len_s");
    r.accuracy = ToDouble(f[3], "accuracy");
    r.n_trials = static_cast<int>(ToU64(f[4], "n_trials"));
    r.latency_s = ToDouble(f[5], "latency_s");
    out.push_back(r);
  }
  if (header) throw ConfigError("missing CSV header");
  return out;
}

void WriteResultsCsv(const std::filesystem::path& path,
                     const std::vector<CellResult>& results) {
  WriteFileAtomic(path, ResultsToCsv(results));
}

std::string ResultsToLongTable(const std::vector<CellResult>& results) {
  if (results.empty()) throw ConfigError("no results to write");
  std::string out = "chart,variant,series,x,accuracy\n";
  for (const auto& r : results) {
    out += "accuracy_vs_stride," + std::string(VariantName(r.variant)) + ",len_s=" +
           FormatDouble(r.query_len_s) + ',' + FormatDouble(r.stride_ms) + ',' +
           FormatDouble(r.accuracy) + '\n';
  }
  for (const auto& r : results) {
    out += "accuracy_vs_length," + std::string(VariantName(r.variant)) +
           ",stride_ms=" + FormatDouble(r.stride_ms) + ',' +
           FormatDouble(r.query_len_s) + ',' + FormatDouble(r.accuracy) + '\n';
  }
  return out;
}

void WriteLongTable(const std::filesystem::path& path,
                    const std::vector<CellResult>& results) {
  WriteFileAtomic(path, ResultsToLongTable(results));
}

}  // namespace speechprint
