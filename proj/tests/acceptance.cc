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


// Runs the twelve acceptance criteria on the synthetic desk corpus and
// prints one PASS/FAIL line per criterion. Exits non-zero when a criterion
// outside kKnownShortfalls fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <future>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "speechprint/bench.h"
#include "speechprint/corpus.h"
#include "speechprint/degrade.h"
#include "speechprint/fingerprint.h"
#include "speechprint/hash.h"
#include "speechprint/index.h"
#include "speechprint/pipeline.h"
#include "speechprint/registry.h"
#include "speechprint/server.h"
#include "speechprint/wav.h"

namespace speechprint {
namespace {

// Tolerances.
constexpr double kSelfRetrievalAccuracy = 1.0;
constexpr double kSelfRetrievalBudgetS = 60.0;
constexpr double kDegradedAccuracyMin = 0.9;
constexpr double kDegradedBudgetS = 300.0;
constexpr int kDegradedTrialsPerVariant = 60;
// At 30 trials a cell near 0.8 accuracy has a standard error of about 0.07,
// wider than the 0.05 plateau slack; 120 trials bring it to about 0.035.
constexpr int kGridTrialsPerCell = 120;
constexpr double kMinHashMaeMax = 0.05;
constexpr size_t kMinHashPermutations = 1000;
constexpr int kMinHashPairs = 100;
constexpr double kHaarTolerance = 1e-9;
constexpr size_t kBatchQueries = 256;
constexpr size_t kServerSessions = 32;
constexpr double kSnrToleranceDb = 0.01;
constexpr int kSnrTrials = 100;
constexpr int kPlantedDuplicates = 3;
constexpr size_t kMinDistinctPairs = 400;
constexpr double kLatencyMedianMaxS = 0.050;
constexpr int kLatencyQueries = 60;

// Criteria that do not hold on the desk corpus; the README explains why.
// They still print FAIL.
const std::set<int> kKnownShortfalls = {4};

using Clock = std::chrono::steady_clock;

double Seconds(Clock::time_point since) {
  return std::chrono::duration<double>(Clock::now() - since).count();
}

struct Outcome {
  bool pass = false;
  std::string evidence;
};

std::string Fmt(const char* format, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof(buf), format, args...);
  return buf;
}

double Median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

AudioBuffer Scaled(const AudioBuffer& audio, double gain) {
  std::vector<double> out(audio.samples().begin(), audio.samples().end());
  for (double& x : out) x *= gain;
  return AudioBuffer(std::move(out), audio.sample_rate());
}

// Shared state: the desk corpus and one index per variant at 25 ms.
struct Desk {
  std::vector<CorpusFile> corpus;
  std::map<Variant, Profile> profiles;
  std::map<Variant, std::vector<Fingerprint>> fingerprints;
  std::map<Variant, RetrievalIndex> indexes;
  std::map<Variant, double> build_s;

  Desk() {
    corpus = SynthesizeCorpus({});
    for (Variant v : kAllVariants) {
      const auto start = Clock::now();
      profiles.emplace(v, Profile::ForVariant(v));
      const Fingerprinter fp(profiles.at(v));
      RetrievalIndex index(profiles.at(v));
      auto& fps = fingerprints[v];
      for (size_t i = 0; i < corpus.size(); ++i) {
        fps.push_back(fp.Compute(corpus[i].audio, i + 1));
        index.Enroll(fps.back());
      }
      indexes.emplace(v, std::move(index));
      build_s[v] = Seconds(start);
    }
  }
};

Outcome SelfRetrieval(const Desk& desk) {
  std::ostringstream ev;
  bool pass = true;
  double total_s = 0.0;
  for (Variant v : kAllVariants) {
    const auto start = Clock::now();
    int hits = 0;
    for (size_t i = 0; i < desk.corpus.size(); ++i) {
      const auto r = desk.indexes.at(v).Query(desk.fingerprints.at(v)[i].subs);
      hits += r && r->file_id == i + 1;
    }
    const double acc = static_cast<double>(hits) / static_cast<double>(desk.corpus.size());
    total_s += desk.build_s.at(v) + Seconds(start);
    pass = pass && acc >= kSelfRetrievalAccuracy;
    ev << VariantName(v) << " " << Fmt("%.3f", acc) << "; ";
  }
  pass = pass && total_s < kSelfRetrievalBudgetS;
  ev << desk.corpus.size() << " files, " << Fmt("%.1f s", total_s);
  return {pass, ev.str()};
}

Outcome DegradedRetrieval(const Desk& desk) {
  const auto start = Clock::now();
  std::ostringstream ev;
  bool pass = true;
  for (Variant v : kAllVariants) {
    const Fingerprinter fp(desk.profiles.at(v));
    int hits = 0;
    for (int t = 0; t < kDegradedTrialsPerVariant; ++t) {
      Rng rng(MixSeed(0xdeba5e, static_cast<uint64_t>(t)));
      const size_t file = static_cast<size_t>(t) % desk.corpus.size();
      DeteriorationSpec spec;
      spec.snr_db = rng.Uniform(20.0, 30.0);
      spec.rate = rng.Uniform(0.97, 1.03);
      spec.query_len_s = 6.0;
      const AudioBuffer q = MakeQuery(desk.corpus[file].audio, spec, rng.Next());
      const auto r = desk.indexes.at(v).Query(fp.Compute(q).subs);
      hits += r && r->file_id == file + 1;
    }
    const double acc = static_cast<double>(hits) / kDegradedTrialsPerVariant;
    pass = pass && acc >= kDegradedAccuracyMin;
    ev << VariantName(v) << " " << Fmt("%.3f", acc) << "; ";
  }
  const double elapsed = Seconds(start);
  pass = pass && elapsed < kDegradedBudgetS;
  ev << kDegradedTrialsPerVariant << " trials/variant, " << Fmt("%.1f s", elapsed);
  return {pass, ev.str()};
}

struct GridOutcomes {
  Outcome h1, h2, h3;
};

GridOutcomes ExperimentShape(const Desk& desk) {
  const auto start = Clock::now();
  ExperimentGrid grid;
  grid.trials_per_cell = kGridTrialsPerCell;
  const auto results = RunGrid(desk.corpus, grid);
  const HypothesisReport report = CheckHypotheses(results);
  GridOutcomes out;
  const std::string took = Fmt(" (grid %.0f s)", Seconds(start));
  out.h1 = {report.h1.pass, report.h1.evidence + took};
  bool strict = true;
  for (const auto& t : report.trends) strict = strict && t.strictly_decreasing;
  out.h2 = {report.h2.pass && strict, report.h2.evidence};
  out.h3 = {report.h3.pass, report.h3.evidence};
  return out;
}

Outcome MinHashFidelity() {
  const size_t domain = 4096;
  const MinHasher hasher(0x5eed, domain, kMinHashPermutations);
  std::mt19937_64 gen(606);
  double abs_err = 0.0;
  for (int pair = 0; pair < kMinHashPairs; ++pair) {
    const size_t size = std::uniform_int_distribution<size_t>(50, 400)(gen);
    const size_t shared = std::uniform_int_distribution<size_t>(0, size)(gen);
    std::vector<uint32_t> perm(domain);
    std::iota(perm.begin(), perm.end(), 0u);
    std::shuffle(perm.begin(), perm.end(), gen);
    SparseBits a(perm.begin(), perm.begin() + size);
    SparseBits b(perm.begin() + (size - shared), perm.begin() + (2 * size - shared));
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    std::vector<uint32_t> inter;
    std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(inter));
    const double jaccard = static_cast<double>(inter.size()) /
                           static_cast<double>(a.size() + b.size() - inter.size());
    const auto sa = hasher.Signature(a), sb = hasher.Signature(b);
    size_t match = 0;
    for (size_t j = 0; j < sa.size(); ++j) match += sa[j] == sb[j];
    abs_err += std::abs(static_cast<double>(match) / kMinHashPermutations - jaccard);
  }
  const double mae = abs_err / kMinHashPairs;
  return {mae <= kMinHashMaeMax,
          Fmt("mean |match - Jaccard| %.4f over %d pairs, p=%zu", mae, kMinHashPairs,
              kMinHashPermutations)};
}

Outcome HaarRoundTrip() {
  std::mt19937_64 gen(707);
  std::normal_distribution<double> normal(0.0, 3.0);
  double worst_err = 0.0, worst_norm = 0.0;
  for (auto [rows, cols] : {std::pair<size_t, size_t>{32, 128}, {64, 256}, {64, 32}, {1, 8}}) {
    for (int trial = 0; trial < 20; ++trial) {
      Matrix m(rows, cols);
      for (double& x : m.data()) x = normal(gen);
      const Matrix c = Haar2d(m);
      const Matrix back = InverseHaar2d(c);
      double n0 = 0.0, n1 = 0.0;
      for (size_t i = 0; i < m.data().size(); ++i) {
        worst_err = std::max(worst_err, std::abs(back.data()[i] - m.data()[i]));
        n0 += m.data()[i] * m.data()[i];
        n1 += c.data()[i] * c.data()[i];
      }
      worst_norm = std::max(worst_norm, std::abs(std::sqrt(n0) - std::sqrt(n1)));
    }
  }
  return {worst_err <= kHaarTolerance && worst_norm <= kHaarTolerance,
          Fmt("max round-trip error %.2e, max L2 norm change %.2e", worst_err, worst_norm)};
}

// Mixed queries: degraded slices of enrolled files at several lengths plus
// audio that was never enrolled.
std::vector<std::vector<SubFingerprint>> MixedQueries(const Desk& desk, Variant v, size_t n) {
  const Fingerprinter fp(desk.profiles.at(v));
  const auto strangers = SynthesizeCorpus({.n_files = 4, .seed = 4242});
  std::vector<std::vector<SubFingerprint>> out;
  for (size_t i = 0; i < n; ++i) {
    Rng rng(MixSeed(0xba7c4, i));
    DeteriorationSpec spec;
    spec.snr_db = rng.Uniform(5.0, 35.0);
    spec.rate = rng.Uniform(0.97, 1.03);
    spec.query_len_s = 4.0 + 2.0 * static_cast<double>(i % 4);
    const auto& source = i % 5 == 4 ? strangers[i % strangers.size()].audio
                                    : desk.corpus[i % desk.corpus.size()].audio;
    out.push_back(fp.Compute(MakeQuery(source, spec, rng.Next())).subs);
  }
  return out;
}

Outcome BatchAndServerEquivalence(const Desk& desk) {
  std::ostringstream ev;
  bool pass = true;
  // Batch against element-wise serial, every variant.
  for (Variant v : kAllVariants) {
    const auto queries = MixedQueries(desk, v, kBatchQueries);
    const auto batch = desk.indexes.at(v).QueryBatch(queries);
    size_t equal = 0, hits = 0;
    for (size_t i = 0; i < queries.size(); ++i) {
      const auto serial = desk.indexes.at(v).Query(queries[i]);
      equal += batch[i] == serial;
      hits += serial.has_value();
    }
    pass = pass && equal == queries.size();
    ev << VariantName(v) << " batch " << equal << "/" << queries.size() << " equal (" << hits
       << " hits); ";
  }
  // Concurrent server sessions against the serial stream pipeline.
  const Variant v = Variant::kMelVocal;
  Engine engine(RetrievalIndex::Deserialize(desk.indexes.at(v).Serialize()), LabelRegistry{});
  SessionOptions no_enroll;
  no_enroll.enroll_on_miss = false;
  PendingLabeler pending;
  const auto strangers = SynthesizeCorpus({.n_files = 2, .seed = 5151});
  std::vector<std::vector<uint8_t>> wavs;
  std::vector<IdentifyOutcome> expected;
  for (size_t i = 0; i < kServerSessions; ++i) {
    Rng rng(MixSeed(0x5e55, i));
    DeteriorationSpec spec;
    spec.snr_db = rng.Uniform(15.0, 30.0);
    spec.rate = rng.Uniform(0.97, 1.03);
    spec.query_len_s = 9.0;
    const auto& source = i % 8 == 7 ? strangers[i % 2].audio
                                    : desk.corpus[i % desk.corpus.size()].audio;
    wavs.push_back(EncodeWav(MakeQuery(source, spec, rng.Next())));
    expected.push_back(DecodeResultPayload(
        EncodeResultPayload(IdentifyStream(engine, wavs.back(), 4096, pending, no_enroll))));
  }
  ServerOptions opts;
  opts.session = no_enroll;
  Server server(engine, opts);
  server.Start();
  std::vector<std::future<IdentifyOutcome>> futures;
  for (size_t i = 0; i < wavs.size(); ++i) {
    futures.push_back(std::async(std::launch::async, [&, i] {
      return ClientIdentify("127.0.0.1", server.port(), wavs[i], 4096);
    }));
  }
  size_t equal = 0, identified = 0;
  for (size_t i = 0; i < wavs.size(); ++i) {
    const IdentifyOutcome got = futures[i].get();
    equal += got.status == expected[i].status && got.file_id == expected[i].file_id &&
             got.label_id == expected[i].label_id && got.confidence == expected[i].confidence;
    identified += expected[i].status == OutcomeStatus::kIdentified;
  }
  server.Stop();
  pass = pass && equal == wavs.size();
  ev << "server " << equal << "/" << wavs.size() << " sessions equal (" << identified
     << " identified)";
  return {pass, ev.str()};
}

Outcome SnrCalibration(const Desk& desk) {
  double worst = 0.0;
  for (int t = 0; t < kSnrTrials; ++t) {
    Rng rng(MixSeed(0x5a7, static_cast<uint64_t>(t)));
    const double snr = rng.Uniform(-5.0, 40.0);
    const AudioBuffer clean = RandomOffsetSlice(desk.corpus[t % desk.corpus.size()].audio, 6.0,
                                                rng.Next());
    const NoiseAddition n = AddNoiseDetailed(clean, snr, rng.Next());
    worst = std::max(worst, std::abs(MeasureSnrDb(clean.samples(), n.noise) - snr));
  }
  return {worst <= kSnrToleranceDb,
          Fmt("max |realized - requested| %.2e dB over %d trials", worst, kSnrTrials)};
}

Outcome Dedup(const Desk& desk) {
  const Variant v = Variant::kMelVocal;
  RetrievalIndex index = RetrievalIndex::Deserialize(desk.indexes.at(v).Serialize());
  const Fingerprinter fp(desk.profiles.at(v));
  // An exact copy, a copy under faint noise and a copy at half the gain.
  const uint64_t first_new = desk.corpus.size() + 1;
  const std::vector<std::pair<size_t, AudioBuffer>> planted = {
      {4, desk.corpus[4].audio},
      {11, AddNoise(desk.corpus[11].audio, 40.0, 9)},
      {23, Scaled(desk.corpus[23].audio, 0.5)},
  };
  std::set<std::pair<uint64_t, uint64_t>> want;
  for (size_t k = 0; k < planted.size(); ++k) {
    index.Enroll(fp.Compute(planted[k].second, first_new + k));
    want.insert({planted[k].first + 1, first_new + k});
  }
  const auto pairs = index.FindDuplicates();
  std::set<std::pair<uint64_t, uint64_t>> got;
  double min_overlap = 1.0;
  for (const auto& p : pairs) {
    got.insert({p.first, p.second});
    if (want.count({p.first, p.second})) min_overlap = std::min(min_overlap, p.overlap);
  }
  size_t found = 0, false_pairs = 0;
  for (const auto& p : got) (want.count(p) ? found : false_pairs) += 1;
  const size_t n = index.FileIds().size();
  const size_t distinct = n * (n - 1) / 2 - want.size();
  return {found == want.size() && false_pairs == 0 && distinct >= kMinDistinctPairs,
          Fmt("%zu/%d planted pairs (min overlap %.3f), %zu false among %zu distinct pairs",
              found, kPlantedDuplicates, min_overlap, false_pairs, distinct)};
}

Outcome Latency(const Desk& desk) {
  std::ostringstream ev;
  bool pass = true;
  for (Variant v : kAllVariants) {
    const Fingerprinter fp(desk.profiles.at(v));
    std::vector<double> times;
    for (int t = 0; t < kLatencyQueries; ++t) {
      Rng rng(MixSeed(0x1a7e, static_cast<uint64_t>(t)));
      DeteriorationSpec spec;
      spec.snr_db = rng.Uniform(10.0, 30.0);
      spec.rate = rng.Uniform(0.97, 1.03);
      const AudioBuffer q = MakeQuery(desk.corpus[t % desk.corpus.size()].audio, spec, rng.Next());
      const auto start = Clock::now();
      const auto r = desk.indexes.at(v).Query(fp.Compute(q).subs);
      times.push_back(Seconds(start));
      (void)r;
    }
    const double med = Median(times);
    pass = pass && med <= kLatencyMedianMaxS;
    ev << VariantName(v) << Fmt(" median %.1f ms; ", 1e3 * med);
  }
  ev << "6 s queries, 25 ms stride, one CPU thread";
  return {pass, ev.str()};
}

Outcome Persistence(const Desk& desk) {
  const auto dir = std::filesystem::temp_directory_path() /
                   ("speechprint_accept_" + std::to_string(::getpid()));
  std::filesystem::create_directories(dir);
  std::ostringstream ev;
  bool pass = true;
  for (Variant v : kAllVariants) {
    const auto path = dir / (std::string(VariantName(v)) + ".spix");
    desk.indexes.at(v).Save(path);
    const RetrievalIndex loaded = RetrievalIndex::Load(path, desk.profiles.at(v));
    auto queries = MixedQueries(desk, v, kBatchQueries);
    for (const auto& f : desk.fingerprints.at(v)) queries.push_back(f.subs);
    size_t equal = 0;
    for (const auto& q : queries) {
      equal += desk.indexes.at(v).Rank(q) == loaded.Rank(q);
    }
    const bool same_bytes = loaded.Serialize() == desk.indexes.at(v).Serialize();
    pass = pass && equal == queries.size() && same_bytes;
    ev << VariantName(v) << " " << equal << "/" << queries.size() << " rankings equal"
       << (same_bytes ? "" : ", reserialized bytes differ") << "; ";
  }
  std::filesystem::remove_all(dir);
  return {pass, ev.str()};
}

int Run(const std::set<int>& only) {
  const auto start = Clock::now();
  const Desk desk;
  std::vector<std::pair<std::string, std::function<Outcome()>>> criteria;
  GridOutcomes grid;
  bool grid_ran = false;
  auto grid_part = [&](Outcome GridOutcomes::*part) {
    return [&, part] {
      if (!grid_ran) {
        grid = ExperimentShape(desk);
        grid_ran = true;
      }
      return grid.*part;
    };
  };
  criteria.emplace_back("self-retrieval", [&] { return SelfRetrieval(desk); });
  criteria.emplace_back("degraded retrieval", [&] { return DegradedRetrieval(desk); });
  criteria.emplace_back("plateau at 6 s", grid_part(&GridOutcomes::h1));
  criteria.emplace_back("stride decay", grid_part(&GridOutcomes::h2));
  criteria.emplace_back("variant parity", grid_part(&GridOutcomes::h3));
  criteria.emplace_back("min-hash fidelity", MinHashFidelity);
  criteria.emplace_back("haar round trip", HaarRoundTrip);
  criteria.emplace_back("batch/serial equivalence", [&] { return BatchAndServerEquivalence(desk); });
  criteria.emplace_back("snr calibration", [&] { return SnrCalibration(desk); });
  criteria.emplace_back("dedup", [&] { return Dedup(desk); });
  criteria.emplace_back("cpu latency", [&] { return Latency(desk); });
  criteria.emplace_back("persistence", [&] { return Persistence(desk); });

  int unexpected = 0, passed = 0, ran = 0;
  for (size_t i = 0; i < criteria.size(); ++i) {
    const int number = static_cast<int>(i) + 1;
    if (!only.empty() && !only.count(number)) continue;
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const bool known = kKnownShortfalls.count(number) > 0;
    std::printf("criterion %2d  %-26s %s  %s%s\n", number, criteria[i].first.c_str(),
                o.pass ? "PASS" : "FAIL", o.evidence.c_str(),
                !o.pass && known ? " [known shortfall]" : "");
    std::fflush(stdout);
    ++ran;
    passed += o.pass;
    if (!o.pass && !known) ++unexpected;
  }
  std::printf("%d/%d criteria pass, %d unexpected failure(s), %.0f s\n", passed, ran,
              unexpected, Seconds(start));
  return unexpected == 0 ? 0 : 1;
}

}  // namespace
}  // namespace speechprint

// Optional arguments select criteria by number.
int main(int argc, char** argv) {
  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));
  return speechprint::Run(only);
}
