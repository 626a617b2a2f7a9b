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


// Transcript clustering for the training phase: TF-IDF encoding with
// per-language vocabularies, k-means and DBSCAN, and keyword extraction.

#ifndef SPEECHPRINT_CLUSTERING_H_
#define SPEECHPRINT_CLUSTERING_H_

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "speechprint/matrix.h"
#include "speechprint/registry.h"

namespace speechprint {

struct TranscriptDoc {
  uint64_t file_id = 0;
  std::string language{kUnknownLanguage};
  std::vector<std::string> tokens;  // lowercase, no punctuation
};

// Lowercases ASCII letters and splits on anything that is not a letter or
// digit. Bytes >= 0x80 are kept so UTF-8 words survive intact.
std::vector<std::string> Tokenize(std::string_view text);

// Transcript file layout: optional first line "lang=<tag>", then free text.
TranscriptDoc ParseTranscript(uint64_t file_id, std::string_view text);
TranscriptDoc ReadTranscript(uint64_t file_id, const std::filesystem::path& path);

// Reads <dir>/<file_id>.txt for every numeric file name, sorted by id.
std::vector<TranscriptDoc> ReadTranscriptDir(const std::filesystem::path& dir);

// One word per line; '#' starts a comment.
std::set<std::string> ReadStopWords(const std::filesystem::path& path);

struct TfIdf {
  // Column j holds `terms[j]` of `term_language[j]`; columns of different
  // languages never mix, so rows of different languages are orthogonal.
  std::vector<std::string> terms;
  std::vector<std::string> term_language;
  std::vector<double> idf;  // log(N_lang / df)
  Matrix rows;              // n_docs x vocab, L2-normalized
  std::vector<bool> empty;  // rows that ended up all zero
};

// tf = count / doc length, idf = log(N / df) with N and df counted within the
// document's language. Empty documents give zero rows and are flagged.
TfIdf Vectorize(const std::vector<TranscriptDoc>& docs,
                const std::set<std::string>& stop_words = {});

struct KMeansResult {
  std::vector<int> assignment;
  Matrix centroids;
  std::vector<double> objective;  // sum of squared distances, per iteration
  int iterations = 0;
};

inline constexpr int kMaxKMeansIterations = 100;
inline constexpr int kDefaultKMeansRestarts = 10;

// Lloyd's algorithm with k-means++ seeding on the given rows. Stops when
// assignments repeat or after 100 iterations. Runs `restarts` seeded
// initializations and keeps the one with the lowest final objective (first
// wins ties). Throws ConfigError when k < 1, k > rows or restarts < 1.
KMeansResult KMeans(const Matrix& x, int k, uint64_t seed,
                    int restarts = kDefaultKMeansRestarts);

inline constexpr int kNoise = -1;

// DBSCAN over cosine distance 1 - <a, b> (rows are assumed unit or zero; a
// zero row is at distance 1 from everything). Points are visited in input
// order, so the labeling is deterministic. min_pts counts the point itself.
std::vector<int> Dbscan(const Matrix& x, double eps, int min_pts);

// Terms ranked by mean TF-IDF weight over the member rows, ties by term.
// Zero-weight terms are dropped; an empty result logs a warning.
std::vector<Keyword> ExtractKeywords(const TfIdf& tfidf,
                                     const std::vector<size_t>& members,
                                     size_t top_k);

enum class ClusterAlgorithm { kKMeans, kDbscan };

struct TrainOptions {
  ClusterAlgorithm algorithm = ClusterAlgorithm::kKMeans;
  int k = 8;  // per language, capped at that language's document count
  double eps = 0.5;
  int min_pts = 2;
  uint64_t seed = 1;
  size_t top_k = 5;
  std::set<std::string> stop_words;
};

struct TrainReport {
  std::map<uint64_t, uint64_t> assignment;  // file_id -> new label
  std::vector<uint64_t> unassigned;         // DBSCAN noise and empty docs
  std::vector<uint64_t> new_labels;
};

// Clusters each language separately, creates one registry cluster per group
// (named "<lang>-<n>", keywords attached) and assigns the members. Files
// left unassigned are marked pending.
TrainReport TrainClusters(const std::vector<TranscriptDoc>& docs,
                          const TrainOptions& options, LabelRegistry& registry);

// Labels a new transcript with the cluster of the same language whose
// keyword weights are most cosine-similar to the document's term
// frequencies. Returns nullopt when nothing overlaps.
std::optional<uint64_t> NearestCluster(const TranscriptDoc& doc,
                                       const LabelRegistry& registry);

}  // namespace speechprint

#endif  // SPEECHPRINT_CLUSTERING_H_
