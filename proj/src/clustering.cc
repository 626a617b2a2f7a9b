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


#include "speechprint/clustering.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <numeric>
#include <utility>

#include "speechprint/errors.h"
#include "speechprint/fileio.h"
#include "speechprint/hash.h"
#include "speechprint/log.h"

namespace speechprint {
namespace {

bool IsWordByte(unsigned char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
         (c >= '0' && c <= '9') || c >= 0x80;
}

double SquaredDistance(std::span<const double> a, std::span<const double> b) {
  double acc = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    acc += d * d;
  }
  return acc;
}

double Dot(std::span<const double> a, std::span<const double> b) {
  double acc = 0.0;
  for (size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

// Index of the nearest centroid; ties go to the lower index.
int Nearest(std::span<const double> x, const Matrix& centroids, double* dist) {
  int best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (size_t c = 0; c < centroids.rows(); ++c) {
    const double d = SquaredDistance(x, centroids.row(c));
    if (d < best_d) {
      best_d = d;
      best = static_cast<int>(c);
    }
  }
  if (dist) *dist = best_d;
  return best;
}

}  // namespace

std::vector<std::string> Tokenize(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  for (unsigned char c : text) {
    if (IsWordByte(c)) {
      cur.push_back(c >= 'A' && c <= 'Z' ? static_cast<char>(c - 'A' + 'a')
                                         : static_cast<char>(c));
    } else if (!cur.empty()) {
      out.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

TranscriptDoc ParseTranscript(uint64_t file_id, std::string_view text) {
  TranscriptDoc doc;
  doc.file_id = file_id;
  if (text.substr(0, 5) == "lang=") {
    size_t eol = text.find('\n');
    std::string_view tag = text.substr(5, eol == std::string_view::npos
                                              ? std::string_view::npos
                                              : eol - 5);
    while (!tag.empty() && (tag.back() == '\r' || tag.back() == ' ')) {
      tag.remove_suffix(1);
    }
    if (!tag.empty()) doc.language = std::string(tag);
    text = eol == std::string_view::npos ? std::string_view() : text.substr(eol + 1);
  }
  doc.tokens = Tokenize(text);
  return doc;
}

TranscriptDoc ReadTranscript(uint64_t file_id,
                             const std::filesystem::path& path) {
  return ParseTranscript(file_id, ReadFileText(path));
}

std::vector<TranscriptDoc> ReadTranscriptDir(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::directory_iterator it(dir, ec);
  if (ec) throw IoError("cannot list " + dir.string());
  std::vector<std::pair<uint64_t, std::filesystem::path>> files;
  for (const auto& entry : it) {
    if (!entry.is_regular_file() || entry.path().extension() != ".txt") continue;
    const std::string stem = entry.path().stem().string();
    uint64_t id = 0;
    const auto [ptr, err] = std::from_chars(stem.data(), stem.data() + stem.size(), id);
    if (err != std::errc() || ptr != stem.data() + stem.size()) {
      LogWarning("skipping transcript with non-numeric name: " +
                 entry.path().string());
      continue;
    }
    files.emplace_back(id, entry.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<TranscriptDoc> docs;
  docs.reserve(files.size());
  for (const auto& [id, path] : files) docs.push_back(ReadTranscript(id, path));
  return docs;
}

std::set<std::string> ReadStopWords(const std::filesystem::path& path) {
  std::set<std::string> out;
  const std::string text = ReadFileText(path);
  size_t pos = 0;
  while (pos < text.size()) {
    size_t eol = text.find('\n', pos);
    if (eol == std::string::npos) eol = text.size();
    std::string_view line(text.data() + pos, eol - pos);
    pos = eol + 1;
    if (const size_t hash = line.find('#'); hash != std::string_view::npos) {
      line = line.substr(0, hash);
    }
    for (auto& t : Tokenize(line)) out.insert(std::move(t));
  }
  return out;
}

TfIdf Vectorize(const std::vector<TranscriptDoc>& docs,
                const std::set<std::string>& stop_words) {
  TfIdf out;
  std::map<std::pair<std::string, std::string>, size_t> column;  // (lang, term)
  std::map<std::string, size_t> docs_per_language;
  std::vector<size_t> df;
  std::vector<std::map<size_t, double>> counts(docs.size());
  for (size_t d = 0; d < docs.size(); ++d) {
    const auto& doc = docs[d];
    ++docs_per_language[doc.language];
    for (const auto& tok : doc.tokens) {
      if (stop_words.count(tok)) continue;
      auto [it, inserted] = column.try_emplace({doc.language, tok}, out.terms.size());
      if (inserted) {
        out.terms.push_back(tok);
        out.term_language.push_back(doc.language);
        df.push_back(0);
      }
      if (counts[d][it->second]++ == 0) ++df[it->second];
    }
  }
  out.idf.resize(out.terms.size());
  for (size_t j = 0; j < out.terms.size(); ++j) {
    const double n = static_cast<double>(docs_per_language[out.term_language[j]]);
    out.idf[j] = std::log(n / static_cast<double>(df[j]));
  }
  out.rows = Matrix(docs.size(), out.terms.size());
  out.empty.assign(docs.size(), false);
  for (size_t d = 0; d < docs.size(); ++d) {
    double total = 0.0;
    for (const auto& [j, c] : counts[d]) total += c;
    auto row = out.rows.row(d);
    double norm = 0.0;
    for (const auto& [j, c] : counts[d]) {
      row[j] = (c / total) * out.idf[j];
      norm += row[j] * row[j];
    }
    if (norm > 0.0) {
      const double inv = 1.0 / std::sqrt(norm);
      for (double& v : row) v *= inv;
    } else {
      out.empty[d] = true;
      LogWarning("transcript of file " + std::to_string(docs[d].file_id) +
                 " has no informative terms");
    }
  }
  return out;
}

namespace {

KMeansResult KMeansOnce(const Matrix& x, int k, uint64_t seed) {
  const size_t n = x.rows();
  KMeansResult res;
  res.centroids = Matrix(k, x.cols());
  Rng rng(seed);

  // k-means++ seeding.
  std::vector<bool> chosen(n, false);
  std::vector<double> d2(n, std::numeric_limits<double>::infinity());
  size_t first = rng.Below(n);
  for (int c = 0; c < k; ++c) {
    size_t pick = first;
    if (c > 0) {
      double total = 0.0;
      for (size_t i = 0; i < n; ++i) total += chosen[i] ? 0.0 : d2[i];
      if (total > 0.0) {
        double r = rng.Uniform() * total;
        pick = n;
        for (size_t i = 0; i < n; ++i) {
          if (chosen[i] || d2[i] <= 0.0) continue;
          pick = i;
          r -= d2[i];
          if (r < 0.0) break;
        }
      } else {
        // Every remaining point coincides with a centroid.
        pick = std::find(chosen.begin(), chosen.end(), false) - chosen.begin();
      }
    }
    chosen[pick] = true;
    std::copy(x.row(pick).begin(), x.row(pick).end(), res.centroids.row(c).begin());
    for (size_t i = 0; i < n; ++i) {
      d2[i] = std::min(d2[i], SquaredDistance(x.row(i), res.centroids.row(c)));
    }
  }

  res.assignment.assign(n, -1);
  for (int iter = 0; iter < kMaxKMeansIterations; ++iter) {
    bool changed = false;
    double objective = 0.0;
    for (size_t i = 0; i < n; ++i) {
      double dist = 0.0;
      const int a = Nearest(x.row(i), res.centroids, &dist);
      objective += dist;
      if (a != res.assignment[i]) {
        res.assignment[i] = a;
        changed = true;
      }
    }
    res.objective.push_back(objective);
    res.iterations = iter + 1;
    if (!changed) break;
    // Update step; an empty cluster keeps its previous centroid.
    Matrix sums(k, x.cols());
    std::vector<size_t> sizes(k, 0);
    for (size_t i = 0; i < n; ++i) {
      const int a = res.assignment[i];
      ++sizes[a];
      auto s = sums.row(a);
      auto r = x.row(i);
      for (size_t j = 0; j < r.size(); ++j) s[j] += r[j];
    }
    for (int c = 0; c < k; ++c) {
      if (sizes[c] == 0) continue;
      auto s = sums.row(c);
      auto dst = res.centroids.row(c);
      for (size_t j = 0; j < s.size(); ++j) dst[j] = s[j] / static_cast<double>(sizes[c]);
    }
  }
  return res;
}

}  // namespace

KMeansResult KMeans(const Matrix& x, int k, uint64_t seed, int restarts) {
  const size_t n = x.rows();
  if (k < 1 || static_cast<size_t>(k) > n) {
    throw ConfigError("k must lie in [1, " + std::to_string(n) + "], got " +
                      std::to_string(k));
  }
  if (restarts < 1) throw ConfigError("k-means needs at least one restart");
  KMeansResult best = KMeansOnce(x, k, MixSeed(seed, 0));
  for (int r = 1; r < restarts; ++r) {
    KMeansResult run = KMeansOnce(x, k, MixSeed(seed, static_cast<uint64_t>(r)));
    if (run.objective.back() < best.objective.back()) best = std::move(run);
  }
  return best;
}

std::vector<int> Dbscan(const Matrix& x, double eps, int min_pts) {
  if (!(eps > 0.0)) throw ConfigError("eps must be positive");
  if (min_pts < 1) throw ConfigError("min_pts must be at least 1");
  const size_t n = x.rows();
  std::vector<double> norms(n);
  for (size_t i = 0; i < n; ++i) norms[i] = Dot(x.row(i), x.row(i));
  auto neighbors = [&](size_t i) {
    std::vector<size_t> out;
    for (size_t j = 0; j < n; ++j) {
      double dist = 1.0;
      if (norms[i] > 0.0 && norms[j] > 0.0) dist = 1.0 - Dot(x.row(i), x.row(j));
      if (i == j || dist <= eps) out.push_back(j);
    }
    return out;
  };

  constexpr int kUnvisited = -2;
  std::vector<int> label(n, kUnvisited);
  int next = 0;
  for (size_t i = 0; i < n; ++i) {
    if (label[i] != kUnvisited) continue;
    auto seeds = neighbors(i);
    if (static_cast<int>(seeds.size()) < min_pts) {
      label[i] = kNoise;
      continue;
    }
    const int c = next++;
    label[i] = c;
    for (size_t s = 0; s < seeds.size(); ++s) {
      const size_t q = seeds[s];
      if (label[q] == kNoise) label[q] = c;  // border point
      if (label[q] != kUnvisited) continue;
      label[q] = c;
      auto more = neighbors(q);
      if (static_cast<int>(more.size()) >= min_pts) {
        seeds.insert(seeds.end(), more.begin(), more.end());
      }
    }
  }
  return label;
}

std::vector<Keyword> ExtractKeywords(const TfIdf& tfidf,
                                     const std::vector<size_t>& members,
                                     size_t top_k) {
  std::vector<Keyword> ranked;
  if (!members.empty()) {
    std::vector<double> mean(tfidf.terms.size(), 0.0);
    for (size_t m : members) {
      auto r = tfidf.rows.row(m);
      for (size_t j = 0; j < r.size(); ++j) mean[j] += r[j];
    }
    for (size_t j = 0; j < mean.size(); ++j) {
      const double w = mean[j] / static_cast<double>(members.size());
      if (w > 0.0) ranked.push_back({tfidf.terms[j], w});
    }
    std::sort(ranked.begin(), ranked.end(), [](const Keyword& a, const Keyword& b) {
      if (a.weight != b.weight) return a.weight > b.weight;
      return a.term < b.term;
    });
  }
  if (ranked.size() > top_k) ranked.resize(top_k);
  if (ranked.empty()) LogWarning("cluster has no keywords");
  return ranked;
}

TrainReport TrainClusters(const std::vector<TranscriptDoc>& docs,
                          const TrainOptions& options, LabelRegistry& registry) {
  TrainReport report;
  if (docs.empty()) return report;
  const TfIdf tfidf = Vectorize(docs, options.stop_words);

  std::map<std::string, std::vector<size_t>> by_language;
  for (size_t d = 0; d < docs.size(); ++d) {
    if (tfidf.empty[d]) {
      report.unassigned.push_back(docs[d].file_id);
      continue;
    }
    by_language[docs[d].language].push_back(d);
  }

  for (const auto& [language, members] : by_language) {
    Matrix sub(members.size(), tfidf.rows.cols());
    for (size_t i = 0; i < members.size(); ++i) {
      auto src = tfidf.rows.row(members[i]);
      std::copy(src.begin(), src.end(), sub.row(i).begin());
    }
    std::vector<int> labels;
    if (options.algorithm == ClusterAlgorithm::kKMeans) {
      const int k = std::min<int>(options.k, static_cast<int>(members.size()));
      labels = KMeans(sub, k, MixSeed(options.seed, Fnv1a64(language))).assignment;
    } else {
      labels = Dbscan(sub, options.eps, options.min_pts);
    }
    const int n_groups = labels.empty() ? 0 : *std::max_element(labels.begin(), labels.end()) + 1;
    std::vector<std::vector<size_t>> groups(std::max(n_groups, 0));
    for (size_t i = 0; i < members.size(); ++i) {
      if (labels[i] == kNoise) {
        report.unassigned.push_back(docs[members[i]].file_id);
      } else {
        groups[labels[i]].push_back(members[i]);
      }
    }
    int ordinal = 0;
    for (const auto& group : groups) {
      if (group.empty()) continue;
      const uint64_t label = registry.AddCluster(
          language + "-" + std::to_string(ordinal++), language,
          ExtractKeywords(tfidf, group, options.top_k));
      report.new_labels.push_back(label);
      for (size_t d : group) {
        registry.Assign(docs[d].file_id, label);
        report.assignment[docs[d].file_id] = label;
      }
    }
  }
  std::sort(report.unassigned.begin(), report.unassigned.end());
  for (uint64_t id : report.unassigned) registry.MarkPending(id);
  return report;
}

std::optional<uint64_t> NearestCluster(const TranscriptDoc& doc,
                                       const LabelRegistry& registry) {
  std::map<std::string, double> tf;
  for (const auto& t : doc.tokens) tf[t] += 1.0;
  double doc_norm = 0.0;
  for (const auto& [t, c] : tf) doc_norm += c * c;
  if (doc_norm == 0.0) return std::nullopt;

  std::optional<uint64_t> best;
  double best_score = 0.0;
  for (const auto& c : registry.Clusters()) {
    if (c.language != doc.language || c.keywords.empty()) continue;
    double dot = 0.0, kw_norm = 0.0;
    for (const auto& k : c.keywords) {
      kw_norm += k.weight * k.weight;
      if (auto it = tf.find(k.term); it != tf.end()) dot += it->second * k.weight;
    }
    if (kw_norm == 0.0) continue;
    const double score = dot / std::sqrt(doc_norm * kw_norm);
    if (score > best_score) {
      best_score = score;
      best = c.label_id;
    }
  }
  return best;
}

}  // namespace speechprint
