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

#include "speechprint/index.h"

#include <algorithm>
#include <cstdio>
#include <map>
#include <mutex>
#include <string>

#include "speechprint/bytes.h"
#include "speechprint/errors.h"
#include "speechprint/fileio.h"
#include "speechprint/hash.h"

namespace speechprint {
namespace {

constexpr char kIndexMagic[] = "SPIX";
constexpr uint16_t kIndexVersion = 1;

// A band made only of capped values carries no information (it is what an
// empty or near-empty bit vector hashes to) and is neither indexed nor voted.
bool Uninformative(std::span<const uint8_t> band) {
  return std::all_of(band.begin(), band.end(),
                     [](uint8_t v) { return v == kMinHashCap; });
}

uint64_t PackKey(uint32_t slot, uint32_t block) {
  return (static_cast<uint64_t>(slot) << 32) | block;
}

}  // namespace

BandKey MakeBandKey(std::span<const uint8_t> signature, size_t band_id,
                    size_t band_width) {
  return {static_cast<uint32_t>(band_id),
          Fnv1a64(signature.subspan(band_id * band_width, band_width))};
}

RetrievalIndex::RetrievalIndex(const Profile& profile) : profile_(profile) {
  profile_.Validate();
  band_count_ = static_cast<size_t>(profile_.fingerprint.band_count);
  band_width_ = static_cast<size_t>(profile_.fingerprint.band_width);
  tables_.resize(band_count_);
}

RetrievalIndex::RetrievalIndex(RetrievalIndex&& other) noexcept {
  std::unique_lock lock(other.mu_);
  profile_ = std::move(other.profile_);
  band_count_ = other.band_count_;
  band_width_ = other.band_width_;
  files_ = std::move(other.files_);
  slots_ = std::move(other.slots_);
  tables_ = std::move(other.tables_);
}

RetrievalIndex& RetrievalIndex::operator=(RetrievalIndex&& other) noexcept {
  if (this == &other) return *this;
  std::scoped_lock lock(mu_, other.mu_);
  profile_ = std::move(other.profile_);
  band_count_ = other.band_count_;
  band_width_ = other.band_width_;
  files_ = std::move(other.files_);
  slots_ = std::move(other.slots_);
  tables_ = std::move(other.tables_);
  return *this;
}

void RetrievalIndex::InsertLocked(FileRecord record) {
  const auto slot = static_cast<uint32_t>(files_.size());
  for (const auto& sub : record.subs) {
    for (size_t j = 0; j < band_count_; ++j) {
      auto band = std::span<const uint8_t>(sub.signature).subspan(j * band_width_,
                                                                  band_width_);
      if (Uninformative(band)) continue;
      tables_[j][Fnv1a64(band)].push_back({slot, sub.block_index});
    }
  }
  slots_.emplace(record.file_id, slot);
  files_.push_back(std::move(record));
}

void RetrievalIndex::Enroll(const Fingerprint& fp) {
  const auto p = static_cast<size_t>(profile_.fingerprint.n_permutations);
  FileRecord record{fp.file_id, {}};
  record.subs.reserve(fp.subs.size());
  for (const auto& sub : fp.subs) {
    if (sub.signature.size() != p) {
      throw ConfigError("signature length does not match the index profile");
    }
    if (!record.subs.empty() && sub.block_index <= record.subs.back().block_index) {
      throw ConfigError("sub-fingerprints must have increasing block indices");
    }
    record.subs.push_back({sub.block_index, sub.signature});
  }
  std::unique_lock lock(mu_);
  if (slots_.contains(fp.file_id)) {
    throw DuplicateId("file id " + std::to_string(fp.file_id) +
                      " is already enrolled");
  }
  InsertLocked(std::move(record));
}

void RetrievalIndex::Remove(uint64_t file_id) {
  std::unique_lock lock(mu_);
  auto it = slots_.find(file_id);
  if (it == slots_.end()) throw NotFound("file id not enrolled");
  const uint32_t slot = it->second;
  for (const auto& sub : files_[slot].subs) {
    for (size_t j = 0; j < band_count_; ++j) {
      auto band = std::span<const uint8_t>(sub.signature).subspan(j * band_width_,
                                                                  band_width_);
      auto bucket = tables_[j].find(Fnv1a64(band));
      if (bucket == tables_[j].end()) continue;
      std::erase_if(bucket->second, [slot](const Entry& e) { return e.slot == slot; });
      if (bucket->second.empty()) tables_[j].erase(bucket);
    }
  }
  files_[slot].subs.clear();
  slots_.erase(it);
}

bool RetrievalIndex::Contains(uint64_t file_id) const {
  std::shared_lock lock(mu_);
  return slots_.contains(file_id);
}

std::vector<uint64_t> RetrievalIndex::FileIds() const {
  std::shared_lock lock(mu_);
  std::vector<uint64_t> ids;
  ids.reserve(slots_.size());
  for (const auto& [id, slot] : slots_) ids.push_back(id);
  std::sort(ids.begin(), ids.end());
  return ids;
}

Fingerprint RetrievalIndex::GetFingerprint(uint64_t file_id) const {
  std::shared_lock lock(mu_);
  auto it = slots_.find(file_id);
  if (it == slots_.end()) throw NotFound("file id not enrolled");
  Fingerprint fp;
  fp.file_id = file_id;
  const size_t hop = static_cast<size_t>(profile_.fingerprint.block_hop_frames);
  const double stride_s =
      static_cast<double>(std::llround(profile_.spectral.stride_s *
                                       kCanonicalSampleRate)) /
      kCanonicalSampleRate;
  for (const auto& sub : files_[it->second].subs) {
    fp.subs.push_back({sub.signature, sub.block_index,
                       static_cast<double>(sub.block_index * hop) * stride_s});
  }
  return fp;
}

template <typename Lookup>
void RetrievalIndex::VoteSub(std::span<const uint8_t> signature,
                             int min_band_votes, Lookup&& lookup,
                             std::unordered_map<uint32_t, Tally>& tallies) const {
  std::unordered_map<uint64_t, uint32_t> counts;
  for (size_t j = 0; j < band_count_; ++j) {
    auto band = signature.subspan(j * band_width_, band_width_);
    if (Uninformative(band)) continue;
    const std::vector<Entry>* postings = lookup(j, Fnv1a64(band));
    if (postings == nullptr) continue;
    for (const Entry& e : *postings) ++counts[PackKey(e.slot, e.block_index)];
  }
  std::unordered_map<uint32_t, uint64_t> votes;
  for (const auto& [key, count] : counts) {
    if (count >= static_cast<uint32_t>(std::max(min_band_votes, 1))) {
      votes[static_cast<uint32_t>(key >> 32)] += count;
    }
  }
  for (const auto& [slot, v] : votes) {
    Tally& t = tallies[slot];
    t.votes += v;
    t.matched_subs += 1;
  }
}

std::vector<MatchResult> RetrievalIndex::Finish(
    const std::unordered_map<uint32_t, Tally>& tallies,
    size_t query_subs) const {
  std::vector<MatchResult> ranked;
  ranked.reserve(tallies.size());
  for (const auto& [slot, t] : tallies) {
    ranked.push_back({files_[slot].file_id, t.votes, t.matched_subs,
                      static_cast<double>(t.matched_subs) /
                          static_cast<double>(query_subs)});
  }
  std::sort(ranked.begin(), ranked.end(),
            [](const MatchResult& a, const MatchResult& b) {
              if (a.matched_subs != b.matched_subs) {
                return a.matched_subs > b.matched_subs;
              }
              if (a.score != b.score) return a.score > b.score;
              return a.file_id < b.file_id;
            });
  return ranked;
}

void RetrievalIndex::CheckQuery(std::span<const SubFingerprint> subs) const {
  if (subs.empty()) throw ConfigError("query needs at least one sub-fingerprint");
  const auto p = static_cast<size_t>(profile_.fingerprint.n_permutations);
  for (const auto& sub : subs) {
    if (sub.signature.size() != p) {
      throw ConfigError("signature length does not match the index profile");
    }
  }
}

std::vector<MatchResult> RetrievalIndex::Rank(std::span<const SubFingerprint> subs,
                                              const QueryOptions& options) const {
  CheckQuery(subs);
  std::shared_lock lock(mu_);
  auto lookup = [this](size_t band, uint64_t digest) -> const std::vector<Entry>* {
    auto it = tables_[band].find(digest);
    return it == tables_[band].end() ? nullptr : &it->second;
  };
  std::unordered_map<uint32_t, Tally> tallies;
  for (const auto& sub : subs) {
    VoteSub(sub.signature, options.min_band_votes, lookup, tallies);
  }
  return Finish(tallies, subs.size());
}

namespace {

QueryResult PickBest(const std::vector<MatchResult>& ranked,
                     const QueryOptions& options) {
  if (ranked.empty() || ranked.front().confidence < options.min_confidence) {
    return std::nullopt;
  }
  return ranked.front();
}

}  // namespace

QueryResult RetrievalIndex::Query(std::span<const SubFingerprint> subs,
                                  const QueryOptions& options) const {
  return PickBest(Rank(subs, options), options);
}

std::vector<QueryResult> RetrievalIndex::QueryBatch(
    std::span<const std::vector<SubFingerprint>> queries,
    const QueryOptions& options) const {
  if (queries.empty()) throw ConfigError("batch needs at least one query");
  for (const auto& q : queries) CheckQuery(q);
  std::shared_lock lock(mu_);

  // Resolve every distinct band key of the batch once.
  std::vector<std::unordered_map<uint64_t, const std::vector<Entry>*>> resolved(
      band_count_);
  for (const auto& q : queries) {
    for (const auto& sub : q) {
      for (size_t j = 0; j < band_count_; ++j) {
        auto band = std::span<const uint8_t>(sub.signature)
                        .subspan(j * band_width_, band_width_);
        if (Uninformative(band)) continue;
        const uint64_t digest = Fnv1a64(band);
        auto [slot, inserted] = resolved[j].try_emplace(digest, nullptr);
        if (inserted) {
          auto it = tables_[j].find(digest);
          if (it != tables_[j].end()) slot->second = &it->second;
        }
      }
    }
  }
  auto lookup = [&resolved](size_t band,
                            uint64_t digest) -> const std::vector<Entry>* {
    return resolved[band].at(digest);
  };

  std::vector<QueryResult> results;
  results.reserve(queries.size());
  for (const auto& q : queries) {
    std::unordered_map<uint32_t, Tally> tallies;
    for (const auto& sub : q) {
      VoteSub(sub.signature, options.min_band_votes, lookup, tallies);
    }
    results.push_back(PickBest(Finish(tallies, q.size()), options));
  }
  return results;
}

std::vector<DuplicatePair> RetrievalIndex::FindDuplicates(
    double threshold, int min_band_votes) const {
  if (!(threshold > 0.0 && threshold <= 1.0)) {
    throw ConfigError("duplicate threshold must lie in (0, 1]");
  }
  std::shared_lock lock(mu_);
  if (slots_.empty()) throw ConfigError("index is empty");
  auto lookup = [this](size_t band, uint64_t digest) -> const std::vector<Entry>* {
    auto it = tables_[band].find(digest);
    return it == tables_[band].end() ? nullptr : &it->second;
  };

  // overlap[(a, b)] = fraction of a's subs matching some block of b.
  std::map<std::pair<uint64_t, uint64_t>, double> directed;
  for (const auto& [id, slot] : slots_) {
    const auto& subs = files_[slot].subs;
    if (subs.empty()) continue;
    std::unordered_map<uint32_t, Tally> tallies;
    for (const auto& sub : subs) {
      VoteSub(sub.signature, min_band_votes, lookup, tallies);
    }
    for (const auto& [other, t] : tallies) {
      if (other == slot) continue;
      directed[{id, files_[other].file_id}] =
          static_cast<double>(t.matched_subs) / static_cast<double>(subs.size());
    }
  }
  std::map<std::pair<uint64_t, uint64_t>, double> pairs;
  for (const auto& [key, overlap] : directed) {
    const auto ordered = std::minmax(key.first, key.second);
    double& slot = pairs[{ordered.first, ordered.second}];
    slot = std::max(slot, overlap);
  }
  std::vector<DuplicatePair> out;
  for (const auto& [key, overlap] : pairs) {
    if (overlap > threshold) out.push_back({key.first, key.second, overlap});
  }
  return out;
}

IndexStats RetrievalIndex::Stats() const {
  std::shared_lock lock(mu_);
  IndexStats stats;
  stats.files = slots_.size();
  for (const auto& [id, slot] : slots_) {
    stats.sub_fingerprints += files_[slot].subs.size();
  }
  for (const auto& table : tables_) {
    stats.distinct_keys += table.size();
    for (const auto& [key, postings] : table) stats.postings += postings.size();
  }
  return stats;
}

std::vector<uint8_t> RetrievalIndex::Serialize() const {
  std::shared_lock lock(mu_);
  ByteWriter w;
  w.Raw(std::string_view(kIndexMagic, 4));
  w.U16(kIndexVersion);
  w.U64(profile_.Digest());
  w.String(profile_.ToString());

  std::vector<std::pair<uint64_t, uint32_t>> live(slots_.begin(), slots_.end());
  std::sort(live.begin(), live.end());
  w.U32(static_cast<uint32_t>(live.size()));
  for (const auto& [id, slot] : live) {
    const auto& record = files_[slot];
    w.U64(id);
    w.U32(static_cast<uint32_t>(record.subs.size()));
    for (const auto& sub : record.subs) {
      w.U32(sub.block_index);
      w.Raw(sub.signature);
    }
  }

  w.U32(static_cast<uint32_t>(band_count_));
  for (const auto& table : tables_) {
    std::vector<uint64_t> keys;
    keys.reserve(table.size());
    for (const auto& [key, postings] : table) keys.push_back(key);
    std::sort(keys.begin(), keys.end());
    w.U64(keys.size());
    for (uint64_t key : keys) {
      std::vector<Posting> postings;
      for (const Entry& e : table.at(key)) {
        postings.push_back({files_[e.slot].file_id, e.block_index});
      }
      std::sort(postings.begin(), postings.end(),
                [](const Posting& a, const Posting& b) {
                  return a.file_id != b.file_id ? a.file_id < b.file_id
                                                : a.block_index < b.block_index;
                });
      w.U64(key);
      w.U32(static_cast<uint32_t>(postings.size()));
      for (const auto& p : postings) {
        w.U64(p.file_id);
        w.U32(p.block_index);
      }
    }
  }
  const uint64_t checksum = Fnv1a64(w.bytes());
  w.U64(checksum);
  return w.Take();
}

RetrievalIndex RetrievalIndex::Deserialize(std::span<const uint8_t> bytes,
                                           const std::optional<Profile>& expected) {
  if (bytes.size() < 4 + 2 + 8 + 8) throw CorruptIndex("index file too short");
  const auto body = bytes.first(bytes.size() - 8);
  ByteReader<CorruptIndex> tail(bytes.last(8));
  if (tail.U64() != Fnv1a64(body)) throw CorruptIndex("index checksum mismatch");

  ByteReader<CorruptIndex> r(body);
  if (std::memcmp(r.Raw(4).data(), kIndexMagic, 4) != 0) {
    throw CorruptIndex("not an index file");
  }
  if (r.U16() != kIndexVersion) throw IncompatibleIndex("unsupported index version");
  const uint64_t digest = r.U64();
  Profile stored;
  try {
    stored = Profile::Parse(r.String());
  } catch (const ConfigError& e) {
    throw CorruptIndex(std::string("bad profile in index: ") + e.what());
  }
  if (stored.Digest() != digest) throw CorruptIndex("profile digest mismatch");
  if (expected && expected->Digest() != digest) {
    throw IncompatibleIndex("index was built with a different profile");
  }

  RetrievalIndex index(stored);
  const auto p = static_cast<size_t>(stored.fingerprint.n_permutations);
  const uint32_t n_files = r.U32();
  for (uint32_t f = 0; f < n_files; ++f) {
    FileRecord record{r.U64(), {}};
    const uint32_t n_subs = r.U32();
    for (uint32_t s = 0; s < n_subs; ++s) {
      StoredSub sub;
      sub.block_index = r.U32();
      auto sig = r.Raw(p);
      sub.signature.assign(sig.begin(), sig.end());
      record.subs.push_back(std::move(sub));
    }
    if (index.slots_.contains(record.file_id)) throw CorruptIndex("duplicate file id");
    index.slots_.emplace(record.file_id, static_cast<uint32_t>(index.files_.size()));
    index.files_.push_back(std::move(record));
  }
  if (r.U32() != index.band_count_) throw CorruptIndex("band count mismatch");
  for (auto& table : index.tables_) {
    const uint64_t n_keys = r.U64();
    for (uint64_t k = 0; k < n_keys; ++k) {
      const uint64_t key = r.U64();
      const uint32_t n_postings = r.U32();
      auto& bucket = table[key];
      bucket.reserve(n_postings);
      for (uint32_t i = 0; i < n_postings; ++i) {
        const uint64_t file_id = r.U64();
        const uint32_t block = r.U32();
        auto it = index.slots_.find(file_id);
        if (it == index.slots_.end()) throw CorruptIndex("posting for unknown file");
        bucket.push_back({it->second, block});
      }
    }
  }
  if (r.remaining() != 0) throw CorruptIndex("trailing bytes in index");
  return index;
}

void RetrievalIndex::Save(const std::filesystem::path& path) const {
  WriteFileAtomic(path, Serialize());
}

RetrievalIndex RetrievalIndex::Load(const std::filesystem::path& path,
                                    const std::optional<Profile>& expected) {
  return Deserialize(ReadFileBytes(path), expected);
}

}  // namespace speechprint
