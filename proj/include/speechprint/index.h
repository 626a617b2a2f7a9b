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

// Banded min-hash retrieval database. Each sub-fingerprint signature is cut
// into l bands of b bytes; every band is a hash-table key pointing at the
// (file, block) postings that share it. A query sub-fingerprint votes for
// every posting that matches it in at least v bands.

#ifndef SPEECHPRINT_INDEX_H_
#define SPEECHPRINT_INDEX_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <shared_mutex>
#include <span>
#include <unordered_map>
#include <vector>

#include "speechprint/fingerprint.h"

namespace speechprint {

struct BandKey {
  uint32_t band_id = 0;
  uint64_t digest = 0;

  friend bool operator==(const BandKey&, const BandKey&) = default;
};

// FNV-1a over the band's b signature bytes.
BandKey MakeBandKey(std::span<const uint8_t> signature, size_t band_id,
                    size_t band_width);

struct Posting {
  uint64_t file_id = 0;
  uint32_t block_index = 0;

  friend bool operator==(const Posting&, const Posting&) = default;
};

struct MatchResult {
  uint64_t file_id = 0;
  uint64_t score = 0;         // total band votes
  uint32_t matched_subs = 0;  // query subs with at least one vote
  double confidence = 0.0;    // matched_subs / query sub count

  friend bool operator==(const MatchResult&, const MatchResult&) = default;
};

// nullopt means the audio is not in the database.
using QueryResult = std::optional<MatchResult>;

inline constexpr int kDefaultMinBandVotes = 8;
inline constexpr double kDefaultMinConfidence = 0.1;
inline constexpr double kDefaultDuplicateThreshold = 0.8;

struct QueryOptions {
  int min_band_votes = kDefaultMinBandVotes;      // v
  double min_confidence = kDefaultMinConfidence;  // c
};

struct DuplicatePair {
  uint64_t first = 0;  // first < second
  uint64_t second = 0;
  double overlap = 0.0;

  friend bool operator==(const DuplicatePair&, const DuplicatePair&) = default;
};

struct IndexStats {
  size_t files = 0;
  size_t sub_fingerprints = 0;
  size_t postings = 0;
  size_t distinct_keys = 0;
};

// Thread-safe: queries share a reader lock, mutations take it exclusively.
class RetrievalIndex {
 public:
  explicit RetrievalIndex(const Profile& profile);

  RetrievalIndex(const RetrievalIndex&) = delete;
  RetrievalIndex& operator=(const RetrievalIndex&) = delete;
  RetrievalIndex(RetrievalIndex&&) noexcept;
  RetrievalIndex& operator=(RetrievalIndex&&) noexcept;

  const Profile& profile() const { return profile_; }

  // Throws DuplicateId if the file is already enrolled and ConfigError if a
  // signature has the wrong length.
  void Enroll(const Fingerprint& fp);
  bool Contains(uint64_t file_id) const;
  std::vector<uint64_t> FileIds() const;
  // Stored sub-fingerprints of an enrolled file; throws NotFound.
  Fingerprint GetFingerprint(uint64_t file_id) const;

  // Best file for the query sub-fingerprints: most matched subs, then most
  // band votes, then lowest id; nullopt if its confidence is below
  // min_confidence. Throws ConfigError for an empty query.
  QueryResult Query(std::span<const SubFingerprint> subs,
                    const QueryOptions& options = {}) const;

  // Every file that received a vote, in result order.
  std::vector<MatchResult> Rank(std::span<const SubFingerprint> subs,
                                const QueryOptions& options = {}) const;

  // Element-wise identical to calling Query on each entry; band lookups are
  // shared across the batch under one reader lock.
  std::vector<QueryResult> QueryBatch(
      std::span<const std::vector<SubFingerprint>> queries,
      const QueryOptions& options = {}) const;

  // Pairs whose fingerprint overlap exceeds `threshold`. The overlap of a in
  // b is the fraction of a's subs that match some block of b in at least
  // min_band_votes bands; a pair reports the larger of both directions.
  // Throws ConfigError for an empty index or threshold outside (0, 1].
  std::vector<DuplicatePair> FindDuplicates(
      double threshold = kDefaultDuplicateThreshold,
      int min_band_votes = kDefaultMinBandVotes) const;

  // Removes a file and its postings; throws NotFound.
  void Remove(uint64_t file_id);

  IndexStats Stats() const;

  // File layout: "SPIX", u16 version, u64 profile digest, profile text,
  // enrolled fingerprints, then the l posting tables (keys ascending), and a
  // trailing FNV-1a 64 checksum of everything before it.
  std::vector<uint8_t> Serialize() const;
  // Throws CorruptIndex on damage and IncompatibleIndex on a version or
  // (when `expected` is given) profile mismatch.
  static RetrievalIndex Deserialize(std::span<const uint8_t> bytes,
                                    const std::optional<Profile>& expected = {});
  // Writes atomically via a temporary file and rename.
  void Save(const std::filesystem::path& path) const;
  static RetrievalIndex Load(const std::filesystem::path& path,
                             const std::optional<Profile>& expected = {});

 private:
  struct StoredSub {
    uint32_t block_index;
    std::vector<uint8_t> signature;
  };
  struct FileRecord {
    uint64_t file_id;
    std::vector<StoredSub> subs;
  };
  struct Entry {
    uint32_t slot;  // index into files_
    uint32_t block_index;
  };
  using Table = std::unordered_map<uint64_t, std::vector<Entry>>;

  // Per-file tallies for one query.
  struct Tally {
    uint64_t votes = 0;
    uint32_t matched_subs = 0;
  };

  template <typename Lookup>
  void VoteSub(std::span<const uint8_t> signature, int min_band_votes,
               Lookup&& lookup,
               std::unordered_map<uint32_t, Tally>& tallies) const;
  std::vector<MatchResult> Finish(
      const std::unordered_map<uint32_t, Tally>& tallies,
      size_t query_subs) const;
  void CheckQuery(std::span<const SubFingerprint> subs) const;
  void InsertLocked(FileRecord record);

  Profile profile_;
  size_t band_count_;
  size_t band_width_;
  mutable std::shared_mutex mu_;
  std::vector<FileRecord> files_;  // slot -> record; removed slots are empty
  std::unordered_map<uint64_t, uint32_t> slots_;
  std::vector<Table> tables_;
};

}  // namespace speechprint

#endif  // SPEECHPRINT_INDEX_H_
