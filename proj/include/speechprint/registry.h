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

// The file-id to label lookup table and the cluster metadata behind it.

#ifndef SPEECHPRINT_REGISTRY_H_
#define SPEECHPRINT_REGISTRY_H_

#include <cstdint>
#include <filesystem>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <vector>

namespace speechprint {

// Label reported for files whose labeler deferred or failed.
inline constexpr uint64_t kPendingLabel = std::numeric_limits<uint64_t>::max();

inline constexpr std::string_view kUnknownLanguage = "und";

struct Keyword {
  std::string term;
  double weight = 0.0;

  friend bool operator==(const Keyword&, const Keyword&) = default;
};

struct ClusterInfo {
  uint64_t label_id = 0;
  std::string name;
  std::vector<Keyword> keywords;  // weight descending
  std::string language{kUnknownLanguage};
  uint64_t member_count = 0;

  friend bool operator==(const ClusterInfo&, const ClusterInfo&) = default;
};

// Thread-safe: lookups take a shared lock, mutations an exclusive one.
//
// Text format, one record per line, tab separated:
//   [clusters]  label_id name language member_count term:weight,...
//   [entries]   file_id label_id
//   [pending]   file_id
class LabelRegistry {
 public:
  LabelRegistry() = default;
  LabelRegistry(const LabelRegistry& other);
  LabelRegistry& operator=(const LabelRegistry& other);

  // Unknown (nullopt) for ids that are not assigned; pending ids are unknown.
  std::optional<uint64_t> Lookup(uint64_t file_id) const;
  bool IsPending(uint64_t file_id) const;

  // Creates a cluster and returns its new label id (ids start at 1).
  uint64_t AddCluster(std::string name, std::string language,
                      std::vector<Keyword> keywords = {});

  // Throw NotFound for unknown labels.
  void Assign(uint64_t file_id, uint64_t label_id);
  void NameCluster(uint64_t label_id, std::string name);
  void SetKeywords(uint64_t label_id, std::vector<Keyword> keywords);
  ClusterInfo Cluster(uint64_t label_id) const;

  // Records that the file has no label yet; no-op for a labeled file.
  // Assign() clears the mark.
  void MarkPending(uint64_t file_id);
  // Drops the file from entries and the pending set.
  void Forget(uint64_t file_id);

  std::vector<ClusterInfo> Clusters() const;
  std::map<uint64_t, uint64_t> Entries() const;
  std::vector<uint64_t> PendingFiles() const;
  size_t size() const;

  std::string Serialize() const;
  static LabelRegistry Parse(std::string_view text);  // throws CorruptIndex
  void Save(const std::filesystem::path& path) const;  // atomic replace
  static LabelRegistry Load(const std::filesystem::path& path);

  friend bool operator==(const LabelRegistry& a, const LabelRegistry& b);

 private:
  void AssignLocked(uint64_t file_id, uint64_t label_id);

  mutable std::shared_mutex mu_;
  std::map<uint64_t, uint64_t> entries_;
  std::map<uint64_t, ClusterInfo> clusters_;
  std::set<uint64_t> pending_;
  uint64_t next_label_ = 1;
};

}  // namespace speechprint

#endif  // SPEECHPRINT_REGISTRY_H_
