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


#include "speechprint/registry.h"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <cstdlib>
#include <mutex>
#include <sstream>
#include <utility>

#include "speechprint/errors.h"
#include "speechprint/fileio.h"

namespace speechprint {
namespace {

std::vector<std::string_view> SplitTabs(std::string_view line) {
  std::vector<std::string_view> out;
  size_t start = 0;
  while (true) {
    const size_t tab = line.find('\t', start);
    out.push_back(line.substr(start, tab - start));
    if (tab == std::string_view::npos) break;
    start = tab + 1;
  }
  return out;
}

uint64_t ParseU64(std::string_view s) {
  uint64_t v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw CorruptIndex("bad integer in registry: '" + std::string(s) + "'");
  }
  return v;
}

double ParseDouble(std::string_view s) {
  // std::from_chars for double is not available in every libstdc++ we target.
  std::string tmp(s);
  char* end = nullptr;
  const double v = std::strtod(tmp.c_str(), &end);
  if (tmp.empty() || end != tmp.c_str() + tmp.size()) {
    throw CorruptIndex("bad number in registry: '" + tmp + "'");
  }
  return v;
}

void CheckField(const std::string& s, const char* what) {
  if (s.find_first_of("\t\n\r") != std::string::npos) {
    throw ConfigError(std::string(what) + " must not contain tabs or newlines");
  }
}

std::string FormatKeywords(const std::vector<Keyword>& keywords) {
  std::string out;
  char buf[64];
  for (size_t i = 0; i < keywords.size(); ++i) {
    if (i) out += ',';
    std::snprintf(buf, sizeof(buf), "%.17g", keywords[i].weight);
    out += keywords[i].term;
    out += ':';
    out += buf;
  }
  return out;
}

std::vector<Keyword> ParseKeywords(std::string_view s) {
  std::vector<Keyword> out;
  if (s.empty()) return out;
  size_t start = 0;
  while (start <= s.size()) {
    size_t comma = s.find(',', start);
    if (comma == std::string_view::npos) comma = s.size();
    const std::string_view item = s.substr(start, comma - start);
    const size_t colon = item.rfind(':');
    if (colon == std::string_view::npos || colon == 0) {
      throw CorruptIndex("bad keyword in registry: '" + std::string(item) + "'");
    }
    out.push_back({std::string(item.substr(0, colon)),
                   ParseDouble(item.substr(colon + 1))});
    start = comma + 1;
  }
  return out;
}

}  // namespace

LabelRegistry::LabelRegistry(const LabelRegistry& other) {
  std::shared_lock lock(other.mu_);
  entries_ = other.entries_;
  clusters_ = other.clusters_;
  pending_ = other.pending_;
  next_label_ = other.next_label_;
}

LabelRegistry& LabelRegistry::operator=(const LabelRegistry& other) {
  if (this == &other) return *this;
  LabelRegistry copy(other);
  std::unique_lock lock(mu_);
  entries_ = std::move(copy.entries_);
  clusters_ = std::move(copy.clusters_);
  pending_ = std::move(copy.pending_);
  next_label_ = copy.next_label_;
  return *this;
}

std::optional<uint64_t> LabelRegistry::Lookup(uint64_t file_id) const {
  std::shared_lock lock(mu_);
  const auto it = entries_.find(file_id);
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

bool LabelRegistry::IsPending(uint64_t file_id) const {
  std::shared_lock lock(mu_);
  return pending_.count(file_id) != 0;
}

uint64_t LabelRegistry::AddCluster(std::string name, std::string language,
                                   std::vector<Keyword> keywords) {
  CheckField(name, "cluster name");
  if (language.empty()) language = std::string(kUnknownLanguage);
  CheckField(language, "language tag");
  std::unique_lock lock(mu_);
  const uint64_t id = next_label_++;
  ClusterInfo info;
  info.label_id = id;
  info.name = std::move(name);
  info.language = std::move(language);
  info.keywords = std::move(keywords);
  clusters_.emplace(id, std::move(info));
  return id;
}

void LabelRegistry::AssignLocked(uint64_t file_id, uint64_t label_id) {
  auto target = clusters_.find(label_id);
  if (target == clusters_.end()) {
    throw NotFound("no cluster with label " + std::to_string(label_id));
  }
  auto [it, inserted] = entries_.try_emplace(file_id, label_id);
  if (!inserted) {
    if (it->second == label_id) return;
    auto old = clusters_.find(it->second);
    if (old != clusters_.end() && old->second.member_count > 0) {
      --old->second.member_count;
    }
    it->second = label_id;
  }
  ++target->second.member_count;
  pending_.erase(file_id);
}

void LabelRegistry::Assign(uint64_t file_id, uint64_t label_id) {
  std::unique_lock lock(mu_);
  AssignLocked(file_id, label_id);
}

void LabelRegistry::NameCluster(uint64_t label_id, std::string name) {
  CheckField(name, "cluster name");
  std::unique_lock lock(mu_);
  auto it = clusters_.find(label_id);
  if (it == clusters_.end()) {
    throw NotFound("no cluster with label " + std::to_string(label_id));
  }
  it->second.name = std::move(name);
}

void LabelRegistry::SetKeywords(uint64_t label_id,
                                std::vector<Keyword> keywords) {
  for (const auto& k : keywords) {
    if (k.term.empty() || k.term.find_first_of(":,\t\n\r") != std::string::npos) {
      throw ConfigError("keyword '" + k.term + "' is not a plain token");
    }
  }
  std::unique_lock lock(mu_);
  auto it = clusters_.find(label_id);
  if (it == clusters_.end()) {
    throw NotFound("no cluster with label " + std::to_string(label_id));
  }
  it->second.keywords = std::move(keywords);
}

ClusterInfo LabelRegistry::Cluster(uint64_t label_id) const {
  std::shared_lock lock(mu_);
  auto it = clusters_.find(label_id);
  if (it == clusters_.end()) {
    throw NotFound("no cluster with label " + std::to_string(label_id));
  }
  return it->second;
}

void LabelRegistry::MarkPending(uint64_t file_id) {
  std::unique_lock lock(mu_);
  if (entries_.count(file_id) == 0) pending_.insert(file_id);
}

void LabelRegistry::Forget(uint64_t file_id) {
  std::unique_lock lock(mu_);
  pending_.erase(file_id);
  auto it = entries_.find(file_id);
  if (it == entries_.end()) return;
  auto c = clusters_.find(it->second);
  if (c != clusters_.end() && c->second.member_count > 0) {
    --c->second.member_count;
  }
  entries_.erase(it);
}

std::vector<ClusterInfo> LabelRegistry::Clusters() const {
  std::shared_lock lock(mu_);
  std::vector<ClusterInfo> out;
  out.reserve(clusters_.size());
  for (const auto& [id, info] : clusters_) out.push_back(info);
  return out;
}

std::map<uint64_t, uint64_t> LabelRegistry::Entries() const {
  std::shared_lock lock(mu_);
  return entries_;
}

std::vector<uint64_t> LabelRegistry::PendingFiles() const {
  std::shared_lock lock(mu_);
  return {pending_.begin(), pending_.end()};
}

size_t LabelRegistry::size() const {
  std::shared_lock lock(mu_);
  return entries_.size();
}

std::string LabelRegistry::Serialize() const {
  std::shared_lock lock(mu_);
  std::ostringstream out;
  out << "# speechprint label registry v1\n";
  out << "[clusters]\n";
  for (const auto& [id, c] : clusters_) {
    out << id << '\t' << c.name << '\t' << c.language << '\t'
        << c.member_count << '\t' << FormatKeywords(c.keywords) << '\n';
  }
  out << "[entries]\n";
  for (const auto& [file, label] : entries_) out << file << '\t' << label << '\n';
  out << "[pending]\n";
  for (uint64_t file : pending_) out << file << '\n';
  return out.str();
}

LabelRegistry LabelRegistry::Parse(std::string_view text) {
  LabelRegistry reg;
  enum class Section { kNone, kClusters, kEntries, kPending } section =
      Section::kNone;
  std::map<uint64_t, uint64_t> declared_counts;
  size_t pos = 0;
  while (pos < text.size()) {
    size_t eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    std::string_view line = text.substr(pos, eol - pos);
    pos = eol + 1;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty() || line.front() == '#') continue;
    if (line == "[clusters]") { section = Section::kClusters; continue; }
    if (line == "[entries]") { section = Section::kEntries; continue; }
    if (line == "[pending]") { section = Section::kPending; continue; }
    const auto f = SplitTabs(line);
    switch (section) {
      case Section::kClusters: {
        if (f.size() != 5) throw CorruptIndex("cluster record needs 5 fields");
        ClusterInfo c;
        c.label_id = ParseU64(f[0]);
        c.name = std::string(f[1]);
        c.language = std::string(f[2]);
        declared_counts[c.label_id] = ParseU64(f[3]);
        c.keywords = ParseKeywords(f[4]);
        if (c.label_id == 0 || c.label_id == kPendingLabel ||
            reg.clusters_.count(c.label_id)) {
          throw CorruptIndex("bad or repeated label id " + std::string(f[0]));
        }
        reg.next_label_ = std::max(reg.next_label_, c.label_id + 1);
        reg.clusters_.emplace(c.label_id, std::move(c));
        break;
      }
      case Section::kEntries: {
        if (f.size() != 2) throw CorruptIndex("entry record needs 2 fields");
        const uint64_t file = ParseU64(f[0]);
        if (reg.entries_.count(file)) {
          throw CorruptIndex("file " + std::string(f[0]) + " listed twice");
        }
        try {
          reg.AssignLocked(file, ParseU64(f[1]));
        } catch (const NotFound& e) {
          throw CorruptIndex(std::string("dangling label: ") + e.what());
        }
        break;
      }
      case Section::kPending:
        if (f.size() != 1) throw CorruptIndex("pending record needs 1 field");
        reg.pending_.insert(ParseU64(f[0]));
        break;
      case Section::kNone:
        throw CorruptIndex("registry record outside a section");
    }
  }
  for (const auto& [id, count] : declared_counts) {
    if (reg.clusters_.at(id).member_count != count) {
      throw CorruptIndex("member count mismatch for label " +
                         std::to_string(id));
    }
  }
  for (uint64_t file : reg.pending_) {
    if (reg.entries_.count(file)) {
      throw CorruptIndex("file " + std::to_string(file) +
                         " is both labeled and pending");
    }
  }
  return reg;
}

void LabelRegistry::Save(const std::filesystem::path& path) const {
  WriteFileAtomic(path, Serialize());
}

LabelRegistry LabelRegistry::Load(const std::filesystem::path& path) {
  return Parse(ReadFileText(path));
}

bool operator==(const LabelRegistry& a, const LabelRegistry& b) {
  if (&a == &b) return true;
  std::shared_lock la(a.mu_, std::defer_lock);
  std::shared_lock lb(b.mu_, std::defer_lock);
  std::lock(la, lb);
  return a.entries_ == b.entries_ && a.clusters_ == b.clusters_ &&
         a.pending_ == b.pending_;
}

}  // namespace speechprint
