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


// The online procedure: stream audio in, identify early and return the
// file's label, or enroll the complete file when it is unknown.

#ifndef SPEECHPRINT_PIPELINE_H_
#define SPEECHPRINT_PIPELINE_H_

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "speechprint/audio.h"
#include "speechprint/fingerprint.h"
#include "speechprint/index.h"
#include "speechprint/registry.h"
#include "speechprint/wav.h"

namespace speechprint {

enum class OutcomeStatus : uint8_t {
  kIdentified = 0,
  kEnrolled = 1,
  kMiss = 2,  // not identified and enrollment was not requested
  kError = 3,
};

std::string_view OutcomeStatusName(OutcomeStatus status);

struct IdentifyOutcome {
  OutcomeStatus status = OutcomeStatus::kError;
  uint64_t file_id = 0;
  uint64_t label_id = kPendingLabel;
  double confidence = 0.0;
  // Seconds of audio consumed when the decision was taken.
  double latency_s = 0.0;
  std::string error;

  friend bool operator==(const IdentifyOutcome&, const IdentifyOutcome&) = default;
};

// Produces a label for a newly enrolled file. May return kPendingLabel or
// throw; either way the file is enrolled with a pending label.
class Labeler {
 public:
  virtual ~Labeler() = default;
  virtual uint64_t Label(const AudioBuffer& audio,
                         const std::optional<std::filesystem::path>& transcript) = 0;
};

class PendingLabeler final : public Labeler {
 public:
  uint64_t Label(const AudioBuffer&,
                 const std::optional<std::filesystem::path>&) override {
    return kPendingLabel;
  }
};

// Reads the transcript file and picks the registry cluster of the same
// language with the most similar keywords.
class TranscriptLabeler final : public Labeler {
 public:
  explicit TranscriptLabeler(const LabelRegistry& registry) : registry_(registry) {}
  uint64_t Label(const AudioBuffer& audio,
                 const std::optional<std::filesystem::path>& transcript) override;

 private:
  const LabelRegistry& registry_;
};

// Index plus registry. Queries run concurrently; enrollments are serialized
// and write the registry before the index, so a file is never identifiable
// without its registry record.
class Engine {
 public:
  explicit Engine(const Profile& profile, const QueryOptions& options = {});
  // Files present in the index but not in the registry are marked pending.
  Engine(RetrievalIndex index, LabelRegistry registry,
         const QueryOptions& options = {});

  const Profile& profile() const { return index_.profile(); }
  const QueryOptions& query_options() const { return options_; }
  RetrievalIndex& index() { return index_; }
  const RetrievalIndex& index() const { return index_; }
  LabelRegistry& registry() { return registry_; }
  const LabelRegistry& registry() const { return registry_; }

  QueryResult Query(std::span<const SubFingerprint> subs) const;
  std::vector<QueryResult> QueryBatch(
      std::span<const std::vector<SubFingerprint>> queries) const;

  // Identified outcome for a hit (with the registry label), kMiss otherwise.
  IdentifyOutcome Resolve(const QueryResult& result, double latency_s) const;

  // Fingerprints the whole buffer and queries it once.
  IdentifyOutcome IdentifyAudio(const AudioBuffer& audio) const;

  // Allocates a fresh id, then fingerprints and labels concurrently. Labeler
  // failures leave the label pending; a too-short file yields kError and
  // changes nothing.
  IdentifyOutcome EnrollFile(const AudioBuffer& audio, Labeler& labeler,
                             const std::optional<std::filesystem::path>& transcript = {});

  // Asks `label_for` for every pending file; ids it labels leave the pending
  // set. Running it twice is harmless. Returns the number resolved.
  size_t ResolvePending(const std::function<uint64_t(uint64_t file_id)>& label_for);

  // Registry first, then index; each file is replaced atomically.
  void Save(const std::filesystem::path& index_path,
            const std::filesystem::path& registry_path) const;

 private:
  RetrievalIndex index_;
  LabelRegistry registry_;
  QueryOptions options_;
  Fingerprinter fingerprinter_;
  mutable std::mutex enroll_mu_;
  std::atomic<uint64_t> next_id_{1};
};

struct SessionOptions {
  double decision_after_s = 6.0;
  double requery_step_s = 2.0;
  double max_decision_s = 12.0;
  bool enroll_on_miss = true;

  void Validate() const;  // throws ConfigError
};

using QueryFn = std::function<QueryResult(const std::vector<SubFingerprint>&)>;

// One incoming stream. Feed() takes WAV bytes as they arrive; the stream is
// queried after decision_after_s of audio and again every requery_step_s up
// to max_decision_s. After a hit the caller may stop feeding. Not
// thread-safe; use one session per stream.
class IdentifySession {
 public:
  // `query` defaults to engine.Query; the server plugs its batcher in here.
  IdentifySession(Engine& engine, const SessionOptions& options = {},
                  QueryFn query = {});

  // Returns the outcome as soon as one is available (a hit or a decode
  // error). Later calls return nothing and ignore their input.
  std::optional<IdentifyOutcome> Feed(std::span<const uint8_t> bytes);

  // End of stream. Returns the earlier hit if there was one; otherwise runs
  // a last query over everything received and, on a miss, enrolls the full
  // audio (or reports kMiss when enrollment is off).
  IdentifyOutcome Finish(Labeler& labeler,
                         const std::optional<std::filesystem::path>& transcript = {});

  bool decided() const { return outcome_.has_value(); }
  double seconds_consumed() const;
  const std::vector<SubFingerprint>& subs() const { return subs_; }

 private:
  IdentifyOutcome Fail(std::string message);
  void AddCanonical(std::span<const double> samples);
  void MaybeQuery();

  Engine& engine_;
  SessionOptions options_;
  QueryFn query_;
  WavStreamDecoder decoder_;
  std::unique_ptr<StreamingResampler> resampler_;
  StreamingFingerprinter fingerprinter_;
  std::vector<double> decoded_;
  std::vector<double> canonical_;
  std::vector<SubFingerprint> subs_;
  double next_decision_s_;
  size_t subs_at_last_query_ = 0;
  std::optional<IdentifyOutcome> outcome_;
  bool finished_ = false;
};

// Runs a whole WAV byte stream through a session in chunks.
IdentifyOutcome IdentifyStream(Engine& engine, std::span<const uint8_t> wav,
                               size_t chunk_bytes, Labeler& labeler,
                               const SessionOptions& options = {});

}  // namespace speechprint

#endif  // SPEECHPRINT_PIPELINE_H_
