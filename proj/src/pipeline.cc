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


#include "speechprint/pipeline.h"

#include <algorithm>
#include <future>
#include <utility>

#include "speechprint/clustering.h"
#include "speechprint/errors.h"
#include "speechprint/log.h"

namespace speechprint {

std::string_view OutcomeStatusName(OutcomeStatus status) {
  switch (status) {
    case OutcomeStatus::kIdentified:
      return "identified";
    case OutcomeStatus::kEnrolled:
      return "enrolled";
    case OutcomeStatus::kMiss:
      return "miss";
    case OutcomeStatus::kError:
      return "error";
  }
  return "unknown";
}

uint64_t TranscriptLabeler::Label(
    const AudioBuffer&, const std::optional<std::filesystem::path>& transcript) {
  if (!transcript) return kPendingLabel;
  const TranscriptDoc doc = ReadTranscript(0, *transcript);
  return NearestCluster(doc, registry_).value_or(kPendingLabel);
}

Engine::Engine(const Profile& profile, const QueryOptions& options)
    : index_(profile), options_(options), fingerprinter_(profile) {}

Engine::Engine(RetrievalIndex index, LabelRegistry registry,
               const QueryOptions& options)
    : index_(std::move(index)),
      registry_(std::move(registry)),
      options_(options),
      fingerprinter_(index_.profile()) {
  uint64_t max_id = 0;
  for (uint64_t id : index_.FileIds()) {
    max_id = std::max(max_id, id);
    if (!registry_.Lookup(id) && !registry_.IsPending(id)) {
      registry_.MarkPending(id);
    }
  }
  next_id_ = max_id + 1;
}

QueryResult Engine::Query(std::span<const SubFingerprint> subs) const {
  return index_.Query(subs, options_);
}

std::vector<QueryResult> Engine::QueryBatch(
    std::span<const std::vector<SubFingerprint>> queries) const {
  return index_.QueryBatch(queries, options_);
}

IdentifyOutcome Engine::Resolve(const QueryResult& result,
                                double latency_s) const {
  IdentifyOutcome out;
  out.latency_s = latency_s;
  if (!result) {
    out.status = OutcomeStatus::kMiss;
    return out;
  }
  out.status = OutcomeStatus::kIdentified;
  out.file_id = result->file_id;
  out.confidence = result->confidence;
  out.label_id = registry_.Lookup(result->file_id).value_or(kPendingLabel);
  return out;
}

IdentifyOutcome Engine::IdentifyAudio(const AudioBuffer& audio) const {
  try {
    const Fingerprint fp = fingerprinter_.Compute(audio, 0);
    return Resolve(Query(fp.subs), audio.duration_seconds());
  } catch (const Error& e) {
    IdentifyOutcome out;
    out.error = e.what();
    return out;
  }
}

IdentifyOutcome Engine::EnrollFile(
    const AudioBuffer& audio, Labeler& labeler,
    const std::optional<std::filesystem::path>& transcript) {
  IdentifyOutcome out;
  out.latency_s = audio.duration_seconds();
  const uint64_t id = next_id_.fetch_add(1);

  auto label_future = std::async(std::launch::async, [&]() -> uint64_t {
    try {
      return labeler.Label(audio, transcript);
    } catch (const std::exception& e) {
      LogWarning("labeler failed for file " + std::to_string(id) + ": " + e.what());
      return kPendingLabel;
    }
  });
  Fingerprint fp;
  try {
    fp = fingerprinter_.Compute(audio, id);
  } catch (const Error& e) {
    label_future.wait();
    out.error = e.what();
    return out;
  }
  uint64_t label = label_future.get();

  std::lock_guard<std::mutex> lock(enroll_mu_);
  if (label != kPendingLabel) {
    try {
      registry_.Assign(id, label);
    } catch (const NotFound&) {
      LogWarning("labeler returned unknown label " + std::to_string(label));
      label = kPendingLabel;
    }
  }
  if (label == kPendingLabel) registry_.MarkPending(id);
  try {
    index_.Enroll(fp);
  } catch (...) {
    registry_.Forget(id);
    throw;
  }
  out.status = OutcomeStatus::kEnrolled;
  out.file_id = id;
  out.label_id = label;
  out.confidence = 1.0;
  return out;
}

size_t Engine::ResolvePending(
    const std::function<uint64_t(uint64_t file_id)>& label_for) {
  size_t resolved = 0;
  for (uint64_t id : registry_.PendingFiles()) {
    const uint64_t label = label_for(id);
    if (label == kPendingLabel) continue;
    std::lock_guard<std::mutex> lock(enroll_mu_);
    if (!registry_.IsPending(id)) continue;
    registry_.Assign(id, label);
    ++resolved;
  }
  return resolved;
}

void Engine::Save(const std::filesystem::path& index_path,
                  const std::filesystem::path& registry_path) const {
  std::lock_guard<std::mutex> lock(enroll_mu_);
  registry_.Save(registry_path);
  index_.Save(index_path);
}

void SessionOptions::Validate() const {
  if (!(decision_after_s > 0.0)) throw ConfigError("decision point must be positive");
  if (!(requery_step_s > 0.0)) throw ConfigError("re-query step must be positive");
  if (max_decision_s < decision_after_s) {
    throw ConfigError("last decision point precedes the first");
  }
}

IdentifySession::IdentifySession(Engine& engine, const SessionOptions& options,
                                 QueryFn query)
    : engine_(engine),
      options_(options),
      query_(std::move(query)),
      fingerprinter_(engine.profile()),
      next_decision_s_(options.decision_after_s) {
  options_.Validate();
  if (!query_) {
    query_ = [this](const std::vector<SubFingerprint>& subs) {
      return engine_.Query(subs);
    };
  }
}

double IdentifySession::seconds_consumed() const {
  return static_cast<double>(canonical_.size()) / kCanonicalSampleRate;
}

IdentifyOutcome IdentifySession::Fail(std::string message) {
  IdentifyOutcome out;
  out.status = OutcomeStatus::kError;
  out.error = std::move(message);
  out.latency_s = seconds_consumed();
  outcome_ = out;
  return out;
}

void IdentifySession::AddCanonical(std::span<const double> samples) {
  if (samples.empty()) return;
  const size_t start = canonical_.size();
  canonical_.insert(canonical_.end(), samples.begin(), samples.end());
  auto fresh = std::span<double>(canonical_).subspan(start);
  ClipInPlace(fresh);
  fingerprinter_.Push(fresh, subs_);
}

void IdentifySession::MaybeQuery() {
  const double consumed = seconds_consumed();
  if (consumed < next_decision_s_ || next_decision_s_ > options_.max_decision_s) {
    return;
  }
  // Skip decision points this chunk jumped over; one query covers them.
  while (next_decision_s_ <= consumed) next_decision_s_ += options_.requery_step_s;
  if (subs_.empty() || subs_.size() == subs_at_last_query_) return;
  subs_at_last_query_ = subs_.size();
  const QueryResult r = query_(subs_);
  if (r) outcome_ = engine_.Resolve(r, consumed);
}

std::optional<IdentifyOutcome> IdentifySession::Feed(std::span<const uint8_t> bytes) {
  if (outcome_ || finished_) return std::nullopt;
  try {
    decoded_.clear();
    decoder_.Push(bytes, decoded_);
    if (!resampler_ && decoder_.format()) {
      const int rate = decoder_.format()->sample_rate;
      if (rate != kCanonicalSampleRate) {
        resampler_ = std::make_unique<StreamingResampler>(rate, kCanonicalSampleRate);
      }
    }
    if (resampler_) {
      std::vector<double> out;
      resampler_->Push(decoded_, out);
      AddCanonical(out);
    } else {
      AddCanonical(decoded_);
    }
    MaybeQuery();
  } catch (const Error& e) {
    return Fail(e.what());
  }
  return outcome_;
}

IdentifyOutcome IdentifySession::Finish(
    Labeler& labeler, const std::optional<std::filesystem::path>& transcript) {
  if (outcome_) return *outcome_;
  if (finished_) return Fail("session already finished");
  finished_ = true;
  try {
    decoder_.Finish();
    if (resampler_) {
      std::vector<double> out;
      resampler_->Finish(out);
      AddCanonical(out);
    }
  } catch (const Error& e) {
    return Fail(e.what());
  }
  if (canonical_.empty()) return Fail("empty stream");
  if (subs_.empty()) return Fail("stream shorter than one fingerprint block");

  if (subs_.size() != subs_at_last_query_) {
    subs_at_last_query_ = subs_.size();
    const QueryResult r = query_(subs_);
    if (r) {
      outcome_ = engine_.Resolve(r, seconds_consumed());
      return *outcome_;
    }
  }
  if (!options_.enroll_on_miss) {
    IdentifyOutcome miss;
    miss.status = OutcomeStatus::kMiss;
    miss.latency_s = seconds_consumed();
    outcome_ = miss;
    return miss;
  }
  try {
    outcome_ = engine_.EnrollFile(AudioBuffer(canonical_, kCanonicalSampleRate),
                                  labeler, transcript);
  } catch (const Error& e) {
    return Fail(e.what());
  }
  return *outcome_;
}

IdentifyOutcome IdentifyStream(Engine& engine, std::span<const uint8_t> wav,
                               size_t chunk_bytes, Labeler& labeler,
                               const SessionOptions& options) {
  if (chunk_bytes == 0) throw ConfigError("chunk size must be positive");
  IdentifySession session(engine, options);
  for (size_t pos = 0; pos < wav.size(); pos += chunk_bytes) {
    const size_t n = std::min(chunk_bytes, wav.size() - pos);
    if (auto out = session.Feed(wav.subspan(pos, n))) return *out;
  }
  return session.Finish(labeler);
}

}  // namespace speechprint
