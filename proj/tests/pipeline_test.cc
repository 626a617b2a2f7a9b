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


#include <atomic>
#include <fstream>
#include <stdexcept>
#include <thread>
#include <vector>

#include "gtest/gtest.h"
#include "speechprint/audio.h"
#include "speechprint/corpus.h"
#include "speechprint/degrade.h"
#include "speechprint/errors.h"
#include "speechprint/pipeline.h"
#include "speechprint/wav.h"
#include "test_util.h"

namespace speechprint {
namespace {

class ThrowingLabeler final : public Labeler {
 public:
  uint64_t Label(const AudioBuffer&, const std::optional<std::filesystem::path>&) override {
    throw std::runtime_error("labeler down");
  }
};

class PipelineTest : public ::testing::Test {
 protected:
  void SetUp() override {
    corpus_ = testing::SmallCorpus(6, 31);
    engine_ = std::make_unique<Engine>(Profile::ForVariant(Variant::kMelVocal));
    for (size_t i = 0; i < 4; ++i) {
      const IdentifyOutcome out = engine_->EnrollFile(corpus_[i].audio, pending_);
      ASSERT_EQ(out.status, OutcomeStatus::kEnrolled);
      ASSERT_EQ(out.file_id, i + 1);
    }
  }

  IdentifyOutcome Stream(const AudioBuffer& audio, const SessionOptions& options = {},
                         size_t chunk = 4096) {
    return IdentifyStream(*engine_, EncodeWav(audio), chunk, pending_, options);
  }

  std::vector<CorpusFile> corpus_;
  std::unique_ptr<Engine> engine_;
  PendingLabeler pending_;
};

TEST_F(PipelineTest, EnrolledFileIdentifiedWithinFirstDecision) {
  for (size_t i = 0; i < 4; ++i) {
    const IdentifyOutcome out = Stream(corpus_[i].audio);
    EXPECT_EQ(out.status, OutcomeStatus::kIdentified);
    EXPECT_EQ(out.file_id, i + 1);
    EXPECT_EQ(out.label_id, kPendingLabel);
    EXPECT_LT(out.latency_s, 7.0);
    EXPECT_GE(out.latency_s, 6.0);
  }
}

TEST_F(PipelineTest, DegradedStreamAtForeignRateIdentified) {
  DeteriorationSpec spec;
  spec.snr_db = 20.0;
  spec.rate = 0.98;
  spec.query_len_s = 9.0;
  const AudioBuffer query = Resample(MakeQuery(corpus_[2].audio, spec, 5), 16000);
  const IdentifyOutcome out = Stream(query);
  EXPECT_EQ(out.status, OutcomeStatus::kIdentified);
  EXPECT_EQ(out.file_id, 3u);
}

TEST_F(PipelineTest, UnknownFileIsEnrolledThenFound) {
  const IdentifyOutcome first = Stream(corpus_[4].audio);
  ASSERT_EQ(first.status, OutcomeStatus::kEnrolled);
  EXPECT_EQ(first.file_id, 5u);
  EXPECT_NEAR(first.latency_s, corpus_[4].audio.duration_seconds(), 1e-9);
  EXPECT_TRUE(engine_->registry().IsPending(5));
  const IdentifyOutcome again = Stream(corpus_[4].audio);
  EXPECT_EQ(again.status, OutcomeStatus::kIdentified);
  EXPECT_EQ(again.file_id, 5u);
}

TEST_F(PipelineTest, MissWithoutEnrollment) {
  SessionOptions opts;
  opts.enroll_on_miss = false;
  const IdentifyOutcome out = Stream(corpus_[5].audio, opts);
  EXPECT_EQ(out.status, OutcomeStatus::kMiss);
  EXPECT_FALSE(engine_->index().Contains(5));
}

TEST_F(PipelineTest, QueriesAtDecisionPoints) {
  std::vector<size_t> sub_counts;
  IdentifySession session(*engine_, {}, [&](const std::vector<SubFingerprint>& subs) {
    sub_counts.push_back(subs.size());
    return QueryResult{};
  });
  const auto bytes = EncodeWav(corpus_[5].audio);
  for (size_t pos = 0; pos < bytes.size(); pos += 1000) {
    EXPECT_FALSE(session.Feed(std::span<const uint8_t>(bytes).subspan(
        pos, std::min<size_t>(1000, bytes.size() - pos))));
  }
  const IdentifyOutcome out = session.Finish(pending_);
  EXPECT_EQ(out.status, OutcomeStatus::kEnrolled);
  // 6, 8, 10 and 12 s, then the whole stream at the end.
  ASSERT_EQ(sub_counts.size(), 5u);
  for (size_t i = 1; i < sub_counts.size(); ++i) EXPECT_GT(sub_counts[i], sub_counts[i - 1]);
}

TEST_F(PipelineTest, StreamErrors) {
  EXPECT_EQ(IdentifyStream(*engine_, std::vector<uint8_t>{}, 64, pending_).status,
            OutcomeStatus::kError);
  EXPECT_EQ(Stream(AudioBuffer({}, 8000)).status, OutcomeStatus::kError);
  const IdentifyOutcome short_clip = Stream(SliceSeconds(corpus_[0].audio, 0.0, 1.0));
  EXPECT_EQ(short_clip.status, OutcomeStatus::kError);
  EXPECT_NE(short_clip.error.find("shorter"), std::string::npos);
  std::vector<uint8_t> junk(200, 'x');
  EXPECT_EQ(IdentifyStream(*engine_, junk, 64, pending_).status, OutcomeStatus::kError);
  EXPECT_EQ(engine_->index().FileIds().size(), 4u);
}

TEST_F(PipelineTest, LabelerFailureLeavesPending) {
  ThrowingLabeler broken;
  const IdentifyOutcome out = engine_->EnrollFile(corpus_[5].audio, broken);
  EXPECT_EQ(out.status, OutcomeStatus::kEnrolled);
  EXPECT_EQ(out.label_id, kPendingLabel);
  EXPECT_TRUE(engine_->registry().IsPending(out.file_id));
}

TEST_F(PipelineTest, TooShortEnrollmentChangesNothing) {
  const IdentifyOutcome out =
      engine_->EnrollFile(SliceSeconds(corpus_[5].audio, 0.0, 1.0), pending_);
  EXPECT_EQ(out.status, OutcomeStatus::kError);
  EXPECT_EQ(engine_->index().FileIds().size(), 4u);
  EXPECT_EQ(engine_->registry().PendingFiles().size(), 4u);
}

TEST_F(PipelineTest, ConcurrentEnrollmentsGetDistinctIds) {
  IdentifyOutcome a, b;
  std::thread ta([&] { a = engine_->EnrollFile(corpus_[4].audio, pending_); });
  std::thread tb([&] { b = engine_->EnrollFile(corpus_[5].audio, pending_); });
  ta.join();
  tb.join();
  ASSERT_EQ(a.status, OutcomeStatus::kEnrolled);
  ASSERT_EQ(b.status, OutcomeStatus::kEnrolled);
  EXPECT_NE(a.file_id, b.file_id);
  EXPECT_EQ(engine_->IdentifyAudio(corpus_[4].audio).file_id, a.file_id);
  EXPECT_EQ(engine_->IdentifyAudio(corpus_[5].audio).file_id, b.file_id);
}

TEST_F(PipelineTest, TranscriptLabelerUsesClusters) {
  const uint64_t label = engine_->registry().AddCluster(
      "voicemail", "en", {{"voicemail", 0.8}, {"message", 0.4}});
  const testing::ScratchDir dir("pipeline");
  std::ofstream(dir / "t.txt") << "lang=en\nplease leave a message after the tone voicemail";
  TranscriptLabeler labeler(engine_->registry());
  const IdentifyOutcome out = engine_->EnrollFile(corpus_[5].audio, labeler, dir / "t.txt");
  EXPECT_EQ(out.label_id, label);
  EXPECT_EQ(engine_->registry().Lookup(out.file_id), label);
  EXPECT_EQ(engine_->IdentifyAudio(corpus_[5].audio).label_id, label);
  // A missing transcript leaves the file pending.
  const IdentifyOutcome none = engine_->EnrollFile(corpus_[4].audio, labeler, dir / "nope.txt");
  EXPECT_EQ(none.label_id, kPendingLabel);
}

TEST_F(PipelineTest, ResolvePendingAndPersistence) {
  const uint64_t label = engine_->registry().AddCluster("busy", "en");
  EXPECT_EQ(engine_->ResolvePending([&](uint64_t id) { return id % 2 ? label : kPendingLabel; }),
            2u);
  EXPECT_EQ(engine_->registry().Lookup(1), label);
  EXPECT_TRUE(engine_->registry().IsPending(2));

  const testing::ScratchDir dir("engine");
  engine_->Save(dir / "idx", dir / "labels");
  Engine loaded(RetrievalIndex::Load(dir / "idx"), LabelRegistry::Load(dir / "labels"));
  EXPECT_TRUE(loaded.registry() == engine_->registry());
  EXPECT_EQ(loaded.IdentifyAudio(corpus_[0].audio), engine_->IdentifyAudio(corpus_[0].audio));
  EXPECT_EQ(loaded.EnrollFile(corpus_[5].audio, pending_).file_id, 5u);

  // An index whose files the registry does not know gets them marked pending.
  Engine bare(RetrievalIndex::Load(dir / "idx"), LabelRegistry{});
  EXPECT_EQ(bare.registry().PendingFiles(), (std::vector<uint64_t>{1, 2, 3, 4}));
}

}  // namespace
}  // namespace speechprint
