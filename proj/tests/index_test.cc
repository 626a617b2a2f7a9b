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


#include <algorithm>
#include <limits>
#include <map>
#include <memory>
#include <vector>

#include "gtest/gtest.h"
#include "speechprint/corpus.h"
#include "speechprint/degrade.h"
#include "speechprint/errors.h"
#include "speechprint/fingerprint.h"
#include "speechprint/hash.h"
#include "speechprint/index.h"
#include "test_util.h"

namespace speechprint {
namespace {

using testing::DeskCorpus;

// Desk corpus fingerprinted and enrolled once (ids 1..30, mel-vocal).
class DeskIndexTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    profile_ = new Profile(Profile::ForVariant(Variant::kMelVocal));
    fingerprints_ = new std::vector<Fingerprint>();
    index_ = new RetrievalIndex(*profile_);
    const Fingerprinter fp(*profile_);
    for (size_t i = 0; i < DeskCorpus().size(); ++i) {
      fingerprints_->push_back(fp.Compute(DeskCorpus()[i].audio, i + 1));
      index_->Enroll(fingerprints_->back());
    }
  }
  static void TearDownTestSuite() {
    delete index_;
    delete fingerprints_;
    delete profile_;
  }

  static std::vector<SubFingerprint> DegradedQuery(size_t file, uint64_t seed, double snr,
                                                   double rate) {
    DeteriorationSpec spec;
    spec.snr_db = snr;
    spec.rate = rate;
    return Fingerprinter(*profile_).Compute(MakeQuery(DeskCorpus()[file].audio, spec, seed)).subs;
  }

  static Profile* profile_;
  static std::vector<Fingerprint>* fingerprints_;
  static RetrievalIndex* index_;
};

Profile* DeskIndexTest::profile_ = nullptr;
std::vector<Fingerprint>* DeskIndexTest::fingerprints_ = nullptr;
RetrievalIndex* DeskIndexTest::index_ = nullptr;

size_t Hamming(const std::vector<uint8_t>& a, const std::vector<uint8_t>& b) {
  size_t d = 0;
  for (size_t i = 0; i < a.size(); ++i) d += a[i] != b[i];
  return d;
}

// Exhaustive search: the file whose closest block, averaged over the query's
// sub-fingerprints, is nearest in signature Hamming distance.
uint64_t HammingOracle(const std::vector<SubFingerprint>& query,
                       const std::vector<Fingerprint>& enrolled) {
  uint64_t best_id = 0;
  double best = std::numeric_limits<double>::infinity();
  for (const Fingerprint& fp : enrolled) {
    double total = 0.0;
    for (const SubFingerprint& q : query) {
      size_t nearest = q.signature.size();
      for (const SubFingerprint& s : fp.subs) nearest = std::min(nearest, Hamming(q.signature, s.signature));
      total += static_cast<double>(nearest);
    }
    const double mean = total / static_cast<double>(query.size());
    if (mean < best) {
      best = mean;
      best_id = fp.file_id;
    }
  }
  return best_id;
}

TEST(BandKeyTest, FnvOverBandBytes) {
  const std::vector<uint8_t> sig = {1, 2, 3, 4, 5, 6};
  const BandKey k = MakeBandKey(sig, 1, 2);
  EXPECT_EQ(k.band_id, 1u);
  const std::vector<uint8_t> band = {3, 4};
  EXPECT_EQ(k.digest, Fnv1a64(band));
  EXPECT_NE(MakeBandKey(sig, 0, 2), MakeBandKey(sig, 2, 2));
}

TEST(IndexBasicsTest, EmptyIndexFindsNothing) {
  const RetrievalIndex index(Profile::ForVariant(Variant::kMelVocal));
  SubFingerprint sub;
  sub.signature.assign(100, 7);
  EXPECT_FALSE(index.Query(std::vector<SubFingerprint>{sub}).has_value());
  EXPECT_THROW(index.Query(std::vector<SubFingerprint>{}), ConfigError);
  EXPECT_THROW(index.FindDuplicates(), ConfigError);
}

TEST(IndexBasicsTest, SignatureLengthChecked) {
  RetrievalIndex index(Profile::ForVariant(Variant::kMelVocal));
  Fingerprint fp;
  fp.file_id = 1;
  fp.subs.resize(1);
  fp.subs[0].signature.assign(99, 0);
  EXPECT_THROW(index.Enroll(fp), ConfigError);
}

TEST_F(DeskIndexTest, SelfRetrievalAndDuplicateId) {
  for (const Fingerprint& fp : *fingerprints_) {
    const QueryResult r = index_->Query(fp.subs);
    ASSERT_TRUE(r.has_value());
    EXPECT_EQ(r->file_id, fp.file_id);
    EXPECT_EQ(r->confidence, 1.0);
  }
  EXPECT_THROW(index_->Enroll(fingerprints_->front()), DuplicateId);
}

TEST_F(DeskIndexTest, LooseThresholdsOnExactSubs) {
  const Fingerprint& fp = (*fingerprints_)[4];
  const QueryResult r = index_->Query(fp.subs, QueryOptions{1, 0.5});
  ASSERT_TRUE(r.has_value());
  EXPECT_EQ(r->file_id, 5u);
  EXPECT_EQ(r->confidence, 1.0);
}

TEST_F(DeskIndexTest, StatsCountPostings) {
  const IndexStats s = index_->Stats();
  size_t subs = 0;
  for (const auto& fp : *fingerprints_) subs += fp.subs.size();
  EXPECT_EQ(s.files, fingerprints_->size());
  EXPECT_EQ(s.sub_fingerprints, subs);
  size_t informative = 0;
  for (const auto& fp : *fingerprints_) {
    for (const auto& sub : fp.subs) {
      for (size_t b = 0; b < 50; ++b) {
        informative += sub.signature[2 * b] != kMinHashCap || sub.signature[2 * b + 1] != kMinHashCap;
      }
    }
  }
  EXPECT_EQ(s.postings, informative);
  EXPECT_LE(s.postings, subs * 50);
  EXPECT_LE(s.distinct_keys, s.postings);
}

TEST_F(DeskIndexTest, DegradedQueryFindsSourceLikeExhaustiveSearch) {
  std::mt19937_64 gen(17);
  int oracle_hits = 0, agree = 0, lsh_hits = 0;
  const int trials = 30;
  for (int t = 0; t < trials; ++t) {
    const size_t file = static_cast<size_t>(t) % DeskCorpus().size();
    const double rate = std::uniform_real_distribution<double>(0.97, 1.03)(gen);
    const auto query = DegradedQuery(file, 1000 + t, 20.0, rate);
    const uint64_t oracle = HammingOracle(query, *fingerprints_);
    const QueryResult r = index_->Query(query);
    lsh_hits += r && r->file_id == file + 1;
    if (oracle == file + 1) {
      ++oracle_hits;
      agree += r && r->file_id == oracle;
    }
  }
  EXPECT_GE(oracle_hits, trials * 9 / 10);
  EXPECT_GE(agree, (oracle_hits * 95 + 99) / 100);
  EXPECT_GE(lsh_hits, trials * 9 / 10);
}

// Fraction of band keys of each query block that equal the key of the same
// band in the reference's block at the same position.
double SharedBandKeys(const Fingerprint& query, const Fingerprint& reference, const Profile& p) {
  const auto width = static_cast<size_t>(p.fingerprint.band_width);
  size_t shared = 0, total = 0;
  for (size_t k = 0; k < std::min(query.subs.size(), reference.subs.size()); ++k) {
    for (size_t band = 0; band < static_cast<size_t>(p.fingerprint.band_count); ++band) {
      ++total;
      shared += MakeBandKey(query.subs[k].signature, band, width) ==
                MakeBandKey(reference.subs[k].signature, band, width);
    }
  }
  return static_cast<double>(shared) / static_cast<double>(total);
}

TEST(RobustnessTest, NoisyCopyKeepsBandKeysOtherClipsDoNot) {
  const auto& corpus = DeskCorpus();
  for (Variant v : kAllVariants) {
    const Profile p = Profile::ForVariant(v);
    const Fingerprinter fp(p);
    double worst_same = 1.0, worst_other = 0.0;
    for (size_t file = 0; file < 10; ++file) {
      const Fingerprint noisy = fp.Compute(AddNoise(corpus[file].audio, 20.0, 300 + file));
      worst_same = std::min(worst_same, SharedBandKeys(noisy, fp.Compute(corpus[file].audio), p));
      const Fingerprint other = fp.Compute(corpus[(file + 11) % corpus.size()].audio);
      worst_other = std::max(worst_other, SharedBandKeys(noisy, other, p));
    }
    EXPECT_GE(worst_same, 0.30) << VariantName(v);
    EXPECT_LE(worst_other, 0.05) << VariantName(v);
  }
}

TEST_F(DeskIndexTest, BatchMatchesSerial) {
  std::vector<std::vector<SubFingerprint>> queries(4, (*fingerprints_)[2].subs);
  const CorpusFile unseen = SynthesizeCorpus({.n_files = 1, .n_speakers = 1, .seed = 555})[0];
  for (int i = 0; i < 28; ++i) {
    if (i % 3 == 0) {
      DeteriorationSpec spec;
      spec.snr_db = 15.0;
      queries.push_back(Fingerprinter(*profile_).Compute(MakeQuery(unseen.audio, spec, i)).subs);
    } else {
      queries.push_back(DegradedQuery(static_cast<size_t>(i), 50 + i, 10.0 + i, 1.0));
    }
  }
  const auto batch = index_->QueryBatch(queries);
  ASSERT_EQ(batch.size(), queries.size());
  for (size_t i = 0; i < queries.size(); ++i) EXPECT_EQ(batch[i], index_->Query(queries[i])) << i;
  for (size_t i = 1; i < 4; ++i) EXPECT_EQ(batch[i], batch[0]);
}

TEST_F(DeskIndexTest, DistinctCorpusHasNoDuplicates) {
  EXPECT_TRUE(index_->FindDuplicates(0.8).empty());
  EXPECT_THROW(index_->FindDuplicates(0.0), ConfigError);
  EXPECT_THROW(index_->FindDuplicates(1.5), ConfigError);
}

TEST_F(DeskIndexTest, PersistenceIsBehaviourPreserving) {
  const testing::ScratchDir dir("index");
  index_->Save(dir / "desk.spix");
  const RetrievalIndex loaded = RetrievalIndex::Load(dir / "desk.spix", *profile_);
  EXPECT_EQ(loaded.Serialize(), index_->Serialize());
  for (size_t file = 0; file < DeskCorpus().size(); file += 3) {
    const auto q = DegradedQuery(file, 77 + file, 20.0, 0.98);
    EXPECT_EQ(loaded.Rank(q), index_->Rank(q));
  }
  const auto bytes = index_->Serialize();
  EXPECT_THROW(RetrievalIndex::Deserialize(std::span<const uint8_t>(bytes).first(bytes.size() / 2)),
               CorruptIndex);
  auto flipped = bytes;
  flipped[flipped.size() / 3] ^= 0x40;
  EXPECT_THROW(RetrievalIndex::Deserialize(flipped), CorruptIndex);
  Profile other = *profile_;
  other.fingerprint.seed = 1;
  EXPECT_THROW(RetrievalIndex::Load(dir / "desk.spix", other), IncompatibleIndex);
  EXPECT_THROW(RetrievalIndex::Load(dir / "missing.spix"), IoError);
}

TEST(IndexMutationTest, DuplicateUnderTwoIdsAndRemoval) {
  const Profile profile = Profile::ForVariant(Variant::kLinearVocal);
  const auto corpus = testing::SmallCorpus(4);
  RetrievalIndex index(profile);
  const Fingerprinter fp(profile);
  for (size_t i = 0; i < corpus.size(); ++i) index.Enroll(fp.Compute(corpus[i].audio, 10 + i));
  index.Enroll(fp.Compute(corpus[1].audio, 99));
  const auto pairs = index.FindDuplicates(0.8);
  ASSERT_EQ(pairs.size(), 1u);
  EXPECT_EQ(pairs[0].first, 11u);
  EXPECT_EQ(pairs[0].second, 99u);
  EXPECT_NEAR(pairs[0].overlap, 1.0, 1e-12);

  index.Remove(99);
  EXPECT_FALSE(index.Contains(99));
  EXPECT_TRUE(index.FindDuplicates(0.8).empty());
  EXPECT_THROW(index.Remove(99), NotFound);
  EXPECT_THROW(index.GetFingerprint(99), NotFound);
  const Fingerprint again = fp.Compute(corpus[1].audio, 99);
  index.Enroll(again);
  EXPECT_EQ(index.GetFingerprint(99).subs.size(), again.subs.size());
  EXPECT_EQ(index.FileIds(), (std::vector<uint64_t>{10, 11, 12, 13, 99}));
}

}  // namespace
}  // namespace speechprint
