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

// Waveprint-style sub-fingerprints: the spectral image is cut into
// overlapping blocks, each block goes through a 2-D Haar transform, the
// signs of the t largest coefficients form a sparse bit vector, and min-hash
// compresses that vector to p one-byte values.

#ifndef SPEECHPRINT_FINGERPRINT_H_
#define SPEECHPRINT_FINGERPRINT_H_

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "speechprint/audio.h"
#include "speechprint/matrix.h"
#include "speechprint/spectral.h"

namespace speechprint {

// Block length in seconds that the default 128 frames span at 25 ms.
inline constexpr double kDefaultBlockSeconds = 3.2;

struct FingerprintConfig {
  int block_frames = 128;
  int block_hop_frames = 2;
  int top_t = 200;
  int n_permutations = 100;  // p
  int band_count = 50;       // l
  int band_width = 2;        // b
  uint64_t seed = 0x5eed5eedULL;

  // Throws ConfigError unless l*b == p, hop >= 1, block_frames is a power of
  // two and top_t >= 1.
  void Validate() const;

  friend bool operator==(const FingerprintConfig&,
                         const FingerprintConfig&) = default;
};

// Everything that determines the bytes of a fingerprint.
struct Profile {
  SpectralConfig spectral;
  FingerprintConfig fingerprint;

  // Default profile for a variant at the given stride. block_frames is the
  // power of two closest to 3.2 s of frames, so the block spans about the
  // same time at every stride; the hop stays in frames.
  static Profile ForVariant(Variant variant,
                            double stride_s = kDefaultStrideSeconds);

  void Validate() const;
  // Canonical "key=value;..." form and its FNV-1a digest.
  std::string ToString() const;
  static Profile Parse(const std::string& text);
  uint64_t Digest() const;

  friend bool operator==(const Profile&, const Profile&) = default;
};

inline constexpr uint8_t kMinHashCap = 255;

struct SubFingerprint {
  std::vector<uint8_t> signature;
  uint32_t block_index = 0;
  double time_offset_s = 0.0;

  friend bool operator==(const SubFingerprint&,
                         const SubFingerprint&) = default;
};

struct Fingerprint {
  uint64_t file_id = 0;
  std::vector<SubFingerprint> subs;

  friend bool operator==(const Fingerprint&, const Fingerprint&) = default;
};

// Set-bit indices of a sparse bit vector, ascending.
using SparseBits = std::vector<uint32_t>;

// Overlapping [padded_rows x block_frames] blocks, rows zero-padded to the
// next power of two. Throws TooShort if the image has fewer frames than one
// block.
std::vector<Matrix> ExtractBlocks(const SpectralImage& image,
                                  const FingerprintConfig& config);
size_t BlockCount(size_t n_frames, const FingerprintConfig& config);

// Full standard 2-D Haar decomposition with orthonormal scaling: every row is
// transformed completely, then every column. Throws ConfigError unless both
// dimensions are powers of two.
Matrix Haar2d(const Matrix& block);
Matrix InverseHaar2d(const Matrix& coeffs);

// Sign-encodes the t largest-magnitude coefficients of a flattened
// (row-major) coefficient array: bit 2i for positive, 2i+1 for negative.
// Zero coefficients set nothing; ties at the boundary keep the lower index.
SparseBits TopTSigns(std::span<const double> coeffs, size_t t);
inline SparseBits TopTSigns(const Matrix& coeffs, size_t t) {
  return TopTSigns(coeffs.data(), t);
}

// Min-hash over a bit vector of fixed dimension. Permutation j ranks every
// index of the domain by a keyed 64-bit hash (seed, j, index), ties by index;
// signature[j] is the smallest rank among the set bits, capped at 255. Only
// the first 255 entries of each permutation are stored.
class MinHasher {
 public:
  MinHasher(uint64_t seed, size_t domain, size_t n_permutations);

  // Shared instance for repeated use; construction is O(p * domain).
  static std::shared_ptr<const MinHasher> Get(uint64_t seed, size_t domain,
                                              size_t n_permutations);

  size_t domain() const { return domain_; }
  size_t n_permutations() const { return prefixes_.size(); }

  std::vector<uint8_t> Signature(const SparseBits& bits) const;

 private:
  size_t domain_;
  std::vector<std::vector<uint32_t>> prefixes_;
};

// Reusable fingerprint extractor for one profile. Thread-compatible: use one
// instance per thread.
class Fingerprinter {
 public:
  explicit Fingerprinter(const Profile& profile);

  const Profile& profile() const { return profile_; }

  // Block -> Haar -> top-t signs -> min-hash.
  std::vector<uint8_t> SignBlock(const Matrix& block) const;

  // Throws TooShort if the audio does not yield a single block.
  Fingerprint Compute(const AudioBuffer& audio, uint64_t file_id = 0) const;

 private:
  Profile profile_;
  std::shared_ptr<const MinHasher> hasher_;
  size_t padded_rows_;
};

Fingerprint FingerprintAudio(const AudioBuffer& audio,
                             const SpectralConfig& spectral,
                             const FingerprintConfig& config,
                             uint64_t file_id = 0);

// Incremental fingerprinting of one stream of canonical-rate samples.
// Each sub-fingerprint is emitted as soon as its block is complete; the
// sequence matches FingerprintAudio on the concatenated input exactly.
class StreamingFingerprinter {
 public:
  explicit StreamingFingerprinter(const Profile& profile);

  // Appends newly completed sub-fingerprints to `out`.
  void Push(std::span<const double> samples, std::vector<SubFingerprint>& out);

  size_t samples_consumed() const { return samples_total_; }
  double seconds_consumed() const {
    return static_cast<double>(samples_total_) / sample_rate_;
  }
  size_t frames_emitted() const { return frame_base_ + columns_.size(); }

 private:
  Fingerprinter fingerprinter_;
  SpectralFrontEnd front_;
  int sample_rate_;
  size_t padded_rows_;
  std::vector<double> samples_;
  size_t sample_base_ = 0;
  size_t samples_total_ = 0;
  std::vector<std::vector<double>> columns_;
  size_t frame_base_ = 0;
  uint32_t next_block_ = 0;
};

// Binary form: "SPFP", u16 version, u64 profile digest, u64 file_id,
// u32 count, then per sub-fingerprint u32 block_index and p signature bytes.
// All integers little-endian.
std::vector<uint8_t> SerializeFingerprint(const Fingerprint& fp,
                                          const Profile& profile);
// Throws IncompatibleIndex on a digest mismatch, CorruptIndex on bad bytes.
Fingerprint DeserializeFingerprint(std::span<const uint8_t> bytes,
                                   const Profile& profile);

}  // namespace speechprint

#endif  // SPEECHPRINT_FINGERPRINT_H_
