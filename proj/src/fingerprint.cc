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

#include "speechprint/fingerprint.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <mutex>
#include <numeric>
#include <sstream>
#include <tuple>

#include "speechprint/bytes.h"
#include "speechprint/errors.h"
#include "speechprint/fft.h"
#include "speechprint/hash.h"

namespace speechprint {

void FingerprintConfig::Validate() const {
  if (block_frames < 1 || !IsPowerOfTwo(static_cast<size_t>(block_frames))) {
    throw ConfigError("block_frames must be a power of two");
  }
  if (block_hop_frames < 1) throw ConfigError("block_hop_frames must be >= 1");
  if (top_t < 1) throw ConfigError("top_t must be >= 1");
  if (n_permutations < 1 || band_count < 1 || band_width < 1) {
    throw ConfigError("min-hash sizes must be positive");
  }
  if (band_count * band_width != n_permutations) {
    throw ConfigError("band_count * band_width must equal n_permutations");
  }
}

Profile Profile::ForVariant(Variant variant, double stride_s) {
  Profile p;
  p.spectral = SpectralConfig::ForVariant(variant, stride_s);
  if (!(stride_s > 0.0)) throw ConfigError("stride must be positive");
  const double frames = std::max(1.0, kDefaultBlockSeconds / stride_s);
  const int exponent = static_cast<int>(std::lround(std::log2(frames)));
  p.fingerprint.block_frames = 1 << std::clamp(exponent, 0, 16);
  return p;
}

void Profile::Validate() const {
  spectral.Validate();
  fingerprint.Validate();
}

namespace {

std::string FormatDouble(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

std::string Profile::ToString() const {
  std::ostringstream out;
  out << "variant=" << VariantName(spectral.variant)
      << ";window_s=" << FormatDouble(spectral.window_s)
      << ";stride_s=" << FormatDouble(spectral.stride_s)
      << ";n_bins=" << spectral.n_bins
      << ";f_min=" << FormatDouble(spectral.f_min)
      << ";f_max=" << FormatDouble(spectral.f_max)
      << ";fft_size=" << spectral.fft_size
      << ";block_frames=" << fingerprint.block_frames
      << ";block_hop_frames=" << fingerprint.block_hop_frames
      << ";top_t=" << fingerprint.top_t
      << ";p=" << fingerprint.n_permutations
      << ";l=" << fingerprint.band_count
      << ";b=" << fingerprint.band_width
      << ";seed=" << fingerprint.seed;
  return out.str();
}

Profile Profile::Parse(const std::string& text) {
  Profile p;
  std::istringstream in(text);
  std::string item;
  while (std::getline(in, item, ';')) {
    const auto eq = item.find('=');
    if (eq == std::string::npos) throw ConfigError("bad profile entry: " + item);
    const std::string key = item.substr(0, eq);
    const std::string value = item.substr(eq + 1);
    try {
      if (key == "variant") p.spectral.variant = ParseVariant(value);
      else if (key == "window_s") p.spectral.window_s = std::stod(value);
      else if (key == "stride_s") p.spectral.stride_s = std::stod(value);
      else if (key == "n_bins") p.spectral.n_bins = std::stoi(value);
      else if (key == "f_min") p.spectral.f_min = std::stod(value);
      else if (key == "f_max") p.spectral.f_max = std::stod(value);
      else if (key == "fft_size") p.spectral.fft_size = std::stoi(value);
      else if (key == "block_frames") p.fingerprint.block_frames = std::stoi(value);
      else if (key == "block_hop_frames") p.fingerprint.block_hop_frames = std::stoi(value);
      else if (key == "top_t") p.fingerprint.top_t = std::stoi(value);
      else if (key == "p") p.fingerprint.n_permutations = std::stoi(value);
      else if (key == "l") p.fingerprint.band_count = std::stoi(value);
      else if (key == "b") p.fingerprint.band_width = std::stoi(value);
      else if (key == "seed") p.fingerprint.seed = std::stoull(value);
      else throw ConfigError("unknown profile key: " + key);
    } catch (const std::logic_error&) {
      throw ConfigError("bad profile value for " + key + ": " + value);
    }
  }
  return p;
}

uint64_t Profile::Digest() const { return Fnv1a64(ToString()); }

size_t BlockCount(size_t n_frames, const FingerprintConfig& config) {
  const auto block = static_cast<size_t>(config.block_frames);
  if (n_frames < block) return 0;
  return (n_frames - block) / static_cast<size_t>(config.block_hop_frames) + 1;
}

std::vector<Matrix> ExtractBlocks(const SpectralImage& image,
                                  const FingerprintConfig& config) {
  config.Validate();
  const size_t count = BlockCount(image.n_frames(), config);
  if (count == 0) throw TooShort("fewer frames than one fingerprint block");
  const size_t rows = NextPowerOfTwo(image.n_bins());
  const auto width = static_cast<size_t>(config.block_frames);
  const auto hop = static_cast<size_t>(config.block_hop_frames);
  std::vector<Matrix> blocks;
  blocks.reserve(count);
  for (size_t b = 0; b < count; ++b) {
    Matrix block(rows, width);
    for (size_t r = 0; r < image.n_bins(); ++r) {
      for (size_t c = 0; c < width; ++c) block(r, c) = image.data(r, b * hop + c);
    }
    blocks.push_back(std::move(block));
  }
  return blocks;
}

namespace {

constexpr double kInvSqrt2 = 0.70710678118654752440;

void Haar1d(std::span<double> x, std::vector<double>& scratch) {
  scratch.resize(x.size());
  for (size_t len = x.size(); len >= 2; len /= 2) {
    const size_t half = len / 2;
    for (size_t i = 0; i < half; ++i) {
      scratch[i] = (x[2 * i] + x[2 * i + 1]) * kInvSqrt2;
      scratch[half + i] = (x[2 * i] - x[2 * i + 1]) * kInvSqrt2;
    }
    std::copy(scratch.begin(), scratch.begin() + static_cast<long>(len), x.begin());
  }
}

void InverseHaar1d(std::span<double> x, std::vector<double>& scratch) {
  scratch.resize(x.size());
  for (size_t len = 2; len <= x.size(); len *= 2) {
    const size_t half = len / 2;
    for (size_t i = 0; i < half; ++i) {
      scratch[2 * i] = (x[i] + x[half + i]) * kInvSqrt2;
      scratch[2 * i + 1] = (x[i] - x[half + i]) * kInvSqrt2;
    }
    std::copy(scratch.begin(), scratch.begin() + static_cast<long>(len), x.begin());
  }
}

// Column transforms applied to whole rows at a time, which keeps the inner
// loops contiguous.
void HaarColumns(Matrix& m, Matrix& scratch) {
  const size_t cols = m.cols();
  for (size_t len = m.rows(); len >= 2; len /= 2) {
    const size_t half = len / 2;
    for (size_t i = 0; i < half; ++i) {
      const double* a = m.row(2 * i).data();
      const double* b = m.row(2 * i + 1).data();
      double* lo = scratch.row(i).data();
      double* hi = scratch.row(half + i).data();
      for (size_t c = 0; c < cols; ++c) {
        lo[c] = (a[c] + b[c]) * kInvSqrt2;
        hi[c] = (a[c] - b[c]) * kInvSqrt2;
      }
    }
    std::copy(scratch.data().begin(),
              scratch.data().begin() + static_cast<long>(len * cols),
              m.data().begin());
  }
}

void InverseHaarColumns(Matrix& m, Matrix& scratch) {
  const size_t cols = m.cols();
  for (size_t len = 2; len <= m.rows(); len *= 2) {
    const size_t half = len / 2;
    for (size_t i = 0; i < half; ++i) {
      const double* lo = m.row(i).data();
      const double* hi = m.row(half + i).data();
      double* a = scratch.row(2 * i).data();
      double* b = scratch.row(2 * i + 1).data();
      for (size_t c = 0; c < cols; ++c) {
        a[c] = (lo[c] + hi[c]) * kInvSqrt2;
        b[c] = (lo[c] - hi[c]) * kInvSqrt2;
      }
    }
    std::copy(scratch.data().begin(),
              scratch.data().begin() + static_cast<long>(len * cols),
              m.data().begin());
  }
}

void CheckHaarShape(const Matrix& m) {
  if (!IsPowerOfTwo(m.rows()) || !IsPowerOfTwo(m.cols())) {
    throw ConfigError("Haar transform needs power-of-two dimensions");
  }
}

}  // namespace

Matrix Haar2d(const Matrix& block) {
  CheckHaarShape(block);
  Matrix out = block;
  std::vector<double> scratch;
  for (size_t r = 0; r < out.rows(); ++r) Haar1d(out.row(r), scratch);
  Matrix tmp(out.rows(), out.cols());
  HaarColumns(out, tmp);
  return out;
}

Matrix InverseHaar2d(const Matrix& coeffs) {
  CheckHaarShape(coeffs);
  Matrix out = coeffs;
  Matrix tmp(out.rows(), out.cols());
  InverseHaarColumns(out, tmp);
  std::vector<double> scratch;
  for (size_t r = 0; r < out.rows(); ++r) InverseHaar1d(out.row(r), scratch);
  return out;
}

SparseBits TopTSigns(std::span<const double> coeffs, size_t t) {
  const size_t keep = std::min(t, coeffs.size());
  SparseBits bits;
  if (keep == 0) return bits;
  // Min-heap of the best `keep` (magnitude, index) pairs seen so far. Indices
  // arrive in increasing order, so a newcomer only displaces the current
  // worst on a strictly larger magnitude: ties resolve to the lower index.
  using Entry = std::pair<double, uint32_t>;
  auto worse_on_top = [](const Entry& a, const Entry& b) {
    return a.first > b.first || (a.first == b.first && a.second < b.second);
  };
  std::vector<Entry> heap;
  heap.reserve(keep);
  for (size_t i = 0; i < keep; ++i) {
    heap.emplace_back(std::abs(coeffs[i]), static_cast<uint32_t>(i));
  }
  std::make_heap(heap.begin(), heap.end(), worse_on_top);
  for (size_t i = keep; i < coeffs.size(); ++i) {
    const double m = std::abs(coeffs[i]);
    if (m <= heap.front().first) continue;
    std::pop_heap(heap.begin(), heap.end(), worse_on_top);
    heap.back() = {m, static_cast<uint32_t>(i)};
    std::push_heap(heap.begin(), heap.end(), worse_on_top);
  }
  std::vector<uint32_t> chosen(keep);
  for (size_t k = 0; k < keep; ++k) chosen[k] = heap[k].second;
  std::sort(chosen.begin(), chosen.end());
  bits.reserve(keep);
  for (uint32_t idx : chosen) {
    if (coeffs[idx] > 0.0) {
      bits.push_back(2 * idx);
    } else if (coeffs[idx] < 0.0) {
      bits.push_back(2 * idx + 1);
    }
  }
  return bits;
}

MinHasher::MinHasher(uint64_t seed, size_t domain, size_t n_permutations)
    : domain_(domain) {
  if (domain == 0 || n_permutations == 0) {
    throw ConfigError("min-hash domain and permutation count must be positive");
  }
  const size_t prefix = std::min<size_t>(kMinHashCap, domain);
  std::vector<std::pair<uint64_t, uint32_t>> keyed(domain);
  prefixes_.resize(n_permutations);
  for (size_t j = 0; j < n_permutations; ++j) {
    const uint64_t key = MixSeed(seed, j);
    for (size_t x = 0; x < domain; ++x) {
      keyed[x] = {MixSeed(key, x), static_cast<uint32_t>(x)};
    }
    std::partial_sort(keyed.begin(), keyed.begin() + static_cast<long>(prefix),
                      keyed.end());
    auto& out = prefixes_[j];
    out.resize(prefix);
    for (size_t r = 0; r < prefix; ++r) out[r] = keyed[r].second;
  }
}

std::shared_ptr<const MinHasher> MinHasher::Get(uint64_t seed, size_t domain,
                                                size_t n_permutations) {
  static std::mutex mu;
  static std::map<std::tuple<uint64_t, size_t, size_t>,
                  std::shared_ptr<const MinHasher>>
      cache;
  std::lock_guard<std::mutex> lock(mu);
  auto& slot = cache[{seed, domain, n_permutations}];
  if (!slot) slot = std::make_shared<MinHasher>(seed, domain, n_permutations);
  return slot;
}

std::vector<uint8_t> MinHasher::Signature(const SparseBits& bits) const {
  std::vector<uint8_t> dense(domain_, 0);
  for (uint32_t b : bits) {
    if (b >= domain_) throw RangeError("bit index outside min-hash domain");
    dense[b] = 1;
  }
  std::vector<uint8_t> sig(prefixes_.size(), kMinHashCap);
  if (bits.empty()) return sig;
  for (size_t j = 0; j < prefixes_.size(); ++j) {
    const auto& perm = prefixes_[j];
    for (size_t r = 0; r < perm.size(); ++r) {
      if (dense[perm[r]]) {
        sig[j] = static_cast<uint8_t>(r);
        break;
      }
    }
  }
  return sig;
}

namespace {

double BlockOffsetSeconds(size_t block, size_t hop, double stride_s) {
  return static_cast<double>(block * hop) * stride_s;
}

size_t ResolvedBins(const SpectralConfig& spectral) {
  return SpectralFrontEnd(spectral).n_bins();
}

}  // namespace

Fingerprinter::Fingerprinter(const Profile& profile) : profile_(profile) {
  profile_.Validate();
  padded_rows_ = NextPowerOfTwo(ResolvedBins(profile_.spectral));
  const size_t area =
      padded_rows_ * static_cast<size_t>(profile_.fingerprint.block_frames);
  if (static_cast<size_t>(profile_.fingerprint.top_t) > area) {
    throw ConfigError("top_t exceeds the padded block area");
  }
  hasher_ = MinHasher::Get(profile_.fingerprint.seed, 2 * area,
                           static_cast<size_t>(profile_.fingerprint.n_permutations));
}

std::vector<uint8_t> Fingerprinter::SignBlock(const Matrix& block) const {
  const Matrix coeffs = Haar2d(block);
  return hasher_->Signature(
      TopTSigns(coeffs, static_cast<size_t>(profile_.fingerprint.top_t)));
}

Fingerprint Fingerprinter::Compute(const AudioBuffer& audio,
                                   uint64_t file_id) const {
  const AudioBuffer canonical = Resample(audio, kCanonicalSampleRate);
  const SpectralImage image = MakeImage(canonical, profile_.spectral);
  const auto blocks = ExtractBlocks(image, profile_.fingerprint);
  Fingerprint fp;
  fp.file_id = file_id;
  fp.subs.reserve(blocks.size());
  const auto hop = static_cast<size_t>(profile_.fingerprint.block_hop_frames);
  for (size_t b = 0; b < blocks.size(); ++b) {
    SubFingerprint sub;
    sub.signature = SignBlock(blocks[b]);
    sub.block_index = static_cast<uint32_t>(b);
    sub.time_offset_s = BlockOffsetSeconds(b, hop, image.frame_stride_s);
    fp.subs.push_back(std::move(sub));
  }
  return fp;
}

Fingerprint FingerprintAudio(const AudioBuffer& audio,
                             const SpectralConfig& spectral,
                             const FingerprintConfig& config,
                             uint64_t file_id) {
  return Fingerprinter(Profile{spectral, config}).Compute(audio, file_id);
}

StreamingFingerprinter::StreamingFingerprinter(const Profile& profile)
    : fingerprinter_(profile),
      front_(profile.spectral, kCanonicalSampleRate),
      sample_rate_(kCanonicalSampleRate),
      padded_rows_(NextPowerOfTwo(front_.n_bins())) {}

void StreamingFingerprinter::Push(std::span<const double> samples,
                                  std::vector<SubFingerprint>& out) {
  samples_.insert(samples_.end(), samples.begin(), samples.end());
  samples_total_ += samples.size();

  const size_t window = front_.window_samples();
  const size_t stride = front_.stride_samples();
  // Next frame starts at absolute sample frames_emitted() * stride.
  while (true) {
    const size_t start = frames_emitted() * stride;
    if (start + window > samples_total_) break;
    std::vector<double> column(front_.n_bins());
    front_.Column(std::span<const double>(samples_).subspan(start - sample_base_,
                                                            window),
                  column);
    columns_.push_back(std::move(column));
  }

  const FingerprintConfig& cfg = fingerprinter_.profile().fingerprint;
  const auto width = static_cast<size_t>(cfg.block_frames);
  const auto hop = static_cast<size_t>(cfg.block_hop_frames);
  while (true) {
    const size_t first = static_cast<size_t>(next_block_) * hop;
    if (first + width > frames_emitted()) break;
    Matrix block(padded_rows_, width);
    for (size_t c = 0; c < width; ++c) {
      const auto& column = columns_[first + c - frame_base_];
      for (size_t r = 0; r < column.size(); ++r) block(r, c) = column[r];
    }
    SubFingerprint sub;
    sub.signature = fingerprinter_.SignBlock(block);
    sub.block_index = next_block_;
    sub.time_offset_s =
        BlockOffsetSeconds(next_block_, hop, front_.frame_stride_s());
    out.push_back(std::move(sub));
    ++next_block_;
  }

  // Release columns and samples nothing further can reference.
  const size_t keep_frame = static_cast<size_t>(next_block_) * hop;
  if (keep_frame > frame_base_) {
    const size_t drop = std::min(keep_frame - frame_base_, columns_.size());
    columns_.erase(columns_.begin(), columns_.begin() + static_cast<long>(drop));
    frame_base_ += drop;
  }
  const size_t keep_sample = frames_emitted() * stride;
  if (keep_sample > sample_base_ + 8192) {
    const size_t drop = std::min(keep_sample - sample_base_, samples_.size());
    samples_.erase(samples_.begin(), samples_.begin() + static_cast<long>(drop));
    sample_base_ += drop;
  }
}

namespace {
constexpr char kFingerprintMagic[] = "SPFP";
constexpr uint16_t kFingerprintVersion = 1;
}  // namespace

std::vector<uint8_t> SerializeFingerprint(const Fingerprint& fp,
                                          const Profile& profile) {
  ByteWriter w;
  w.Raw(std::string_view(kFingerprintMagic, 4));
  w.U16(kFingerprintVersion);
  w.U64(profile.Digest());
  w.U64(fp.file_id);
  w.U32(static_cast<uint32_t>(fp.subs.size()));
  for (const auto& sub : fp.subs) {
    w.U32(sub.block_index);
    w.Raw(sub.signature);
  }
  return w.Take();
}

Fingerprint DeserializeFingerprint(std::span<const uint8_t> bytes,
                                   const Profile& profile) {
  ByteReader<CorruptIndex> r(bytes);
  auto magic = r.Raw(4);
  if (std::memcmp(magic.data(), kFingerprintMagic, 4) != 0) {
    throw CorruptIndex("not a fingerprint file");
  }
  if (r.U16() != kFingerprintVersion) {
    throw IncompatibleIndex("unsupported fingerprint version");
  }
  if (r.U64() != profile.Digest()) {
    throw IncompatibleIndex("fingerprint was built with a different profile");
  }
  Fingerprint fp;
  fp.file_id = r.U64();
  const uint32_t count = r.U32();
  const auto p = static_cast<size_t>(profile.fingerprint.n_permutations);
  const auto hop = static_cast<size_t>(profile.fingerprint.block_hop_frames);
  const double stride_s =
      static_cast<double>(std::llround(profile.spectral.stride_s *
                                       kCanonicalSampleRate)) /
      kCanonicalSampleRate;
  for (uint32_t i = 0; i < count; ++i) {
    SubFingerprint sub;
    sub.block_index = r.U32();
    auto sig = r.Raw(p);
    sub.signature.assign(sig.begin(), sig.end());
    sub.time_offset_s = BlockOffsetSeconds(sub.block_index, hop, stride_s);
    if (!fp.subs.empty() && sub.block_index <= fp.subs.back().block_index) {
      throw CorruptIndex("sub-fingerprints out of order");
    }
    fp.subs.push_back(std::move(sub));
  }
  if (r.remaining() != 0) throw CorruptIndex("trailing bytes after fingerprint");
  return fp;
}

}  // namespace speechprint
