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

#ifndef SPEECHPRINT_FFT_H_
#define SPEECHPRINT_FFT_H_

#include <complex>
#include <cstddef>
#include <span>

namespace speechprint {

// Forward real-to-complex FFT of a fixed power-of-two size, backed by FFTW.
// Owns its plan and buffers; one instance must not be executed from two
// threads at once, but separate instances are independent.
class RealFft {
 public:
  explicit RealFft(size_t size);
  ~RealFft();

  RealFft(const RealFft&) = delete;
  RealFft& operator=(const RealFft&) = delete;

  size_t size() const { return size_; }
  size_t bins() const { return size_ / 2 + 1; }

  // Write the time-domain frame here (size() values), then call Execute().
  std::span<double> input() { return {input_, size_}; }
  void Execute();
  std::span<const std::complex<double>> output() const;

 private:
  size_t size_;
  double* input_;
  void* output_;  // fftw_complex*
  void* plan_;    // fftw_plan
};

inline bool IsPowerOfTwo(size_t n) { return n != 0 && (n & (n - 1)) == 0; }

inline size_t NextPowerOfTwo(size_t n) {
  size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

}  // namespace speechprint

#endif  // SPEECHPRINT_FFT_H_
