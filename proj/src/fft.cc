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

#include "speechprint/fft.h"

#include <fftw3.h>

#include <mutex>

#include "speechprint/errors.h"

namespace speechprint {
namespace {

// The FFTW planner is not reentrant.
std::mutex& PlannerMutex() {
  static std::mutex mu;
  return mu;
}

}  // namespace

RealFft::RealFft(size_t size) : size_(size) {
  if (!IsPowerOfTwo(size)) throw ConfigError("FFT size must be a power of two");
  std::lock_guard<std::mutex> lock(PlannerMutex());
  input_ = fftw_alloc_real(size_);
  auto* out = fftw_alloc_complex(bins());
  output_ = out;
  plan_ = fftw_plan_dft_r2c_1d(static_cast<int>(size_), input_, out,
                               FFTW_ESTIMATE);
  for (size_t i = 0; i < size_; ++i) input_[i] = 0.0;
}

RealFft::~RealFft() {
  std::lock_guard<std::mutex> lock(PlannerMutex());
  fftw_destroy_plan(static_cast<fftw_plan>(plan_));
  fftw_free(input_);
  fftw_free(output_);
}

void RealFft::Execute() { fftw_execute(static_cast<fftw_plan>(plan_)); }

std::span<const std::complex<double>> RealFft::output() const {
  // fftw_complex is layout-compatible with std::complex<double>.
  return {reinterpret_cast<const std::complex<double>*>(output_), bins()};
}

}  // namespace speechprint
