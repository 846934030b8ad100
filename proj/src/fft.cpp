// Copyright 2026 The ppaudio Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "ppaudio/fft.hpp"

#include <fftw3.h>

#include <algorithm>
#include <map>
#include <memory>
#include <mutex>
#include <utility>

#include "ppaudio/error.hpp"

namespace ppaudio::fft {
namespace {

struct Buffer {
  explicit Buffer(std::size_t bytes) : ptr(fftw_malloc(bytes)) {
    if (!ptr) throw std::bad_alloc();
  }
  ~Buffer() { fftw_free(ptr); }
  Buffer(const Buffer&) = delete;
  Buffer& operator=(const Buffer&) = delete;

  double* real() { return static_cast<double*>(ptr); }
  fftw_complex* complex() { return static_cast<fftw_complex*>(ptr); }

  void* ptr;
};

enum class Direction { Forward, Inverse };

// FFTW planning is not thread safe; execution with the new-array API is.
class PlanCache {
 public:
  ~PlanCache() {
    for (auto& [key, plan] : plans_) fftw_destroy_plan(plan);
  }

  fftw_plan get(std::size_t n, Direction dir) {
    std::lock_guard lock(mutex_);
    auto key = std::make_pair(n, dir);
    if (auto it = plans_.find(key); it != plans_.end()) return it->second;
    Buffer re(sizeof(double) * n);
    Buffer cx(sizeof(fftw_complex) * (n / 2 + 1));
    const int len = static_cast<int>(n);
    fftw_plan plan = dir == Direction::Forward
        ? fftw_plan_dft_r2c_1d(len, re.real(), cx.complex(), FFTW_ESTIMATE)
        : fftw_plan_dft_c2r_1d(len, cx.complex(), re.real(), FFTW_ESTIMATE);
    if (!plan) fail(ErrorCode::Internal, "fftw planning failed for length " + std::to_string(n));
    plans_.emplace(key, plan);
    return plan;
  }

 private:
  std::mutex mutex_;
  std::map<std::pair<std::size_t, Direction>, fftw_plan> plans_;
};

PlanCache& cache() {
  static PlanCache instance;
  return instance;
}

}  // namespace

void forward_real(std::span<const double> in, std::span<std::complex<double>> out) {
  const std::size_t n = in.size();
  if (n == 0 || out.size() != n / 2 + 1)
    fail(ErrorCode::LengthMismatch, "forward_real: output must hold n/2+1 bins");
  fftw_plan plan = cache().get(n, Direction::Forward);
  Buffer re(sizeof(double) * n);
  Buffer cx(sizeof(fftw_complex) * out.size());
  std::copy(in.begin(), in.end(), re.real());
  fftw_execute_dft_r2c(plan, re.real(), cx.complex());
  for (std::size_t k = 0; k < out.size(); ++k)
    out[k] = {cx.complex()[k][0], cx.complex()[k][1]};
}

void inverse_real(std::span<const std::complex<double>> in, std::span<double> out) {
  const std::size_t n = out.size();
  if (n == 0 || in.size() != n / 2 + 1)
    fail(ErrorCode::LengthMismatch, "inverse_real: input must hold n/2+1 bins");
  fftw_plan plan = cache().get(n, Direction::Inverse);
  Buffer cx(sizeof(fftw_complex) * in.size());
  Buffer re(sizeof(double) * n);
  for (std::size_t k = 0; k < in.size(); ++k) {
    cx.complex()[k][0] = in[k].real();
    cx.complex()[k][1] = in[k].imag();
  }
  fftw_execute_dft_c2r(plan, cx.complex(), re.real());
  std::copy(re.real(), re.real() + n, out.begin());
}

std::size_t next_pow2(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

}  // namespace ppaudio::fft
