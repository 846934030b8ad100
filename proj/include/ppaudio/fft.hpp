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

#pragma once

#include <complex>
#include <cstddef>
#include <span>

namespace ppaudio::fft {

// Thin real-FFT layer. Plans are cached per length; execution is reentrant.

/// out.size() must be in.size() / 2 + 1.
void forward_real(std::span<const double> in, std::span<std::complex<double>> out);

/// Unnormalized inverse: forward then inverse scales by out.size().
void inverse_real(std::span<const std::complex<double>> in, std::span<double> out);

std::size_t next_pow2(std::size_t n);

}  // namespace ppaudio::fft
