// Copyright 2026 The edupipe Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing,
// software distributed under the License is distributed on an
// "AS IS" BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, either express or implied.  See the License for the
// specific language governing permissions and limitations
// under the License.

#pragma once

#include <complex>
#include <span>
#include <vector>

namespace edupipe {

using Complex = std::complex<double>;

std::size_t NextPowerOfTwo(std::size_t n);

// Iterative radix-2 transform, X[k] = sum x[t] e^(-2 pi i k t / n). Input
// is zero-padded to the next power of two.
std::vector<Complex> Fft(std::span<const double> x);
std::vector<Complex> Fft(std::vector<Complex> x);
// Inverse including the 1/n factor. Size must be a power of two.
std::vector<Complex> Ifft(std::vector<Complex> X);

}  // namespace edupipe
