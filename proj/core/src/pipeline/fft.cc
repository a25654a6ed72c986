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

#include "edupipe/pipeline/fft.h"

#include <bit>
#include <cmath>
#include <numbers>

#include "edupipe/common.h"

namespace edupipe {

namespace {

void Transform(std::vector<Complex>& a, bool inverse) {
  const std::size_t n = a.size();
  if (n <= 1) return;
  if (!std::has_single_bit(n)) Fail(ErrorCode::kBadParameter, "FFT size must be a power of two");

  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }

  const double sign = inverse ? 1.0 : -1.0;
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const std::size_t half = len / 2;
    // Twiddles from the exact angle rather than repeated multiplication,
    // which keeps the error near machine precision at large n.
    std::vector<Complex> w(half);
    for (std::size_t k = 0; k < half; ++k) {
      w[k] = std::polar(1.0, sign * 2.0 * std::numbers::pi * static_cast<double>(k) /
                                 static_cast<double>(len));
    }
    for (std::size_t i = 0; i < n; i += len) {
      for (std::size_t k = 0; k < half; ++k) {
        Complex u = a[i + k];
        Complex v = a[i + k + half] * w[k];
        a[i + k] = u + v;
        a[i + k + half] = u - v;
      }
    }
  }
  if (inverse) {
    for (auto& c : a) c /= static_cast<double>(n);
  }
}

}  // namespace

std::size_t NextPowerOfTwo(std::size_t n) { return n <= 1 ? 1 : std::bit_ceil(n); }

std::vector<Complex> Fft(std::span<const double> x) {
  std::vector<Complex> a(NextPowerOfTwo(x.size()));
  for (std::size_t i = 0; i < x.size(); ++i) a[i] = x[i];
  Transform(a, false);
  return a;
}

std::vector<Complex> Fft(std::vector<Complex> x) {
  x.resize(NextPowerOfTwo(x.size()));
  Transform(x, false);
  return x;
}

std::vector<Complex> Ifft(std::vector<Complex> X) {
  Transform(X, true);
  return X;
}

}  // namespace edupipe
