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

#include "edupipe/pipeline/features.h"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>

#include "edupipe/pipeline/fft.h"

namespace edupipe {

FeatureVector ExtractFftFeatures(const Sample& s, const FftFeatureConfig& c) {
  if (s.data.empty()) Fail(ErrorCode::kEmptySample, "cannot extract features from an empty sample");
  if (c.window == 0 || (c.window & (c.window - 1)) != 0) {
    Fail(ErrorCode::kBadParameter, "FFT feature window must be a power of two");
  }
  if (c.hop == 0 || c.bins == 0 || c.bins > c.window || c.length == 0 || c.bins % c.length != 0) {
    Fail(ErrorCode::kBadParameter, "FFT feature length must divide the kept bin count");
  }
  std::vector<double> w(c.window, 1.0);
  if (c.hamming) {
    for (std::size_t i = 0; i < c.window; ++i) {
      w[i] = 0.54 - 0.46 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) /
                                    static_cast<double>(c.window - 1));
    }
  }
  std::vector<std::size_t> starts;
  if (s.data.size() <= c.window) {
    starts.push_back(0);
  } else {
    for (std::size_t st = 0; st + c.window <= s.data.size(); st += c.hop) starts.push_back(st);
  }

  const std::size_t group = c.bins / c.length;
  FeatureVector acc(c.length, 0.0);
  for (std::size_t st : starts) {
    std::vector<Complex> buf(c.window);
    for (std::size_t i = 0; i < c.window && st + i < s.data.size(); ++i) {
      buf[i] = s.data[st + i] * w[i];
    }
    buf = Fft(std::move(buf));
    for (std::size_t g = 0; g < c.length; ++g) {
      double sum = 0.0;
      for (std::size_t k = g * group; k < (g + 1) * group; ++k) sum += std::abs(buf[k]);
      acc[g] += sum / static_cast<double>(group);
    }
  }
  for (double& v : acc) {
    v /= static_cast<double>(starts.size());
    if (c.log1p) v = std::log1p(v);
  }
  return acc;
}

std::vector<double> Autocorrelation(std::span<const double> x, std::size_t order) {
  std::vector<double> r(order + 1, 0.0);
  for (std::size_t j = 0; j <= order; ++j) {
    double sum = 0.0;
    for (std::size_t t = 0; t + j < x.size(); ++t) sum += x[t] * x[t + j];
    r[j] = sum;
  }
  return r;
}

std::vector<double> LevinsonDurbin(std::span<const double> r, std::size_t order) {
  if (r.size() < order + 1) Fail(ErrorCode::kBadParameter, "autocorrelation shorter than order + 1");
  if (r[0] == 0.0) Fail(ErrorCode::kSingularAutocorrelation, "r[0] is zero");
  std::vector<double> a(order + 1, 0.0);
  std::vector<double> prev(order + 1, 0.0);
  double err = r[0];
  for (std::size_t i = 1; i <= order; ++i) {
    double acc = r[i];
    for (std::size_t j = 1; j < i; ++j) acc -= a[j] * r[i - j];
    double k = acc / err;
    prev = a;
    a[i] = k;
    for (std::size_t j = 1; j < i; ++j) a[j] = prev[j] - k * prev[i - j];
    err *= (1.0 - k * k);
    if (!(err > 0.0) && i < order) {
      Fail(ErrorCode::kSingularAutocorrelation, "prediction error vanished at order " + std::to_string(i));
    }
  }
  return {a.begin() + 1, a.end()};
}

FeatureVector ExtractLpcFeatures(const Sample& s, std::size_t order) {
  if (s.data.size() <= order) {
    Fail(ErrorCode::kTooShort, "LPC order " + std::to_string(order) + " needs more than " +
                                   std::to_string(order) + " samples");
  }
  auto r = Autocorrelation(s.data, order);
  return LevinsonDurbin(r, order);
}

FeatureVector ExtractMinMaxFeatures(const Sample& s, std::size_t length) {
  if (length == 0) Fail(ErrorCode::kBadParameter, "min/max feature length must be positive");
  if (s.data.size() < length) {
    Fail(ErrorCode::kTooShort, "min/max needs at least " + std::to_string(length) + " samples");
  }
  const std::size_t n_max = (length + 1) / 2;
  const std::size_t n_min = length / 2;
  std::vector<double> hi = s.data;
  std::partial_sort(hi.begin(), hi.begin() + static_cast<std::ptrdiff_t>(n_max), hi.end(),
                    std::greater<>());
  std::vector<double> lo = s.data;
  std::partial_sort(lo.begin(), lo.begin() + static_cast<std::ptrdiff_t>(n_min), lo.end());
  FeatureVector out(hi.begin(), hi.begin() + static_cast<std::ptrdiff_t>(n_max));
  out.insert(out.end(), lo.begin(), lo.begin() + static_cast<std::ptrdiff_t>(n_min));
  return out;
}

Bytes EncodeFeatures(const FeatureVector& v) {
  Bytes out;
  out.reserve(4 + v.size() * 8);
  PutU32BE(out, static_cast<std::uint32_t>(v.size()));
  for (double x : v) PutF64LE(out, x);
  return out;
}

FeatureVector DecodeFeatures(ByteView bytes) {
  ByteReader r(bytes);
  std::uint32_t n = r.U32BE();
  if (r.remaining() != static_cast<std::size_t>(n) * 8) {
    Fail(ErrorCode::kMalformedRecord, "feature vector length disagrees with payload");
  }
  FeatureVector v(n);
  for (auto& x : v) x = r.F64LE();
  return v;
}

}  // namespace edupipe
