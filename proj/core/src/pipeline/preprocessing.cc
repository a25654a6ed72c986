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

#include "edupipe/pipeline/preprocessing.h"

#include <algorithm>
#include <cmath>

#include <boost/algorithm/string.hpp>

#include "edupipe/pipeline/fft.h"

namespace edupipe {

Sample Normalize(Sample s) {
  const std::size_t n = s.data.size();
  return NormalizeRange(std::move(s), 0, n);
}

Sample NormalizeRange(Sample s, std::size_t from, std::size_t to) {
  to = std::min(to, s.data.size());
  if (from >= to) Fail(ErrorCode::kAllZeroRange, "empty normalization range");
  double peak = 0.0;
  for (std::size_t i = from; i < to; ++i) peak = std::max(peak, std::abs(s.data[i]));
  if (peak == 0.0) Fail(ErrorCode::kAllZeroRange, "normalization range is all zero");
  if (peak != 1.0) {
    for (std::size_t i = from; i < to; ++i) s.data[i] /= peak;
  }
  return s;
}

Sample RemoveSilence(Sample s, double threshold) {
  std::erase_if(s.data, [threshold](double v) { return std::abs(v) < threshold; });
  if (s.data.empty()) Fail(ErrorCode::kEmptyAfterSilence, "sample is entirely below the silence threshold");
  return s;
}

Sample Endpoint(Sample s, double threshold) {
  auto loud = [threshold](double v) { return std::abs(v) >= threshold; };
  auto first = std::find_if(s.data.begin(), s.data.end(), loud);
  if (first == s.data.end()) Fail(ErrorCode::kEmptyAfterSilence, "sample is entirely below the silence threshold");
  auto last = std::find_if(s.data.rbegin(), s.data.rend(), loud).base();
  s.data = std::vector<double>(first, last);
  return s;
}

std::string_view ToString(FilterKind k) {
  switch (k) {
    case FilterKind::kLowPass: return "low_pass";
    case FilterKind::kHighPass: return "high_pass";
    case FilterKind::kBandPass: return "band_pass";
    case FilterKind::kBandStop: return "band_stop";
    case FilterKind::kHighFrequencyBoost: return "high_frequency_boost";
  }
  return "?";
}

FilterKind ParseFilterKind(std::string_view s) {
  std::string lower = boost::algorithm::to_lower_copy(std::string(s));
  for (FilterKind k : {FilterKind::kLowPass, FilterKind::kHighPass, FilterKind::kBandPass,
                       FilterKind::kBandStop, FilterKind::kHighFrequencyBoost}) {
    if (lower == ToString(k)) return k;
  }
  Fail(ErrorCode::kBadParameter, "unknown filter kind '" + std::string(s) + "'");
}

namespace {

void CheckCutoff(double f, double nyquist) {
  if (!(f > 0.0 && f < nyquist)) {
    Fail(ErrorCode::kBadCutoff, "cutoff " + std::to_string(f) + " Hz outside (0, " +
                                    std::to_string(nyquist) + ")");
  }
}

double BinGain(const FilterSpec& spec, double f) {
  switch (spec.kind) {
    case FilterKind::kLowPass: return f < spec.low ? 1.0 : 0.0;
    case FilterKind::kHighPass: return f >= spec.low ? 1.0 : 0.0;
    case FilterKind::kBandPass: return (f >= spec.low && f <= spec.high) ? 1.0 : 0.0;
    case FilterKind::kBandStop: return (f >= spec.low && f <= spec.high) ? 0.0 : 1.0;
    case FilterKind::kHighFrequencyBoost: return f > spec.low ? spec.boost_gain : 1.0;
  }
  return 1.0;
}

}  // namespace

Sample FftFilter(const Sample& s, const FilterSpec& spec, std::size_t block) {
  if (s.rate_hz <= 0) Fail(ErrorCode::kBadParameter, "sample rate must be positive");
  if (block == 0 || (block & (block - 1)) != 0) {
    Fail(ErrorCode::kBadParameter, "filter block must be a power of two");
  }
  const double nyquist = s.rate_hz / 2.0;
  CheckCutoff(spec.low, nyquist);
  if (spec.kind == FilterKind::kBandPass || spec.kind == FilterKind::kBandStop) {
    CheckCutoff(spec.high, nyquist);
    if (!(spec.low < spec.high)) Fail(ErrorCode::kBadCutoff, "band filter needs low < high");
  }

  std::vector<double> gain(block);
  for (std::size_t k = 0; k < block; ++k) {
    double f = static_cast<double>(std::min(k, block - k)) * s.rate_hz / static_cast<double>(block);
    gain[k] = BinGain(spec, f);
  }

  Sample out = s;
  for (std::size_t start = 0; start < s.data.size(); start += block) {
    std::size_t len = std::min(block, s.data.size() - start);
    std::vector<Complex> buf(block);
    for (std::size_t i = 0; i < len; ++i) buf[i] = s.data[start + i];
    buf = Fft(std::move(buf));
    for (std::size_t k = 0; k < block; ++k) buf[k] *= gain[k];
    buf = Ifft(std::move(buf));
    for (std::size_t i = 0; i < len; ++i) out.data[start + i] = buf[i].real();
  }
  return out;
}

Sample RemoveNoise(const Sample& s, std::optional<double> cutoff_hz) {
  FilterSpec spec;
  spec.kind = FilterKind::kLowPass;
  spec.low = cutoff_hz.value_or(s.rate_hz / 4.0);
  return FftFilter(s, spec);
}

}  // namespace edupipe
