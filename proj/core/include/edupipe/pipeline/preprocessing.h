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

#include <optional>
#include <string_view>

#include "edupipe/pipeline/sample.h"

namespace edupipe {

inline constexpr double kDefaultSilenceThreshold = 0.001;
inline constexpr std::size_t kFilterBlockSize = 1024;

// Scales the whole sample so max |amplitude| = 1. Throws kAllZeroRange.
Sample Normalize(Sample s);
// Scales [from, to) only; the rest is untouched.
Sample NormalizeRange(Sample s, std::size_t from, std::size_t to);

// Drops every sample with |amplitude| < threshold. Throws
// kEmptyAfterSilence if nothing remains.
Sample RemoveSilence(Sample s, double threshold = kDefaultSilenceThreshold);

// Trims leading and trailing runs below the threshold.
Sample Endpoint(Sample s, double threshold = kDefaultSilenceThreshold);

enum class FilterKind { kLowPass, kHighPass, kBandPass, kBandStop, kHighFrequencyBoost };

std::string_view ToString(FilterKind k);
FilterKind ParseFilterKind(std::string_view s);

struct FilterSpec {
  FilterKind kind = FilterKind::kLowPass;
  // Cutoff for low/high pass and boost; lower edge for band filters.
  double low = 0.0;
  // Upper edge for band filters.
  double high = 0.0;
  double boost_gain = 2.0;
};

// Per 1024-sample block: forward transform, mask or scale bins by their
// frequency min(k, n-k) * rate / n, inverse transform. LowPass keeps
// f < low; HighPass keeps f >= low; BandPass keeps low <= f <= high;
// BandStop keeps the rest; HighFrequencyBoost multiplies f > low by the
// gain. Throws kBadCutoff unless cutoffs lie in (0, rate/2) and low < high
// for band filters.
Sample FftFilter(const Sample& s, const FilterSpec& spec, std::size_t block = kFilterBlockSize);

// LowPass at `cutoff_hz`, default rate/4.
Sample RemoveNoise(const Sample& s, std::optional<double> cutoff_hz = std::nullopt);

}  // namespace edupipe
