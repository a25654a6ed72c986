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

#include <span>
#include <vector>

#include "edupipe/pipeline/sample.h"

namespace edupipe {

using FeatureVector = std::vector<double>;

struct FftFeatureConfig {
  std::size_t window = 1024;
  std::size_t hop = 512;
  // Leading magnitude bins kept before folding.
  std::size_t bins = 512;
  // Output length; must divide `bins`.
  std::size_t length = 128;
  bool hamming = true;
  bool log1p = true;
};

// Hamming-windowed magnitude spectra over windows starting at 0, hop,
// 2*hop, ... that fit in the sample (one zero-padded window if the sample
// is shorter than a window), folded by averaging equal groups of bins,
// averaged over windows, then log1p. Throws kEmptySample.
FeatureVector ExtractFftFeatures(const Sample& s, const FftFeatureConfig& config = {});

// r[0..order] with r[j] = sum_t x[t] x[t+j].
std::vector<double> Autocorrelation(std::span<const double> x, std::size_t order);
// Predictor coefficients a[1..order] with x[t] ~ sum_i a[i] x[t-i].
// Throws kSingularAutocorrelation when r[0] = 0 or the prediction error
// collapses to zero.
std::vector<double> LevinsonDurbin(std::span<const double> r, std::size_t order);
// Throws kTooShort unless the sample is longer than `order`.
FeatureVector ExtractLpcFeatures(const Sample& s, std::size_t order = 20);

// ceil(L/2) largest amplitudes descending, then floor(L/2) smallest
// ascending. Throws kTooShort if the sample has fewer than L values.
FeatureVector ExtractMinMaxFeatures(const Sample& s, std::size_t length);

// u32 BE length then f64 LE values.
Bytes EncodeFeatures(const FeatureVector& v);
FeatureVector DecodeFeatures(ByteView bytes);

}  // namespace edupipe
