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

#include "edupipe/pipeline/marf.h"

#include <array>
#include <string>

#include <boost/algorithm/string.hpp>

#include "edupipe/common.h"

namespace edupipe {

namespace {

using K = ModuleKind;

// MANHATTAN_DISTANCE and CITYBLOCK_DISTANCE share 504 with Chebyshev in the
// original constants; the id lookup finds Chebyshev first.
constexpr std::array kModules = {
    MarfModule{100, "DUMMY", "dummy", K::kPreprocessing, "normalize", "", true},
    MarfModule{101, "HIGH_FREQUENCY_BOOST_FFT_FILTER", "high_frequency_boost", K::kPreprocessing, "fft_filter", "high_frequency_boost", true},
    MarfModule{102, "BANDPASS_FFT_FILTER", "band_pass", K::kPreprocessing, "fft_filter", "band_pass", true},
    MarfModule{103, "ENDPOINT", "endpoint", K::kPreprocessing, "endpoint", "", true},
    MarfModule{104, "LOW_PASS_FFT_FILTER", "low_pass", K::kPreprocessing, "fft_filter", "low_pass", true},
    MarfModule{105, "HIGH_PASS_FFT_FILTER", "high_pass", K::kPreprocessing, "fft_filter", "high_pass", true},
    MarfModule{106, "HIGH_PASS_BOOST_FILTER", "high_pass_boost", K::kPreprocessing, "high_pass_boost", "", false},
    MarfModule{107, "RAW", "raw", K::kPreprocessing, "raw", "", true},
    MarfModule{108, "PREPROCESSING_PLUGIN", "preprocessing_plugin", K::kPreprocessing, "preprocessing_plugin", "", false},
    MarfModule{109, "LOW_PASS_CFE_FILTER", "low_pass_cfe", K::kPreprocessing, "cfe_filter", "", false},
    MarfModule{110, "HIGH_PASS_CFE_FILTER", "high_pass_cfe", K::kPreprocessing, "cfe_filter", "", false},
    MarfModule{111, "BAND_PASS_CFE_FILTER", "band_pass_cfe", K::kPreprocessing, "cfe_filter", "", false},
    MarfModule{112, "BAND_STOP_CFE_FILTER", "band_stop_cfe", K::kPreprocessing, "cfe_filter", "", false},
    MarfModule{113, "BAND_STOP_FFT_FILTER", "band_stop", K::kPreprocessing, "fft_filter", "band_stop", true},
    MarfModule{300, "LPC", "lpc", K::kFeatureExtraction, "extract_lpc", "", true},
    MarfModule{301, "FFT", "fft", K::kFeatureExtraction, "extract_fft", "", true},
    MarfModule{302, "F0", "f0", K::kFeatureExtraction, "extract_f0", "", false},
    MarfModule{303, "SEGMENTATION", "segmentation", K::kFeatureExtraction, "extract_segmentation", "", false},
    MarfModule{304, "CEPSTRAL", "cepstral", K::kFeatureExtraction, "extract_cepstral", "", false},
    MarfModule{305, "RANDOM_FEATURE_EXTRACTION", "random_feature_extraction", K::kFeatureExtraction, "extract_random", "", false},
    MarfModule{306, "MIN_MAX_AMPLITUDES", "minmax", K::kFeatureExtraction, "extract_minmax", "", true},
    MarfModule{307, "FEATURE_EXTRACTION_PLUGIN", "feature_extraction_plugin", K::kFeatureExtraction, "extract_plugin", "", false},
    MarfModule{308, "FEATURE_EXTRACTION_AGGREGATOR", "feature_extraction_aggregator", K::kFeatureExtraction, "extract_aggregate", "", false},
    MarfModule{500, "NEURAL_NETWORK", "neural_network", K::kClassification, "neural_network", "", true},
    MarfModule{501, "STOCHASTIC", "stochastic", K::kClassification, "stochastic", "", false},
    MarfModule{502, "MARKOV", "markov", K::kClassification, "markov", "", false},
    MarfModule{503, "EUCLIDEAN_DISTANCE", "euclidean", K::kClassification, "euclidean", "", true},
    MarfModule{504, "CHEBYSHEV_DISTANCE", "chebyshev", K::kClassification, "chebyshev", "", true},
    MarfModule{504, "MANHATTAN_DISTANCE", "manhattan", K::kClassification, "chebyshev", "", true},
    MarfModule{504, "CITYBLOCK_DISTANCE", "cityblock", K::kClassification, "chebyshev", "", true},
    MarfModule{505, "MINKOWSKI_DISTANCE", "minkowski", K::kClassification, "minkowski", "", true},
    MarfModule{506, "MAHALANOBIS_DISTANCE", "mahalanobis", K::kClassification, "mahalanobis", "", true},
    MarfModule{507, "RANDOM_CLASSIFICATION", "random_classification", K::kClassification, "random", "", false},
    MarfModule{508, "DIFF_DISTANCE", "diff", K::kClassification, "diff", "", true},
    MarfModule{509, "CLASSIFICATION_PLUGIN", "classification_plugin", K::kClassification, "plugin", "", false},
    MarfModule{510, "ZIPFS_LAW", "zipfs_law", K::kClassification, "zipfs_law", "", false},
    MarfModule{511, "HAMMING_DISTANCE", "hamming", K::kClassification, "hamming", "", true},
    MarfModule{512, "COSINE_SIMILARITY_MEASURE", "cosine", K::kClassification, "cosine", "", true},
};

}  // namespace

std::string_view ToString(ModuleKind k) {
  switch (k) {
    case ModuleKind::kPreprocessing: return "preprocessing";
    case ModuleKind::kFeatureExtraction: return "feature extraction";
    case ModuleKind::kClassification: return "classification";
  }
  return "?";
}

std::span<const MarfModule> MarfModules() { return kModules; }

const MarfModule& FindMarfModule(ModuleKind kind, std::string_view name_or_id) {
  std::string key = boost::algorithm::trim_copy(std::string(name_or_id));
  std::string lower = boost::algorithm::to_lower_copy(key);
  for (const auto& m : kModules) {
    if (m.kind != kind) continue;
    if (key == std::to_string(m.id) || lower == boost::algorithm::to_lower_copy(std::string(m.constant)) ||
        lower == m.alias) {
      return m;
    }
  }
  Fail(ErrorCode::kUnsupportedMethod,
       "unknown " + std::string(ToString(kind)) + " method '" + std::string(name_or_id) + "'");
}

}  // namespace edupipe
