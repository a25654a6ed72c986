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

#include <memory>
#include <span>
#include <string_view>
#include <vector>

#include "edupipe/common.h"

namespace edupipe {

enum class Metric { kEuclidean, kChebyshev, kMinkowski, kMahalanobis, kHamming, kDiff, kCosine };

inline constexpr Metric kAllMetrics[] = {Metric::kEuclidean, Metric::kChebyshev,
                                         Metric::kMinkowski, Metric::kMahalanobis,
                                         Metric::kHamming,   Metric::kDiff,
                                         Metric::kCosine};

std::string_view ToString(Metric m);
Metric ParseMetric(std::string_view s);

// Row-major inverse covariance for Mahalanobis.
struct InverseCovariance {
  std::size_t dim = 0;
  std::vector<double> values;
};

// Throws kBadParameter if `covariance` (row-major dim x dim) is singular.
InverseCovariance InvertCovariance(std::span<const double> covariance, std::size_t dim);

struct MetricParams {
  double minkowski_p = 3.0;
  double hamming_tau = 0.0;
  // Diff sums |u_i - v_i| over components above this; a placeholder rule.
  double diff_tau = 0.0;
  // Identity when null.
  std::shared_ptr<const InverseCovariance> inverse_covariance;
};

// Euclidean is the squared sum without a root. Throws kDimensionMismatch,
// and kZeroVector for cosine against a zero vector.
double Distance(Metric metric, std::span<const double> u, std::span<const double> v,
                const MetricParams& params = {});

}  // namespace edupipe
