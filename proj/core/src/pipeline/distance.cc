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

#include "edupipe/pipeline/distance.h"

#include <algorithm>
#include <cmath>

#include <Eigen/Dense>
#include <boost/algorithm/string.hpp>

namespace edupipe {

std::string_view ToString(Metric m) {
  switch (m) {
    case Metric::kEuclidean: return "euclidean";
    case Metric::kChebyshev: return "chebyshev";
    case Metric::kMinkowski: return "minkowski";
    case Metric::kMahalanobis: return "mahalanobis";
    case Metric::kHamming: return "hamming";
    case Metric::kDiff: return "diff";
    case Metric::kCosine: return "cosine";
  }
  return "?";
}

Metric ParseMetric(std::string_view s) {
  std::string lower = boost::algorithm::to_lower_copy(std::string(s));
  for (Metric m : kAllMetrics) {
    if (lower == ToString(m)) return m;
  }
  Fail(ErrorCode::kUnsupportedMethod, "unknown metric '" + std::string(s) + "'");
}

InverseCovariance InvertCovariance(std::span<const double> covariance, std::size_t dim) {
  if (covariance.size() != dim * dim) Fail(ErrorCode::kDimensionMismatch, "covariance is not dim x dim");
  using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  Eigen::Map<const Mat> c(covariance.data(), static_cast<Eigen::Index>(dim),
                          static_cast<Eigen::Index>(dim));
  Eigen::FullPivLU<Mat> lu(c);
  if (!lu.isInvertible()) Fail(ErrorCode::kBadParameter, "covariance matrix is singular");
  Mat inv = lu.inverse();
  InverseCovariance out;
  out.dim = dim;
  out.values.assign(inv.data(), inv.data() + inv.size());
  return out;
}

double Distance(Metric metric, std::span<const double> u, std::span<const double> v,
                const MetricParams& params) {
  if (u.size() != v.size()) {
    Fail(ErrorCode::kDimensionMismatch, "vectors of length " + std::to_string(u.size()) + " and " +
                                            std::to_string(v.size()));
  }
  const std::size_t n = u.size();
  switch (metric) {
    case Metric::kEuclidean: {
      double d = 0.0;
      for (std::size_t i = 0; i < n; ++i) d += (u[i] - v[i]) * (u[i] - v[i]);
      return d;
    }
    case Metric::kChebyshev: {
      double d = 0.0;
      for (std::size_t i = 0; i < n; ++i) d = std::max(d, std::abs(u[i] - v[i]));
      return d;
    }
    case Metric::kMinkowski: {
      double d = 0.0;
      for (std::size_t i = 0; i < n; ++i) d += std::pow(std::abs(u[i] - v[i]), params.minkowski_p);
      return std::pow(d, 1.0 / params.minkowski_p);
    }
    case Metric::kMahalanobis: {
      const auto* inv = params.inverse_covariance.get();
      if (inv == nullptr) {
        double d = 0.0;
        for (std::size_t i = 0; i < n; ++i) d += (u[i] - v[i]) * (u[i] - v[i]);
        return d;
      }
      if (inv->dim != n) Fail(ErrorCode::kDimensionMismatch, "covariance dimension differs from vectors");
      double d = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        double row = 0.0;
        for (std::size_t j = 0; j < n; ++j) row += inv->values[i * n + j] * (u[j] - v[j]);
        d += (u[i] - v[i]) * row;
      }
      return d;
    }
    case Metric::kHamming: {
      double count = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        if (std::abs(u[i] - v[i]) > params.hamming_tau) count += 1.0;
      }
      return count;
    }
    case Metric::kDiff: {
      double d = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        double a = std::abs(u[i] - v[i]);
        if (a > params.diff_tau) d += a;
      }
      return d;
    }
    case Metric::kCosine: {
      double dot = 0.0, nu = 0.0, nv = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        dot += u[i] * v[i];
        nu += u[i] * u[i];
        nv += v[i] * v[i];
      }
      if (nu == 0.0 || nv == 0.0) Fail(ErrorCode::kZeroVector, "cosine distance of a zero vector");
      return 1.0 - dot / (std::sqrt(nu) * std::sqrt(nv));
    }
  }
  Fail(ErrorCode::kUnsupportedMethod, "unknown metric");
}

}  // namespace edupipe
