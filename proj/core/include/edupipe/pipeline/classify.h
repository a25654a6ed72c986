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

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "edupipe/pipeline/distance.h"
#include "edupipe/pipeline/features.h"

namespace edupipe {

using SubjectId = std::uint32_t;

struct TrainingEntry {
  FeatureVector mean;
  std::uint64_t count = 0;

  bool operator==(const TrainingEntry&) const = default;
};

// Per-subject running means of feature vectors from one extractor.
class TrainingSet {
 public:
  TrainingSet() = default;
  explicit TrainingSet(std::string extractor_tag) : extractor_tag_(std::move(extractor_tag)) {}

  // mean' = mean + (fv - mean) / (count + 1). The first vector trained
  // fixes the length for every subject; throws kDimensionMismatch after.
  void Train(SubjectId subject, const FeatureVector& fv);

  const std::string& extractor_tag() const { return extractor_tag_; }
  const std::map<SubjectId, TrainingEntry>& entries() const { return entries_; }
  bool empty() const { return entries_.empty(); }
  std::optional<std::size_t> dimension() const;

  // "DTSF", version u8, tag length u32 + tag, entry count u32, per entry
  // subject u32, count u64, L u32, L f64 values; CRC32 trailer. All
  // little-endian.
  Bytes Encode() const;
  // Throws kChecksumMismatch or kMalformedFile.
  static TrainingSet Decode(ByteView bytes);
  // Hex SHA-256 of Encode().
  std::string ContentHash() const;

  bool operator==(const TrainingSet&) const = default;

 private:
  std::string extractor_tag_;
  std::map<SubjectId, TrainingEntry> entries_;
};

TrainingSet Train(TrainingSet ts, SubjectId subject, const FeatureVector& fv);

struct Result {
  SubjectId id = 0;
  double outcome = 0.0;
  std::string description;

  bool operator==(const Result&) const = default;
};

class ResultSet {
 public:
  static constexpr int kUnsorted = -1;
  static constexpr int kAscending = 0;

  void Add(SubjectId id, double outcome, std::string description = {});
  // Ascending by outcome, ties to the lower id.
  void Sort();

  // Throws kTooFewResults when empty (second minimum: fewer than two).
  SubjectId MinimumId() const;
  SubjectId SecondMinimumId() const;
  SubjectId MaximumId() const;
  std::vector<Result> Sorted() const;

  const std::vector<Result>& results() const { return results_; }
  int sort_mode() const { return sort_mode_; }
  std::size_t size() const { return results_.size(); }

  // u32 BE count; per result id u32 BE, outcome f64 LE, length-prefixed
  // description. The sort mode is not carried.
  Bytes Encode() const;
  static ResultSet Decode(ByteView bytes);

  bool operator==(const ResultSet&) const = default;

 private:
  std::vector<Result> results_;
  int sort_mode_ = kUnsorted;
};

// One result per subject, outcome = distance(fv, mean), in subject order.
// Throws kEmptyTrainingSet, kDimensionMismatch.
ResultSet Classify(const TrainingSet& ts, const FeatureVector& fv, Metric metric,
                   const MetricParams& params = {});

}  // namespace edupipe
