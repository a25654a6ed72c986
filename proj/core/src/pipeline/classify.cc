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

#include "edupipe/pipeline/classify.h"

#include <algorithm>
#include <cstring>

namespace edupipe {

namespace {

constexpr char kTrainingMagic[] = {'D', 'T', 'S', 'F'};
constexpr std::uint8_t kTrainingVersion = 1;

bool OutcomeLess(const Result& a, const Result& b) {
  if (a.outcome != b.outcome) return a.outcome < b.outcome;
  return a.id < b.id;
}

}  // namespace

void TrainingSet::Train(SubjectId subject, const FeatureVector& fv) {
  if (auto dim = dimension(); dim && *dim != fv.size()) {
    Fail(ErrorCode::kDimensionMismatch, "training vector of length " + std::to_string(fv.size()) +
                                            " for a set of length " + std::to_string(*dim));
  }
  auto& e = entries_[subject];
  if (e.count == 0) {
    e.mean = fv;
    e.count = 1;
    return;
  }
  const double next = static_cast<double>(e.count + 1);
  for (std::size_t i = 0; i < fv.size(); ++i) e.mean[i] += (fv[i] - e.mean[i]) / next;
  ++e.count;
}

std::optional<std::size_t> TrainingSet::dimension() const {
  if (entries_.empty()) return std::nullopt;
  return entries_.begin()->second.mean.size();
}

Bytes TrainingSet::Encode() const {
  Bytes out(kTrainingMagic, kTrainingMagic + 4);
  PutU8(out, kTrainingVersion);
  PutU32LE(out, static_cast<std::uint32_t>(extractor_tag_.size()));
  PutString(out, extractor_tag_);
  PutU32LE(out, static_cast<std::uint32_t>(entries_.size()));
  for (const auto& [subject, e] : entries_) {
    PutU32LE(out, subject);
    PutU64LE(out, e.count);
    PutU32LE(out, static_cast<std::uint32_t>(e.mean.size()));
    for (double v : e.mean) PutF64LE(out, v);
  }
  PutU32LE(out, Crc32(out));
  return out;
}

TrainingSet TrainingSet::Decode(ByteView bytes) {
  if (bytes.size() < 9) Fail(ErrorCode::kMalformedFile, "training set file too short");
  ByteView body = bytes.first(bytes.size() - 4);
  ByteReader tail(bytes.last(4));
  if (Crc32(body) != tail.U32LE()) Fail(ErrorCode::kChecksumMismatch, "training set crc mismatch");
  try {
    ByteReader r(body);
    ByteView magic = r.Take(4);
    if (std::memcmp(magic.data(), kTrainingMagic, 4) != 0) {
      Fail(ErrorCode::kMalformedFile, "not a training set file");
    }
    if (r.U8() != kTrainingVersion) Fail(ErrorCode::kMalformedFile, "unsupported training set version");
    TrainingSet ts(ToString(r.Take(r.U32LE())));
    std::uint32_t n = r.U32LE();
    std::optional<std::size_t> dim;
    for (std::uint32_t i = 0; i < n; ++i) {
      SubjectId subject = r.U32LE();
      TrainingEntry e;
      e.count = r.U64LE();
      std::uint32_t len = r.U32LE();
      if (dim && *dim != len) Fail(ErrorCode::kMalformedFile, "training entries differ in length");
      dim = len;
      if (len > r.remaining() / 8) Fail(ErrorCode::kMalformedFile, "training entry overruns file");
      e.mean.resize(len);
      for (auto& v : e.mean) v = r.F64LE();
      if (e.count == 0) Fail(ErrorCode::kMalformedFile, "training entry with zero count");
      if (!ts.entries_.emplace(subject, std::move(e)).second) {
        Fail(ErrorCode::kMalformedFile, "duplicate subject in training set");
      }
    }
    if (!r.empty()) Fail(ErrorCode::kMalformedFile, "trailing bytes in training set");
    return ts;
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kMalformedRecord) Fail(ErrorCode::kMalformedFile, e.what());
    throw;
  }
}

std::string TrainingSet::ContentHash() const {
  auto d = Sha256(Encode());
  return ToHex(d);
}

TrainingSet Train(TrainingSet ts, SubjectId subject, const FeatureVector& fv) {
  ts.Train(subject, fv);
  return ts;
}

void ResultSet::Add(SubjectId id, double outcome, std::string description) {
  results_.push_back({id, outcome, std::move(description)});
  sort_mode_ = kUnsorted;
}

void ResultSet::Sort() {
  std::stable_sort(results_.begin(), results_.end(), OutcomeLess);
  sort_mode_ = kAscending;
}

SubjectId ResultSet::MinimumId() const {
  if (results_.empty()) Fail(ErrorCode::kTooFewResults, "empty result set");
  return std::min_element(results_.begin(), results_.end(), OutcomeLess)->id;
}

SubjectId ResultSet::SecondMinimumId() const {
  if (results_.size() < 2) Fail(ErrorCode::kTooFewResults, "second minimum needs two results");
  return Sorted()[1].id;
}

SubjectId ResultSet::MaximumId() const {
  if (results_.empty()) Fail(ErrorCode::kTooFewResults, "empty result set");
  // Largest outcome; ties still go to the lower id.
  return std::max_element(results_.begin(), results_.end(), [](const Result& a, const Result& b) {
           if (a.outcome != b.outcome) return a.outcome < b.outcome;
           return a.id > b.id;
         })->id;
}

std::vector<Result> ResultSet::Sorted() const {
  std::vector<Result> out = results_;
  std::stable_sort(out.begin(), out.end(), OutcomeLess);
  return out;
}

Bytes ResultSet::Encode() const {
  Bytes out;
  PutU32BE(out, static_cast<std::uint32_t>(results_.size()));
  for (const auto& r : results_) {
    PutU32BE(out, r.id);
    PutF64LE(out, r.outcome);
    PutLengthPrefixed(out, r.description);
  }
  return out;
}

ResultSet ResultSet::Decode(ByteView bytes) {
  ByteReader r(bytes);
  ResultSet rs;
  std::uint32_t n = r.U32BE();
  for (std::uint32_t i = 0; i < n; ++i) {
    SubjectId id = r.U32BE();
    double outcome = r.F64LE();
    rs.results_.push_back({id, outcome, r.LengthPrefixedString()});
  }
  if (!r.empty()) Fail(ErrorCode::kMalformedRecord, "trailing bytes after result set");
  return rs;
}

ResultSet Classify(const TrainingSet& ts, const FeatureVector& fv, Metric metric,
                   const MetricParams& params) {
  if (ts.empty()) Fail(ErrorCode::kEmptyTrainingSet, "classification needs a trained subject");
  ResultSet rs;
  for (const auto& [subject, e] : ts.entries()) {
    rs.Add(subject, Distance(metric, fv, e.mean, params));
  }
  return rs;
}

}  // namespace edupipe
