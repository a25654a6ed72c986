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

#include <array>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace edupipe {

using Bytes = std::vector<std::uint8_t>;
using ByteView = std::span<const std::uint8_t>;

// Milliseconds since the run epoch (wall or virtual).
using TimestampMs = std::int64_t;
using DurationMs = std::int64_t;

enum class ErrorCode {
  kIllegalTransition,
  kMalformedRecord,
  kChecksumMismatch,
  kBadConfig,
  kTierFactoryFailure,
  kUnknownTier,
  kStoreUnreachable,
  kTimeout,
  kExecutorFailure,
  kDuplicateHost,
  kUnknownNode,
  kNodeDown,
  kNoCandidateNode,
  kIoFailure,
  kCapacityExhausted,
  kTransportFailure,
  kUnsupportedFormat,
  kUnsupportedMethod,
  kMalformedFile,
  kAllZeroRange,
  kEmptyAfterSilence,
  kBadCutoff,
  kBadParameter,
  kEmptySample,
  kSingularAutocorrelation,
  kTooShort,
  kDimensionMismatch,
  kZeroVector,
  kEmptyTrainingSet,
  kTooFewResults,
  kInvalidSpec,
  kStallDetected,
  kPartialReport,
};

std::string_view ErrorCodeName(ErrorCode code);

// Single exception type for every failure the library reports; callers
// dispatch on code().
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] void Fail(ErrorCode code, const std::string& message);

// Byte-order helpers. All multi-byte integers in the demand, frame and WAL
// formats are big-endian; the training-set file is little-endian.
void PutU8(Bytes& out, std::uint8_t v);
void PutU32BE(Bytes& out, std::uint32_t v);
void PutU64BE(Bytes& out, std::uint64_t v);
void PutU32LE(Bytes& out, std::uint32_t v);
void PutU64LE(Bytes& out, std::uint64_t v);
void PutF64LE(Bytes& out, double v);
void PutBytes(Bytes& out, ByteView bytes);
void PutString(Bytes& out, std::string_view s);
// 8-byte big-endian length followed by the bytes.
void PutLengthPrefixed(Bytes& out, ByteView bytes);
void PutLengthPrefixed(Bytes& out, std::string_view s);

// Bounds-checked sequential reader; throws kMalformedRecord on underrun.
class ByteReader {
 public:
  explicit ByteReader(ByteView data) : data_(data) {}

  std::uint8_t U8();
  std::uint32_t U32BE();
  std::uint64_t U64BE();
  std::uint32_t U32LE();
  std::uint64_t U64LE();
  double F64LE();
  ByteView Take(std::size_t n);
  Bytes TakeBytes(std::size_t n);
  // Reads an 8-byte big-endian length and that many bytes.
  ByteView LengthPrefixed();
  std::string LengthPrefixedString();

  std::size_t position() const { return pos_; }
  std::size_t remaining() const { return data_.size() - pos_; }
  bool empty() const { return remaining() == 0; }

 private:
  void Need(std::size_t n) const;

  ByteView data_;
  std::size_t pos_ = 0;
};

using Sha256Digest = std::array<std::uint8_t, 32>;

Sha256Digest Sha256(ByteView data);
std::uint32_t Crc32(ByteView data);

std::string ToHex(ByteView bytes);
Bytes FromHex(std::string_view hex);

inline ByteView AsBytes(std::string_view s) {
  return {reinterpret_cast<const std::uint8_t*>(s.data()), s.size()};
}
inline Bytes ToBytes(std::string_view s) {
  auto v = AsBytes(s);
  return Bytes(v.begin(), v.end());
}
inline std::string ToString(ByteView b) {
  return std::string(reinterpret_cast<const char*>(b.data()), b.size());
}

}  // namespace edupipe
