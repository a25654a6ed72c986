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

#include "edupipe/common.h"

#include <openssl/evp.h>
#include <zlib.h>

#include <bit>
#include <cstring>
#include <limits>

namespace edupipe {

std::string_view ErrorCodeName(ErrorCode code) {
  switch (code) {
    case ErrorCode::kIllegalTransition: return "IllegalTransition";
    case ErrorCode::kMalformedRecord: return "MalformedRecord";
    case ErrorCode::kChecksumMismatch: return "ChecksumMismatch";
    case ErrorCode::kBadConfig: return "BadConfig";
    case ErrorCode::kTierFactoryFailure: return "TierFactoryFailure";
    case ErrorCode::kUnknownTier: return "UnknownTier";
    case ErrorCode::kStoreUnreachable: return "StoreUnreachable";
    case ErrorCode::kTimeout: return "Timeout";
    case ErrorCode::kExecutorFailure: return "ExecutorFailure";
    case ErrorCode::kDuplicateHost: return "DuplicateHost";
    case ErrorCode::kUnknownNode: return "UnknownNode";
    case ErrorCode::kNodeDown: return "NodeDown";
    case ErrorCode::kNoCandidateNode: return "NoCandidateNode";
    case ErrorCode::kIoFailure: return "IoFailure";
    case ErrorCode::kCapacityExhausted: return "CapacityExhausted";
    case ErrorCode::kTransportFailure: return "TransportFailure";
    case ErrorCode::kUnsupportedFormat: return "UnsupportedFormat";
    case ErrorCode::kUnsupportedMethod: return "UnsupportedMethod";
    case ErrorCode::kMalformedFile: return "MalformedFile";
    case ErrorCode::kAllZeroRange: return "AllZeroRange";
    case ErrorCode::kEmptyAfterSilence: return "EmptyAfterSilence";
    case ErrorCode::kBadCutoff: return "BadCutoff";
    case ErrorCode::kBadParameter: return "BadParameter";
    case ErrorCode::kEmptySample: return "EmptySample";
    case ErrorCode::kSingularAutocorrelation: return "SingularAutocorrelation";
    case ErrorCode::kTooShort: return "TooShort";
    case ErrorCode::kDimensionMismatch: return "DimensionMismatch";
    case ErrorCode::kZeroVector: return "ZeroVector";
    case ErrorCode::kEmptyTrainingSet: return "EmptyTrainingSet";
    case ErrorCode::kTooFewResults: return "TooFewResults";
    case ErrorCode::kInvalidSpec: return "InvalidSpec";
    case ErrorCode::kStallDetected: return "StallDetected";
    case ErrorCode::kPartialReport: return "PartialReport";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(ErrorCodeName(code)) + ": " + message),
      code_(code) {}

void Fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

void PutU8(Bytes& out, std::uint8_t v) { out.push_back(v); }

void PutU32BE(Bytes& out, std::uint32_t v) {
  for (int shift = 24; shift >= 0; shift -= 8) {
    out.push_back(static_cast<std::uint8_t>(v >> shift));
  }
}

void PutU64BE(Bytes& out, std::uint64_t v) {
  for (int shift = 56; shift >= 0; shift -= 8) {
    out.push_back(static_cast<std::uint8_t>(v >> shift));
  }
}

void PutU32LE(Bytes& out, std::uint32_t v) {
  for (int shift = 0; shift < 32; shift += 8) {
    out.push_back(static_cast<std::uint8_t>(v >> shift));
  }
}

void PutU64LE(Bytes& out, std::uint64_t v) {
  for (int shift = 0; shift < 64; shift += 8) {
    out.push_back(static_cast<std::uint8_t>(v >> shift));
  }
}

void PutF64LE(Bytes& out, double v) { PutU64LE(out, std::bit_cast<std::uint64_t>(v)); }

void PutBytes(Bytes& out, ByteView bytes) { out.insert(out.end(), bytes.begin(), bytes.end()); }

void PutString(Bytes& out, std::string_view s) { PutBytes(out, AsBytes(s)); }

void PutLengthPrefixed(Bytes& out, ByteView bytes) {
  PutU64BE(out, bytes.size());
  PutBytes(out, bytes);
}

void PutLengthPrefixed(Bytes& out, std::string_view s) { PutLengthPrefixed(out, AsBytes(s)); }

void ByteReader::Need(std::size_t n) const {
  if (n > remaining()) {
    Fail(ErrorCode::kMalformedRecord, "record truncated: need " + std::to_string(n) +
                                          " bytes, have " + std::to_string(remaining()));
  }
}

std::uint8_t ByteReader::U8() {
  Need(1);
  return data_[pos_++];
}

std::uint32_t ByteReader::U32BE() {
  Need(4);
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v = (v << 8) | data_[pos_++];
  return v;
}

std::uint64_t ByteReader::U64BE() {
  Need(8);
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v = (v << 8) | data_[pos_++];
  return v;
}

std::uint32_t ByteReader::U32LE() {
  Need(4);
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(data_[pos_++]) << (8 * i);
  return v;
}

std::uint64_t ByteReader::U64LE() {
  Need(8);
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(data_[pos_++]) << (8 * i);
  return v;
}

double ByteReader::F64LE() { return std::bit_cast<double>(U64LE()); }

ByteView ByteReader::Take(std::size_t n) {
  Need(n);
  ByteView v = data_.subspan(pos_, n);
  pos_ += n;
  return v;
}

Bytes ByteReader::TakeBytes(std::size_t n) {
  ByteView v = Take(n);
  return Bytes(v.begin(), v.end());
}

ByteView ByteReader::LengthPrefixed() {
  std::uint64_t n = U64BE();
  if (n > remaining()) {
    Fail(ErrorCode::kMalformedRecord, "length prefix " + std::to_string(n) + " exceeds record");
  }
  return Take(static_cast<std::size_t>(n));
}

std::string ByteReader::LengthPrefixedString() { return ToString(LengthPrefixed()); }

Sha256Digest Sha256(ByteView data) {
  Sha256Digest out{};
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), out.data(), &len, EVP_sha256(), nullptr) != 1 ||
      len != out.size()) {
    throw std::runtime_error("EVP_Digest(sha256) failed");
  }
  return out;
}

std::uint32_t Crc32(ByteView data) {
  uLong crc = crc32(0L, Z_NULL, 0);
  // zlib takes uInt lengths; feed in chunks for very large buffers.
  std::size_t off = 0;
  while (off < data.size()) {
    std::size_t n = std::min<std::size_t>(data.size() - off, std::numeric_limits<uInt>::max());
    crc = crc32(crc, data.data() + off, static_cast<uInt>(n));
    off += n;
  }
  return static_cast<std::uint32_t>(crc);
}

std::string ToHex(ByteView bytes) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string out;
  out.reserve(bytes.size() * 2);
  for (std::uint8_t b : bytes) {
    out.push_back(kDigits[b >> 4]);
    out.push_back(kDigits[b & 0xF]);
  }
  return out;
}

Bytes FromHex(std::string_view hex) {
  auto nibble = [](char c) -> int {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    return -1;
  };
  if (hex.size() % 2 != 0) Fail(ErrorCode::kMalformedRecord, "odd-length hex string");
  Bytes out;
  out.reserve(hex.size() / 2);
  for (std::size_t i = 0; i < hex.size(); i += 2) {
    int hi = nibble(hex[i]);
    int lo = nibble(hex[i + 1]);
    if (hi < 0 || lo < 0) Fail(ErrorCode::kMalformedRecord, "invalid hex digit");
    out.push_back(static_cast<std::uint8_t>((hi << 4) | lo));
  }
  return out;
}

}  // namespace edupipe
