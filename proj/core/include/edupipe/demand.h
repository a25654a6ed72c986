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
#include <compare>
#include <cstdint>
#include <map>
#include <mutex>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "edupipe/common.h"

namespace edupipe {

enum class DemandType : std::uint8_t {
  kIntensional = 0,
  kProcedural = 1,
  // Tier-allocation messages (manager).
  kResource = 2,
  // Node-registration and lifecycle events (manager).
  kSystem = 3,
};

enum class DemandState : std::uint8_t {
  kPending = 0,
  kInProcess = 1,
  kComputed = 2,
};

std::string_view ToString(DemandType type);
std::string_view ToString(DemandState state);
DemandType ParseDemandType(std::string_view name);

// Pending->InProcess, InProcess->Computed, InProcess->Pending.
bool IsLegalTransition(DemandState from, DemandState to);

// 32-byte content hash identifying a demand by what it computes.
class Signature {
 public:
  static constexpr std::size_t kSize = 32;

  Signature() = default;
  explicit Signature(const std::array<std::uint8_t, kSize>& bytes) : bytes_(bytes) {}

  static Signature FromBytes(ByteView bytes);
  static Signature FromHex(std::string_view hex);

  const std::array<std::uint8_t, kSize>& bytes() const { return bytes_; }
  ByteView view() const { return bytes_; }
  std::string Hex() const { return ToHex(bytes_); }
  bool IsZero() const;

  auto operator<=>(const Signature&) const = default;

 private:
  std::array<std::uint8_t, kSize> bytes_{};
};

struct SignatureHash {
  std::size_t operator()(const Signature& s) const noexcept {
    std::size_t h = 0;
    for (int i = 0; i < 8; ++i) h = (h << 8) | s.bytes()[i];
    return h;
  }
};

class DemandId {
 public:
  static constexpr std::size_t kSize = 16;

  DemandId() = default;
  explicit DemandId(const std::array<std::uint8_t, kSize>& bytes) : bytes_(bytes) {}

  // RFC 4122 version-4 layout drawn from `rng`.
  static DemandId Random(std::mt19937_64& rng);

  const std::array<std::uint8_t, kSize>& bytes() const { return bytes_; }
  // 8-4-4-4-12 lowercase hex.
  std::string ToString() const;

  auto operator<=>(const DemandId&) const = default;

 private:
  std::array<std::uint8_t, kSize> bytes_{};
};

// Thread-safe id source. Seeded in simulation mode so runs replay exactly.
class DemandIdGenerator {
 public:
  DemandIdGenerator();  // seeded from std::random_device
  explicit DemandIdGenerator(std::uint64_t seed);

  DemandId Next();

 private:
  std::mutex mu_;
  std::mt19937_64 rng_;
};

using Scalar = std::variant<bool, std::int64_t, double, std::string>;
// Ordered by key so iteration order is the canonical (lexicographic) order.
using Params = std::map<std::string, Scalar, std::less<>>;

std::string ScalarToString(const Scalar& v);

// Canonical parameter encoding: for each key in lexicographic order,
// length-prefixed key then length-prefixed type-tagged value
// ('b' + 1 byte, 'i' + 8-byte BE two's complement, 'd' + 8-byte BE IEEE-754
// bits, 's' + UTF-8 bytes).
Bytes EncodeParams(const Params& params);
Params DecodeParams(ByteView encoded);

// SHA-256 over lp(stage) | lp(operation) | lp(EncodeParams(params)) | lp(payload)
// where lp() is an 8-byte big-endian length followed by the bytes.
Signature ComputeSignature(std::string_view stage, std::string_view operation,
                           const Params& params, ByteView payload);

struct TimelineEntry {
  std::string tier;
  TimestampMs at = 0;

  bool operator==(const TimelineEntry&) const = default;
};

using Timeline = std::vector<TimelineEntry>;

// Immutable unit of work. State changes go through Transition(), which
// returns a new value.
class Demand {
 public:
  // Builds a Pending demand and computes its signature. Throws kBadParameter
  // when `operation` is empty.
  static Demand Create(DemandId id, DemandType type, std::string stage, std::string operation,
                       Params params, Bytes payload);

  const DemandId& id() const { return id_; }
  const Signature& signature() const { return signature_; }
  DemandType type() const { return type_; }
  DemandState state() const { return state_; }
  const std::string& stage() const { return stage_; }
  const std::string& operation() const { return operation_; }
  const Params& params() const { return params_; }
  const Bytes& payload() const { return payload_; }
  const std::optional<Bytes>& result() const { return result_; }
  std::uint64_t access_count() const { return access_count_; }
  const Timeline& timeline() const { return timeline_; }
  std::size_t size_bytes() const { return payload_.size() + (result_ ? result_->size() : 0); }

  // Copy with access_count + 1.
  Demand Touched() const;

  bool operator==(const Demand&) const = default;

 private:
  friend Demand Transition(const Demand&, DemandState, std::string_view, TimestampMs,
                           std::optional<Bytes>);
  friend Demand DecodeDemand(ByteView);

  Demand() = default;

  DemandId id_;
  Signature signature_;
  DemandType type_ = DemandType::kProcedural;
  DemandState state_ = DemandState::kPending;
  std::string stage_;
  std::string operation_;
  Params params_;
  Bytes payload_;
  std::optional<Bytes> result_;
  std::uint64_t access_count_ = 0;
  Timeline timeline_;
};

// The only state-mutating path. `result` is required when `to` is Computed
// and ignored otherwise. Throws kIllegalTransition on forbidden edges.
Demand Transition(const Demand& d, DemandState to, std::string_view tier, TimestampMs now,
                  std::optional<Bytes> result = std::nullopt);

// Wire format: "DMND", version u8, length-prefixed fields (id, signature,
// type, state, stage, operation, params, payload, result-flag, result,
// access count, timeline), CRC32 u32 BE trailer over everything before it.
inline constexpr std::uint8_t kDemandWireVersion = 1;
Bytes EncodeDemand(const Demand& d);
Demand DecodeDemand(ByteView wire);

}  // namespace edupipe
