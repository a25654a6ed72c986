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

#include "edupipe/demand.h"

#include <bit>
#include <cstdio>
#include <sstream>

namespace edupipe {

std::string_view ToString(DemandType type) {
  switch (type) {
    case DemandType::kIntensional: return "Intensional";
    case DemandType::kProcedural: return "Procedural";
    case DemandType::kResource: return "Resource";
    case DemandType::kSystem: return "System";
  }
  return "?";
}

std::string_view ToString(DemandState state) {
  switch (state) {
    case DemandState::kPending: return "Pending";
    case DemandState::kInProcess: return "InProcess";
    case DemandState::kComputed: return "Computed";
  }
  return "?";
}

DemandType ParseDemandType(std::string_view name) {
  for (auto t : {DemandType::kIntensional, DemandType::kProcedural, DemandType::kResource,
                 DemandType::kSystem}) {
    if (ToString(t) == name) return t;
  }
  Fail(ErrorCode::kMalformedRecord, "unknown demand type '" + std::string(name) + "'");
}

bool IsLegalTransition(DemandState from, DemandState to) {
  using S = DemandState;
  return (from == S::kPending && to == S::kInProcess) ||
         (from == S::kInProcess && to == S::kComputed) ||
         (from == S::kInProcess && to == S::kPending);
}

Signature Signature::FromBytes(ByteView bytes) {
  if (bytes.size() != kSize) {
    Fail(ErrorCode::kMalformedRecord, "signature must be 32 bytes, got " +
                                          std::to_string(bytes.size()));
  }
  std::array<std::uint8_t, kSize> a{};
  std::copy(bytes.begin(), bytes.end(), a.begin());
  return Signature(a);
}

Signature Signature::FromHex(std::string_view hex) { return FromBytes(edupipe::FromHex(hex)); }

bool Signature::IsZero() const {
  for (auto b : bytes_) {
    if (b != 0) return false;
  }
  return true;
}

DemandId DemandId::Random(std::mt19937_64& rng) {
  std::array<std::uint8_t, kSize> b{};
  std::uint64_t hi = rng();
  std::uint64_t lo = rng();
  for (int i = 0; i < 8; ++i) {
    b[i] = static_cast<std::uint8_t>(hi >> (56 - 8 * i));
    b[8 + i] = static_cast<std::uint8_t>(lo >> (56 - 8 * i));
  }
  b[6] = static_cast<std::uint8_t>((b[6] & 0x0F) | 0x40);
  b[8] = static_cast<std::uint8_t>((b[8] & 0x3F) | 0x80);
  return DemandId(b);
}

std::string DemandId::ToString() const {
  std::string hex = ToHex(bytes_);
  return hex.substr(0, 8) + "-" + hex.substr(8, 4) + "-" + hex.substr(12, 4) + "-" +
         hex.substr(16, 4) + "-" + hex.substr(20);
}

DemandIdGenerator::DemandIdGenerator() : rng_(std::random_device{}()) {}

DemandIdGenerator::DemandIdGenerator(std::uint64_t seed) : rng_(seed) {}

DemandId DemandIdGenerator::Next() {
  std::lock_guard<std::mutex> l(mu_);
  return DemandId::Random(rng_);
}

std::string ScalarToString(const Scalar& v) {
  struct Visitor {
    std::string operator()(bool b) const { return b ? "true" : "false"; }
    std::string operator()(std::int64_t i) const { return std::to_string(i); }
    std::string operator()(double d) const {
      char buf[32];
      std::snprintf(buf, sizeof(buf), "%.17g", d);
      return buf;
    }
    std::string operator()(const std::string& s) const { return s; }
  };
  return std::visit(Visitor{}, v);
}

namespace {

Bytes EncodeScalar(const Scalar& v) {
  Bytes out;
  struct Visitor {
    Bytes& out;
    void operator()(bool b) const {
      PutU8(out, 'b');
      PutU8(out, b ? 1 : 0);
    }
    void operator()(std::int64_t i) const {
      PutU8(out, 'i');
      PutU64BE(out, static_cast<std::uint64_t>(i));
    }
    void operator()(double d) const {
      PutU8(out, 'd');
      PutU64BE(out, std::bit_cast<std::uint64_t>(d));
    }
    void operator()(const std::string& s) const {
      PutU8(out, 's');
      PutString(out, s);
    }
  };
  std::visit(Visitor{out}, v);
  return out;
}

Scalar DecodeScalar(ByteView tagged) {
  ByteReader r(tagged);
  std::uint8_t tag = r.U8();
  switch (tag) {
    case 'b': {
      std::uint8_t b = r.U8();
      if (b > 1 || !r.empty()) Fail(ErrorCode::kMalformedRecord, "bad bool scalar");
      return b == 1;
    }
    case 'i': {
      auto v = static_cast<std::int64_t>(r.U64BE());
      if (!r.empty()) Fail(ErrorCode::kMalformedRecord, "bad int scalar");
      return v;
    }
    case 'd': {
      auto v = std::bit_cast<double>(r.U64BE());
      if (!r.empty()) Fail(ErrorCode::kMalformedRecord, "bad double scalar");
      return v;
    }
    case 's': return ToString(r.Take(r.remaining()));
    default: Fail(ErrorCode::kMalformedRecord, "unknown scalar tag");
  }
}

}  // namespace

Bytes EncodeParams(const Params& params) {
  Bytes out;
  for (const auto& [key, value] : params) {
    PutLengthPrefixed(out, key);
    PutLengthPrefixed(out, EncodeScalar(value));
  }
  return out;
}

Params DecodeParams(ByteView encoded) {
  Params params;
  ByteReader r(encoded);
  std::string prev;
  bool first = true;
  while (!r.empty()) {
    std::string key = r.LengthPrefixedString();
    if (!first && !(prev < key)) {
      Fail(ErrorCode::kMalformedRecord, "params not in canonical key order");
    }
    params.emplace(key, DecodeScalar(r.LengthPrefixed()));
    prev = std::move(key);
    first = false;
  }
  return params;
}

Signature ComputeSignature(std::string_view stage, std::string_view operation,
                           const Params& params, ByteView payload) {
  Bytes canonical;
  canonical.reserve(64 + payload.size());
  PutLengthPrefixed(canonical, stage);
  PutLengthPrefixed(canonical, operation);
  PutLengthPrefixed(canonical, EncodeParams(params));
  PutLengthPrefixed(canonical, payload);
  return Signature(Sha256(canonical));
}

Demand Demand::Create(DemandId id, DemandType type, std::string stage, std::string operation,
                      Params params, Bytes payload) {
  if (operation.empty()) Fail(ErrorCode::kBadParameter, "demand operation must be nonempty");
  Demand d;
  d.id_ = id;
  d.type_ = type;
  d.signature_ = ComputeSignature(stage, operation, params, payload);
  d.stage_ = std::move(stage);
  d.operation_ = std::move(operation);
  d.params_ = std::move(params);
  d.payload_ = std::move(payload);
  return d;
}

Demand Demand::Touched() const {
  Demand copy = *this;
  ++copy.access_count_;
  return copy;
}

Demand Transition(const Demand& d, DemandState to, std::string_view tier, TimestampMs now,
                  std::optional<Bytes> result) {
  if (!IsLegalTransition(d.state(), to)) {
    Fail(ErrorCode::kIllegalTransition, std::string(ToString(d.state())) + " -> " +
                                            std::string(ToString(to)) + " for " +
                                            d.signature().Hex());
  }
  if (to == DemandState::kComputed && !result) {
    Fail(ErrorCode::kIllegalTransition, "transition to Computed requires a result");
  }
  Demand next = d;
  next.state_ = to;
  next.result_ = to == DemandState::kComputed ? std::move(result) : std::nullopt;
  // Timestamps stay non-decreasing even if a caller's clock lags a peer's.
  TimestampMs at = now;
  if (!next.timeline_.empty() && at < next.timeline_.back().at) at = next.timeline_.back().at;
  next.timeline_.push_back({std::string(tier), at});
  return next;
}

namespace {
constexpr std::string_view kDemandMagic = "DMND";
}

Bytes EncodeDemand(const Demand& d) {
  Bytes out;
  out.reserve(192 + d.size_bytes());
  PutString(out, kDemandMagic);
  PutU8(out, kDemandWireVersion);
  PutLengthPrefixed(out, ByteView(d.id().bytes()));
  PutLengthPrefixed(out, d.signature().view());
  Bytes type{static_cast<std::uint8_t>(d.type())};
  PutLengthPrefixed(out, type);
  Bytes state{static_cast<std::uint8_t>(d.state())};
  PutLengthPrefixed(out, state);
  PutLengthPrefixed(out, d.stage());
  PutLengthPrefixed(out, d.operation());
  PutLengthPrefixed(out, EncodeParams(d.params()));
  PutLengthPrefixed(out, d.payload());
  Bytes has_result{static_cast<std::uint8_t>(d.result() ? 1 : 0)};
  PutLengthPrefixed(out, has_result);
  PutLengthPrefixed(out, d.result() ? ByteView(*d.result()) : ByteView());
  Bytes count;
  PutU64BE(count, d.access_count());
  PutLengthPrefixed(out, count);
  Bytes timeline;
  for (const auto& e : d.timeline()) {
    PutLengthPrefixed(timeline, e.tier);
    PutU64BE(timeline, static_cast<std::uint64_t>(e.at));
  }
  PutLengthPrefixed(out, timeline);
  PutU32BE(out, Crc32(out));
  return out;
}

Demand DecodeDemand(ByteView wire) {
  if (wire.size() < kDemandMagic.size() + 1 + 4) {
    Fail(ErrorCode::kMalformedRecord, "demand record too short");
  }
  ByteView body = wire.first(wire.size() - 4);
  ByteReader trailer(wire.last(4));
  if (trailer.U32BE() != Crc32(body)) Fail(ErrorCode::kChecksumMismatch, "demand CRC mismatch");

  ByteReader r(body);
  if (ToString(r.Take(4)) != kDemandMagic) Fail(ErrorCode::kMalformedRecord, "bad demand magic");
  if (r.U8() != kDemandWireVersion) Fail(ErrorCode::kMalformedRecord, "unsupported demand version");

  Demand d;
  ByteView id = r.LengthPrefixed();
  if (id.size() != DemandId::kSize) Fail(ErrorCode::kMalformedRecord, "bad demand id length");
  std::array<std::uint8_t, DemandId::kSize> id_bytes{};
  std::copy(id.begin(), id.end(), id_bytes.begin());
  d.id_ = DemandId(id_bytes);
  d.signature_ = Signature::FromBytes(r.LengthPrefixed());

  ByteView type = r.LengthPrefixed();
  if (type.size() != 1 || type[0] > 3) Fail(ErrorCode::kMalformedRecord, "bad demand type");
  d.type_ = static_cast<DemandType>(type[0]);
  ByteView state = r.LengthPrefixed();
  if (state.size() != 1 || state[0] > 2) Fail(ErrorCode::kMalformedRecord, "bad demand state");
  d.state_ = static_cast<DemandState>(state[0]);

  d.stage_ = r.LengthPrefixedString();
  d.operation_ = r.LengthPrefixedString();
  d.params_ = DecodeParams(r.LengthPrefixed());
  ByteView payload = r.LengthPrefixed();
  d.payload_.assign(payload.begin(), payload.end());
  ByteView has_result = r.LengthPrefixed();
  if (has_result.size() != 1 || has_result[0] > 1) {
    Fail(ErrorCode::kMalformedRecord, "bad result flag");
  }
  ByteView result = r.LengthPrefixed();
  if (has_result[0] == 1) {
    d.result_ = Bytes(result.begin(), result.end());
  } else if (!result.empty()) {
    Fail(ErrorCode::kMalformedRecord, "result bytes without result flag");
  }
  ByteReader count(r.LengthPrefixed());
  d.access_count_ = count.U64BE();
  ByteReader timeline(r.LengthPrefixed());
  while (!timeline.empty()) {
    TimelineEntry e;
    e.tier = timeline.LengthPrefixedString();
    e.at = static_cast<TimestampMs>(timeline.U64BE());
    d.timeline_.push_back(std::move(e));
  }
  if (!r.empty()) Fail(ErrorCode::kMalformedRecord, "trailing bytes in demand record");

  if (d.operation_.empty()) Fail(ErrorCode::kMalformedRecord, "empty operation");
  if ((d.state_ == DemandState::kComputed) != d.result_.has_value()) {
    Fail(ErrorCode::kMalformedRecord, "result presence disagrees with state");
  }
  if (ComputeSignature(d.stage_, d.operation_, d.params_, d.payload_) != d.signature_) {
    Fail(ErrorCode::kMalformedRecord, "signature does not match demand content");
  }
  return d;
}

}  // namespace edupipe
