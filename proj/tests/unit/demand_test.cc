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

#include <gtest/gtest.h>

#include <random>
#include <set>

#include "edupipe/demand.h"

namespace edupipe {
namespace {

// Independent restatement of the canonical signature input.
Bytes Lp(ByteView b) {
  Bytes out;
  for (int i = 7; i >= 0; --i) out.push_back(static_cast<std::uint8_t>((b.size() >> (8 * i)) & 0xff));
  out.insert(out.end(), b.begin(), b.end());
  return out;
}

TEST(SignatureTest, GoldenFftDemand) {
  Bytes payload{0x00};
  Signature s = ComputeSignature("FE", "fft", {}, payload);
  EXPECT_EQ(s.Hex(), "a5e43de05f5cdbd286a0f48c19ff3991fd3559dcda8f0883fcfb1b3eace02cc9");
}

TEST(SignatureTest, GoldenNormalizeWithParams) {
  Params p{{"a", std::int64_t{1}}, {"b", std::int64_t{2}}};
  Signature s = ComputeSignature("P", "normalize", p, {});
  EXPECT_EQ(s.Hex(), "1656e155345f9c4394dbc6ff0ccab331dc340dd4f00b6f3265a8f631d2498197");
}

TEST(SignatureTest, MatchesHandBuiltPreimage) {
  Params p{{"k", std::string("v")}};
  Bytes payload = ToBytes("xyz");
  Bytes pre;
  for (const Bytes& part : {Lp(AsBytes("SL")), Lp(AsBytes("load_raw")), Lp(EncodeParams(p)), Lp(payload)}) {
    pre.insert(pre.end(), part.begin(), part.end());
  }
  EXPECT_EQ(ComputeSignature("SL", "load_raw", p, payload).bytes(), Sha256(pre));
}

TEST(SignatureTest, ParamEncodingIsKeyOrdered) {
  // 'i' tag, 8-byte big-endian value, after an 8-byte length prefix.
  Params p{{"b", std::int64_t{2}}, {"a", std::int64_t{1}}};
  Bytes enc = EncodeParams(p);
  ByteReader r(enc);
  EXPECT_EQ(r.LengthPrefixedString(), "a");
  ByteView v = r.LengthPrefixed();
  ASSERT_EQ(v.size(), 9u);
  EXPECT_EQ(v[0], 'i');
  EXPECT_EQ(v[8], 1);
  EXPECT_EQ(r.LengthPrefixedString(), "b");
  EXPECT_EQ(DecodeParams(enc), p);
}

TEST(SignatureTest, ParamTypesRoundTrip) {
  Params p{{"flag", true}, {"n", std::int64_t{-5}}, {"x", 0.25}, {"s", std::string("hi")}};
  EXPECT_EQ(DecodeParams(EncodeParams(p)), p);
}

TEST(SignatureTest, IntAndRealParamsDiffer) {
  EXPECT_NE(ComputeSignature("P", "op", {{"a", std::int64_t{1}}}, {}),
            ComputeSignature("P", "op", {{"a", 1.0}}, {}));
}

TEST(SignatureTest, NoCollisionsOverRandomDemands) {
  std::mt19937_64 rng(99);
  std::set<Signature> seen;
  std::set<std::string> inputs;
  const char* stages[] = {"SL", "P", "FE", "TC"};
  const char* ops[] = {"load_wav", "normalize", "extract_fft", "classify", "train"};
  for (int i = 0; i < 100000; ++i) {
    std::string stage = stages[rng() % 4];
    std::string op = ops[rng() % 5];
    Params p{{"k", static_cast<std::int64_t>(rng() % 1000)}};
    Bytes payload(rng() % 4);
    for (auto& b : payload) b = static_cast<std::uint8_t>(rng());
    std::string key = stage + "|" + op + "|" + ScalarToString(p["k"]) + "|" + ToHex(payload);
    bool fresh_input = inputs.insert(key).second;
    bool fresh_sig = seen.insert(ComputeSignature(stage, op, p, payload)).second;
    ASSERT_EQ(fresh_input, fresh_sig) << key;
  }
}

TEST(DemandTest, CreateComputesSignature) {
  DemandIdGenerator ids(1);
  Demand d = Demand::Create(ids.Next(), DemandType::kProcedural, "FE", "fft", {}, Bytes{0x00});
  EXPECT_EQ(d.state(), DemandState::kPending);
  EXPECT_EQ(d.signature(), ComputeSignature("FE", "fft", {}, Bytes{0x00}));
}

TEST(DemandTest, EmptyOperationRejected) {
  DemandIdGenerator ids(1);
  try {
    Demand::Create(ids.Next(), DemandType::kProcedural, "FE", "", {}, {});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kBadParameter);
  }
}

TEST(DemandTest, LegalTransitions) {
  EXPECT_TRUE(IsLegalTransition(DemandState::kPending, DemandState::kInProcess));
  EXPECT_TRUE(IsLegalTransition(DemandState::kInProcess, DemandState::kComputed));
  EXPECT_TRUE(IsLegalTransition(DemandState::kInProcess, DemandState::kPending));
  EXPECT_FALSE(IsLegalTransition(DemandState::kPending, DemandState::kComputed));
  EXPECT_FALSE(IsLegalTransition(DemandState::kComputed, DemandState::kPending));
  EXPECT_FALSE(IsLegalTransition(DemandState::kComputed, DemandState::kInProcess));
}

TEST(DemandTest, TransitionAppendsTimelineAndKeepsOriginal) {
  DemandIdGenerator ids(2);
  Demand d = Demand::Create(ids.Next(), DemandType::kProcedural, "P", "normalize", {}, {});
  Demand claimed = Transition(d, DemandState::kInProcess, "node-0/DWT/1", 10);
  Demand done = Transition(claimed, DemandState::kComputed, "node-0/DWT/1", 20, Bytes{1, 2});
  EXPECT_EQ(d.state(), DemandState::kPending);
  EXPECT_EQ(done.state(), DemandState::kComputed);
  ASSERT_TRUE(done.result());
  EXPECT_EQ(*done.result(), (Bytes{1, 2}));
  ASSERT_EQ(done.timeline().size(), 2u);
  EXPECT_EQ(done.timeline()[1].at, 20);
  EXPECT_THROW(Transition(d, DemandState::kComputed, "t", 0, Bytes{}), Error);
}

TEST(DemandTest, WireRoundTrip) {
  DemandIdGenerator ids(3);
  Demand d = Demand::Create(ids.Next(), DemandType::kIntensional, "TC", "classify",
                            {{"metric", std::string("euclidean")}}, ToBytes("payload"));
  d = Transition(d, DemandState::kInProcess, "n/DWT/0", 5).Touched();
  Bytes wire = EncodeDemand(d);
  EXPECT_EQ(ToString(ByteView(wire).first(4)), "DMND");
  EXPECT_EQ(DecodeDemand(wire), d);
}

TEST(DemandTest, CorruptWireDetected) {
  DemandIdGenerator ids(4);
  Bytes wire = EncodeDemand(Demand::Create(ids.Next(), DemandType::kProcedural, "SL", "load_raw", {}, {}));
  wire[10] ^= 0x40;
  try {
    DecodeDemand(wire);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kChecksumMismatch);
  }
}

TEST(DemandIdTest, SeededAndVersion4) {
  DemandIdGenerator a(7), b(7);
  DemandId x = a.Next();
  EXPECT_EQ(x, b.Next());
  std::string s = x.ToString();
  ASSERT_EQ(s.size(), 36u);
  EXPECT_EQ(s[14], '4');
  EXPECT_NE(a.Next(), x);
}

}  // namespace
}  // namespace edupipe
