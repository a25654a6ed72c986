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

#include "edupipe/broadcast.h"
#include "edupipe/protocol.h"
#include "edupipe/resilience.h"

namespace edupipe {
namespace {

TEST(FrameTest, LengthPrefix) {
  Bytes body = ToBytes("abc");
  Bytes frame = EncodeFrame(body);
  EXPECT_EQ(frame, (Bytes{0, 0, 0, 3, 'a', 'b', 'c'}));
  EXPECT_EQ(DecodeFrame(frame), body);
  frame.push_back(0);
  EXPECT_THROW(DecodeFrame(frame), Error);
}

class FramedClientTest : public ::testing::Test {
 protected:
  DemandStore store_;
  StoreService service_{&store_};
  std::shared_ptr<InMemoryTransport> transport_ = std::make_shared<InMemoryTransport>(&service_);
  FramedStoreClient client_{transport_};
  DemandIdGenerator ids_{3};
};

TEST_F(FramedClientTest, FullCycleOverFrames) {
  Demand d = Demand::Create(ids_.Next(), DemandType::kProcedural, "FE", "extract_fft",
                            {{"length", std::int64_t{128}}}, Bytes{1, 2, 3});
  EXPECT_EQ(client_.PutDemand(d).status, PutStatus::kEnqueued);
  auto claimed = client_.ClaimPending("w", {"extract_fft"}, 7);
  ASSERT_TRUE(claimed);
  EXPECT_EQ(claimed->signature(), d.signature());
  EXPECT_EQ(claimed->payload(), d.payload());
  EXPECT_EQ(client_.Locate(d.signature()), SignatureLocation::kInProcess);
  EXPECT_EQ(client_.LiveClaimsHeldBy("w", 8, 100), 1u);
  EXPECT_EQ(client_.StoreResult(d.signature(), Bytes{9}, "w", 8), StoreStatus::kStored);
  EXPECT_EQ(client_.Lookup(d.signature()), (Bytes{9}));
  EXPECT_EQ(client_.PeerQuery(d.signature()), (Bytes{9}));
  EXPECT_EQ(client_.Stats(), store_.Stats());
}

TEST_F(FramedClientTest, ErrorsCrossTheWire) {
  try {
    client_.RequeueExpired(0, 0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kBadParameter);
  }
}

TEST_F(FramedClientTest, DownTransportIsUnreachable) {
  transport_->SetDown(true);
  try {
    client_.Stats();
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kStoreUnreachable);
  }
}

TEST_F(FramedClientTest, MalformedRequestGetsErrorReply) {
  Bytes reply = service_.Handle(Bytes{0x7f});
  ASSERT_FALSE(reply.empty());
  EXPECT_EQ(reply[0], static_cast<std::uint8_t>(ReplyStatus::kError));
}

TEST(TcpTest, RoundTripOverLoopback) {
  DemandStore store;
  StoreService service(&store);
  TcpFrameServer server(&service, "127.0.0.1", 0);
  ASSERT_NE(server.port(), 0);
  FramedStoreClient client(std::make_shared<TcpTransport>("127.0.0.1", server.port()));
  DemandIdGenerator ids(1);
  Demand d = Demand::Create(ids.Next(), DemandType::kProcedural, "SL", "load_raw", {}, Bytes{1});
  EXPECT_EQ(client.PutDemand(d).status, PutStatus::kEnqueued);
  EXPECT_EQ(store.pending_size(), 1u);
  server.Stop();
}

TEST(TcpTest, AddressParsing) {
  EXPECT_EQ(ParseStoreAddress("tcp://10.0.0.1:7000"), std::make_pair(std::string("10.0.0.1"), std::uint16_t{7000}));
  EXPECT_EQ(ParseStoreAddress("localhost:1"), std::make_pair(std::string("localhost"), std::uint16_t{1}));
  EXPECT_THROW(ParseStoreAddress("nope"), Error);
}

TEST(WalShippingTest, PushOverFrames) {
  auto primary = std::make_shared<Wal>(std::make_shared<MemoryStorage>());
  primary->Append(ComputeSignature("P", "a", {}, {}), std::nullopt, Bytes{1});
  primary->Append(ComputeSignature("P", "b", {}, {}), std::nullopt, Bytes{2});

  DemandStore replica_store("replica");
  ReplicaHost replica(std::make_shared<Wal>(std::make_shared<MemoryStorage>()), &replica_store);
  StoreService service(&replica_store);
  service.SetWalHandler(&replica);
  FramedStoreClient client(std::make_shared<InMemoryTransport>(&service));
  RemoteWalEndpoint remote(&client);
  EXPECT_EQ(ShipWal(*primary, remote), 2u);
  EXPECT_EQ(replica_store.warehouse_size(), 2u);
  EXPECT_EQ(ShipWal(*primary, remote), 0u);
}

class FixedPeer : public ResultPeer {
 public:
  explicit FixedPeer(std::optional<Bytes> answer, bool throws = false)
      : answer_(std::move(answer)), throws_(throws) {}
  std::optional<Bytes> QueryResult(const Signature&) override {
    ++asked;
    if (throws_) throw Error(ErrorCode::kTransportFailure, "down");
    return answer_;
  }
  int asked = 0;

 private:
  std::optional<Bytes> answer_;
  bool throws_;
};

TEST(BroadcastTest, AdoptsFirstAnswer) {
  FixedPeer silent(std::nullopt), broken(std::nullopt, true), holder(Bytes{4});
  std::vector<ResultPeer*> peers{&silent, &broken, &holder};
  VirtualClock clock;
  auto out = BroadcastBeforeCompute(Signature{}, peers, clock, 100);
  ASSERT_TRUE(std::holds_alternative<Adopted>(out));
  EXPECT_EQ(std::get<Adopted>(out).result, (Bytes{4}));
  EXPECT_EQ(broken.asked, 1);
}

TEST(BroadcastTest, NoAnswerComputesLocally) {
  FixedPeer silent(std::nullopt);
  std::vector<ResultPeer*> peers{&silent};
  VirtualClock clock;
  EXPECT_TRUE(std::holds_alternative<ComputeLocally>(BroadcastBeforeCompute(Signature{}, peers, clock, 100)));
  EXPECT_TRUE(std::holds_alternative<ComputeLocally>(BroadcastBeforeCompute(Signature{}, {}, clock, 100)));
}

}  // namespace
}  // namespace edupipe
