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

#include <filesystem>

#include "edupipe/resilience.h"

namespace edupipe {
namespace {

Signature Sig(int i) { return ComputeSignature("P", "op", {{"i", std::int64_t{i}}}, {}); }

TEST(WalRecordTest, EncodeDecodeRoundTrip) {
  WalRecord rec = MakeWalRecord(Sig(1), std::nullopt, Bytes{1, 2, 3});
  rec.seq = 9;
  Bytes enc;
  EncodeWalRecord(enc, rec);
  // seq 8 + sig 32 + before-len 4 + after-len 4 + 3 + crc 4
  EXPECT_EQ(enc.size(), 55u);
  ByteReader r(enc);
  auto back = TryDecodeWalRecord(r);
  ASSERT_TRUE(back);
  EXPECT_EQ(*back, rec);
}

TEST(WalRecordTest, FlippedByteFailsCrc) {
  WalRecord rec = MakeWalRecord(Sig(1), Bytes{5}, Bytes{1, 2, 3});
  Bytes enc;
  EncodeWalRecord(enc, rec);
  enc[45] ^= 1;
  ByteReader r(enc);
  EXPECT_FALSE(TryDecodeWalRecord(r));
}

TEST(WalTest, AppendAndReopen) {
  auto storage = std::make_shared<MemoryStorage>();
  {
    Wal wal(storage);
    EXPECT_EQ(wal.Append(Sig(1), std::nullopt, Bytes{1}), 0u);
    EXPECT_EQ(wal.Append(Sig(2), std::nullopt, Bytes{2}), 1u);
  }
  Wal reopened(storage);
  EXPECT_EQ(reopened.size(), 2u);
  EXPECT_EQ(reopened.HighestSeq(), 1u);
  DemandStore store;
  EXPECT_EQ(reopened.Replay(store), 2u);
  EXPECT_EQ(store.Peek(Sig(2)), (Bytes{2}));
}

TEST(WalTest, BadCrcRejectedOnAppend) {
  Wal wal(std::make_shared<MemoryStorage>());
  WalRecord rec = MakeWalRecord(Sig(1), std::nullopt, Bytes{1});
  rec.crc ^= 1;
  try {
    wal.Append(rec);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kChecksumMismatch);
  }
}

TEST(WalTest, CapacityNeedsCheckpoint) {
  Wal wal(std::make_shared<MemoryStorage>(), 2);
  wal.Append(Sig(1), std::nullopt, Bytes{1});
  wal.Append(Sig(2), std::nullopt, Bytes{2});
  try {
    wal.Append(Sig(3), std::nullopt, Bytes{3});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kCapacityExhausted);
  }
  wal.MarkCheckpointed(0);
  EXPECT_EQ(wal.Append(Sig(3), std::nullopt, Bytes{3}), 2u);
  EXPECT_EQ(wal.OldestSeq(), 1u);
}

TEST(WalTest, TornTailTruncatedAtEveryOffset) {
  auto full = std::make_shared<MemoryStorage>();
  {
    Wal wal(full);
    wal.Append(Sig(1), std::nullopt, Bytes{1});
    wal.Append(Sig(2), std::nullopt, Bytes(20, 2));
  }
  std::size_t total = full->size();
  Bytes last;
  EncodeWalRecord(last, MakeWalRecord(Sig(2), std::nullopt, Bytes(20, 2)));
  std::size_t prefix = total - last.size();
  for (std::size_t keep = 0; keep < last.size(); ++keep) {
    auto torn = std::make_shared<MemoryStorage>();
    torn->Replace(full->ReadAll());
    torn->TruncateTo(prefix + keep);
    Wal wal(torn);
    EXPECT_EQ(wal.size(), 1u) << keep;
    EXPECT_EQ(wal.truncated_bytes(), keep);
    EXPECT_EQ(torn->size(), prefix);
    // The repaired log accepts new records.
    EXPECT_EQ(wal.Append(Sig(3), std::nullopt, Bytes{3}), 1u);
  }
}

TEST(WalTest, FileStorageSurvivesReopen) {
  auto dir = std::filesystem::temp_directory_path() / "edupipe_wal_test";
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  std::string path = (dir / "wal.log").string();
  {
    Wal wal(std::make_shared<FileStorage>(path));
    wal.Append(Sig(1), std::nullopt, Bytes{4, 5});
  }
  Wal wal(std::make_shared<FileStorage>(path));
  ASSERT_EQ(wal.size(), 1u);
  EXPECT_EQ(wal.Records()[0].after, (Bytes{4, 5}));
  std::filesystem::remove_all(dir);
}

TEST(CheckpointTest, RoundTripAndCorruption) {
  Checkpoint cp;
  cp.through_seq = 4;
  cp.entries[Sig(1)] = Bytes{1};
  cp.entries[Sig(2)] = Bytes{2, 2};
  Bytes enc = EncodeCheckpoint(cp);
  EXPECT_EQ(ToString(ByteView(enc).first(4)), "DCKP");
  Checkpoint back = DecodeCheckpoint(enc);
  EXPECT_EQ(back.through_seq, cp.through_seq);
  EXPECT_EQ(back.entries, cp.entries);
  enc[enc.size() / 2] ^= 0x10;
  EXPECT_THROW(DecodeCheckpoint(enc), Error);
}

TEST(DurableLogTest, RecoverFromCheckpointPlusWal) {
  auto wal_storage = std::make_shared<MemoryStorage>();
  auto cp_storage = std::make_shared<MemoryStorage>();
  DemandStore store;
  auto wal = std::make_shared<Wal>(wal_storage, 8);
  DurableLog log(wal, cp_storage, 3);
  store.SetCommitLog(&log);
  DemandIdGenerator ids(5);
  for (int i = 0; i < 10; ++i) {
    Demand d = Demand::Create(ids.Next(), DemandType::kProcedural, "P", "op", {{"i", std::int64_t{i}}}, {});
    store.PutDemand(d);
    store.ClaimPending("w", {"op"}, 0);
    store.StoreResult(d.signature(), Bytes{static_cast<std::uint8_t>(i)}, "w", 0);
  }
  EXPECT_EQ(log.appends(), 10u);
  EXPECT_EQ(log.checkpoints(), 3u);
  store.SetCommitLog(nullptr);

  DemandStore fresh;
  Wal reopened(wal_storage, 8);
  EXPECT_EQ(RecoverStore(fresh, reopened, cp_storage.get()), 10u);
  EXPECT_EQ(fresh.WarehouseDigest(), store.WarehouseDigest());
}

TEST(DurableLogTest, CrashAfterAppendLeavesRecordDurable) {
  auto wal_storage = std::make_shared<MemoryStorage>();
  DemandStore store;
  DurableLog log(std::make_shared<Wal>(wal_storage), nullptr);
  store.SetCommitLog(&log);
  log.CrashAfterAppend(0);
  DemandIdGenerator ids(6);
  Demand d = Demand::Create(ids.Next(), DemandType::kProcedural, "P", "op", {}, {});
  store.PutDemand(d);
  store.ClaimPending("w", {"op"}, 0);
  EXPECT_THROW(store.StoreResult(d.signature(), Bytes{1}, "w", 0), SimulatedCrash);
  EXPECT_TRUE(log.crash_fired());
  EXPECT_FALSE(store.Peek(d.signature()));
  store.SetCommitLog(nullptr);

  DemandStore fresh;
  Wal reopened(wal_storage);
  EXPECT_EQ(RecoverStore(fresh, reopened, nullptr), 1u);
  EXPECT_EQ(fresh.Peek(d.signature()), (Bytes{1}));
}

TEST(ReplicationTest, ShipIsIncremental) {
  auto primary = std::make_shared<Wal>(std::make_shared<MemoryStorage>());
  DemandStore primary_store;
  for (int i = 0; i < 5; ++i) {
    primary->Append(Sig(i), std::nullopt, Bytes{static_cast<std::uint8_t>(i)});
    primary_store.InstallResult(Sig(i), Bytes{static_cast<std::uint8_t>(i)});
  }
  DemandStore replica_store("replica");
  ReplicaHost replica(std::make_shared<Wal>(std::make_shared<MemoryStorage>()), &replica_store);
  EXPECT_EQ(ShipWal(*primary, replica), 5u);
  EXPECT_EQ(replica_store.WarehouseDigest(), primary_store.WarehouseDigest());
  EXPECT_EQ(ShipWal(*primary, replica), 0u);
  primary->Append(Sig(9), std::nullopt, Bytes{9});
  EXPECT_EQ(ShipWal(*primary, replica), 1u);
  EXPECT_EQ(replica.HighestSeq(), primary->HighestSeq());
}

TEST(ReplicationTest, ReplicaTooFarBehindIsRefused) {
  auto primary = std::make_shared<Wal>(std::make_shared<MemoryStorage>(), 2);
  primary->Append(Sig(0), std::nullopt, Bytes{0});
  primary->Append(Sig(1), std::nullopt, Bytes{1});
  primary->MarkCheckpointed(1);
  primary->Append(Sig(2), std::nullopt, Bytes{2});
  DemandStore replica_store("replica");
  ReplicaHost replica(std::make_shared<Wal>(std::make_shared<MemoryStorage>()), &replica_store);
  try {
    ShipWal(*primary, replica);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kTransportFailure);
  }
}

}  // namespace
}  // namespace edupipe
