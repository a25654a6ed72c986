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

#include <deque>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "edupipe/common.h"
#include "edupipe/demand.h"
#include "edupipe/protocol.h"
#include "edupipe/store.h"

namespace edupipe {

// One committed result: before/after snapshot of a warehouse slot.
struct WalRecord {
  std::uint64_t seq = 0;
  Signature signature;
  std::optional<Bytes> before;
  Bytes after;
  std::uint32_t crc = 0;

  bool operator==(const WalRecord&) const = default;
};

// CRC32 over signature, before-len, before, after-len, after as they
// appear in the encoded record.
std::uint32_t WalRecordCrc(const Signature& sig, const std::optional<Bytes>& before,
                           const Bytes& after);
WalRecord MakeWalRecord(const Signature& sig, std::optional<Bytes> before, Bytes after);

// seq u64 BE, sig, before-len u32 BE (0xFFFFFFFF when absent) + bytes,
// after-len u32 BE + bytes, crc32 u32 BE.
void EncodeWalRecord(Bytes& out, const WalRecord& rec);
// Returns nullopt on a short read or a CRC mismatch; `reader` is left
// wherever decoding stopped.
std::optional<WalRecord> TryDecodeWalRecord(ByteReader& reader);

// Byte sink behind a WAL or checkpoint.
class DurableStorage {
 public:
  virtual ~DurableStorage() = default;
  virtual Bytes ReadAll() = 0;
  virtual void Append(ByteView data) = 0;
  // Atomically replaces the whole content.
  virtual void Replace(ByteView data) = 0;
};

// File storage. Appends are flushed with fsync when `sync` is set.
class FileStorage final : public DurableStorage {
 public:
  explicit FileStorage(std::string path, bool sync = true);

  Bytes ReadAll() override;
  void Append(ByteView data) override;
  void Replace(ByteView data) override;

  const std::string& path() const { return path_; }

 private:
  std::string path_;
  bool sync_;
};

// In-memory storage that survives a simulated process crash when shared.
class MemoryStorage final : public DurableStorage {
 public:
  Bytes ReadAll() override;
  void Append(ByteView data) override;
  void Replace(ByteView data) override;

  std::size_t size() const;
  // Torn-write injection: drops everything past `size` bytes.
  void TruncateTo(std::size_t size);

 private:
  mutable std::mutex mu_;
  Bytes data_;
};

// Bounded write-ahead log. Records are kept in memory mirroring the file.
class Wal {
 public:
  static constexpr std::size_t kDefaultCapacity = 1024;

  // Opens existing content, dropping any invalid tail. Throws kIoFailure
  // if the header is unreadable.
  explicit Wal(std::shared_ptr<DurableStorage> storage, std::size_t capacity = kDefaultCapacity);

  // Assigns the next seq. Evicts the oldest record when full if it is
  // checkpointed; otherwise throws kCapacityExhausted. Throws
  // kChecksumMismatch if rec.crc does not validate.
  std::uint64_t Append(const WalRecord& rec);
  std::uint64_t Append(const Signature& sig, std::optional<Bytes> before, Bytes after);
  // Appends a record that keeps its own seq (replica side). Records at or
  // below the highest held seq are skipped; returns whether it was added.
  bool AppendShipped(const WalRecord& rec);

  // Records with seq <= `seq` may be evicted.
  void MarkCheckpointed(std::uint64_t seq);

  // Re-reads storage, truncates an invalid tail, and installs every valid
  // record into `store`. Returns records applied.
  std::size_t Replay(DemandStore& store);

  std::vector<WalRecord> Records() const;
  std::vector<WalRecord> RecordsAfter(std::optional<std::uint64_t> seq) const;
  std::optional<std::uint64_t> HighestSeq() const;
  std::optional<std::uint64_t> OldestSeq() const;
  std::optional<std::uint64_t> CheckpointedThrough() const;
  std::size_t size() const;
  std::size_t capacity() const { return capacity_; }
  // Bytes dropped from torn tails since this WAL was opened.
  std::size_t truncated_bytes() const;

 private:
  void LoadLocked();
  void RewriteLocked();
  void EvictForAppendLocked();

  std::shared_ptr<DurableStorage> storage_;
  std::size_t capacity_;
  mutable std::mutex mu_;
  std::deque<WalRecord> records_;
  std::uint64_t next_seq_ = 0;
  std::optional<std::uint64_t> checkpointed_through_;
  std::size_t truncated_bytes_ = 0;
};

// Warehouse snapshot: "DCKP", version u8, through-flag u8, through seq
// u64 BE, count u64 BE, then sig + len u32 BE + bytes per entry, crc32 BE
// over everything before it.
struct Checkpoint {
  std::optional<std::uint64_t> through_seq;
  std::map<Signature, Bytes> entries;
};

Bytes EncodeCheckpoint(const Checkpoint& cp);
// Throws kChecksumMismatch or kMalformedRecord.
Checkpoint DecodeCheckpoint(ByteView data);

// Loads the checkpoint (if any) and replays the WAL into a fresh store.
// Returns results installed.
std::size_t RecoverStore(DemandStore& store, Wal& wal, DurableStorage* checkpoint_storage);

// Thrown by the crash-injection hook after the chosen append is durable.
class SimulatedCrash : public std::runtime_error {
 public:
  explicit SimulatedCrash(std::uint64_t append_index)
      : std::runtime_error("simulated crash after append " + std::to_string(append_index)),
        append_index_(append_index) {}
  std::uint64_t append_index() const { return append_index_; }

 private:
  std::uint64_t append_index_;
};

enum class ReplicationMode { kLazy, kEager };

// Commit hook that makes results durable before the store acknowledges
// them, checkpoints periodically, and ships to replicas.
class DurableLog final : public CommitLog {
 public:
  static constexpr std::size_t kCheckpointInterval = 256;

  DurableLog(std::shared_ptr<Wal> wal, std::shared_ptr<DurableStorage> checkpoint_storage,
             std::size_t checkpoint_interval = kCheckpointInterval);

  void OnCommit(const Signature& sig, const std::optional<Bytes>& before,
                const Bytes& after) override;
  void AfterCommit(DemandStore& store) override;

  // Writes the snapshot, then lets the WAL evict what it covers. In lazy
  // mode replicas are shipped to afterwards.
  void CheckpointNow(DemandStore& store);

  void AddReplica(WalEndpointHandler* replica, ReplicationMode mode);
  // Ships to every replica; returns records transferred.
  std::size_t ShipAll();

  // Throws SimulatedCrash right after the append with this zero-based index
  // is durable, before the store installs the result.
  void CrashAfterAppend(std::optional<std::uint64_t> index);
  bool crash_fired() const;

  std::uint64_t appends() const;
  std::uint64_t checkpoints() const;
  Wal& wal() { return *wal_; }

 private:
  struct Replica {
    WalEndpointHandler* endpoint;
    ReplicationMode mode;
  };

  std::shared_ptr<Wal> wal_;
  std::shared_ptr<DurableStorage> checkpoint_storage_;
  std::size_t checkpoint_interval_;

  mutable std::mutex mu_;
  std::uint64_t appends_ = 0;
  std::uint64_t since_checkpoint_ = 0;
  std::uint64_t checkpoints_ = 0;
  bool eager_pending_ = false;
  std::optional<std::uint64_t> crash_after_;
  bool crash_fired_ = false;
  std::vector<Replica> replicas_;
  std::mutex checkpoint_mu_;
};

// Sends `src` records the destination lacks. Throws kTransportFailure when
// the destination is unreachable or so far behind that the records it
// needs were already evicted from `src`.
std::size_t ShipWal(const Wal& src, WalEndpointHandler& dst);

// WAL endpoint reached through the store frame protocol.
class RemoteWalEndpoint final : public WalEndpointHandler {
 public:
  explicit RemoteWalEndpoint(FramedStoreClient* client) : client_(client) {}
  std::optional<std::uint64_t> HighestSeq() override;
  std::size_t PushRecords(ByteView records) override;

 private:
  FramedStoreClient* client_;
};

// Replica side: appends shipped records to its own WAL and applies them to
// its warehouse.
class ReplicaHost final : public WalEndpointHandler {
 public:
  ReplicaHost(std::shared_ptr<Wal> wal, DemandStore* store,
              std::shared_ptr<DurableStorage> checkpoint_storage = nullptr);

  std::optional<std::uint64_t> HighestSeq() override;
  std::size_t PushRecords(ByteView records) override;

  DemandStore& store() { return *store_; }
  Wal& wal() { return *wal_; }

 private:
  std::shared_ptr<Wal> wal_;
  DemandStore* store_;
  std::shared_ptr<DurableStorage> checkpoint_storage_;
  std::mutex mu_;
};

}  // namespace edupipe
