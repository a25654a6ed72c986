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

#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "edupipe/demand.h"

namespace edupipe {

using OperationPool = std::set<std::string, std::less<>>;

enum class PutStatus : std::uint8_t { kEnqueued = 0, kAlreadyComputed = 1, kAlreadyInFlight = 2 };

struct PutOutcome {
  PutStatus status = PutStatus::kEnqueued;
  // Set for kAlreadyComputed.
  std::optional<Bytes> result;
};

enum class StoreStatus : std::uint8_t { kStored = 0, kDuplicate = 1 };

enum class SignatureLocation : std::uint8_t { kUnknown = 0, kPending = 1, kInProcess = 2, kComputed = 3 };

std::string_view ToString(PutStatus s);
std::string_view ToString(SignatureLocation s);

// Every put() probes the warehouse, so hits + misses = lookups, where
// lookups counts lookup() calls plus put() probes. puts counts enqueues.
struct StoreStats {
  std::uint64_t puts = 0;
  std::uint64_t claims = 0;
  std::uint64_t hits = 0;
  std::uint64_t misses = 0;
  std::uint64_t stores = 0;
  std::uint64_t requeues = 0;
  std::uint64_t lookups = 0;
  std::uint64_t duplicates = 0;

  bool operator==(const StoreStats&) const = default;
};

struct ClaimInfo {
  Signature signature;
  std::string tier;
  TimestampMs claimed_at = 0;
};

// The operations every tier uses to talk to a demand store, whether the
// store lives in-process or behind the frame protocol.
class StoreEndpoint {
 public:
  virtual ~StoreEndpoint() = default;

  virtual PutOutcome PutDemand(const Demand& d) = 0;
  virtual std::optional<Demand> ClaimPending(const std::string& tier, const OperationPool& pool,
                                             TimestampMs now) = 0;
  virtual StoreStatus StoreResult(const Signature& sig, const Bytes& result,
                                  const std::string& tier, TimestampMs now) = 0;
  virtual std::optional<Bytes> Lookup(const Signature& sig) = 0;
  virtual std::vector<Signature> RequeueExpired(TimestampMs now, DurationMs lease) = 0;
  virtual SignatureLocation Locate(const Signature& sig) = 0;
  // Claims held by `tier` that are still within their lease at `now`.
  virtual std::size_t LiveClaimsHeldBy(const std::string& tier, TimestampMs now,
                                       DurationMs lease) = 0;
  virtual StoreStats Stats() = 0;
};

class DemandStore;

// Write-ahead hook. OnCommit runs under the store lock before a first write
// is acknowledged; throwing from it aborts the store. AfterCommit runs after
// the lock is released.
class CommitLog {
 public:
  virtual ~CommitLog() = default;
  virtual void OnCommit(const Signature& sig, const std::optional<Bytes>& before,
                        const Bytes& after) = 0;
  virtual void AfterCommit(DemandStore& /*store*/) {}
};

// Demand Store Tier: pending FIFO, in-process claims, and the value
// warehouse. A signature lives in at most one of the three at any time;
// warehouse entries are write-once.
class DemandStore final : public StoreEndpoint {
 public:
  explicit DemandStore(std::string id = "dst-0");

  const std::string& id() const { return id_; }

  PutOutcome PutDemand(const Demand& d) override;
  std::optional<Demand> ClaimPending(const std::string& tier, const OperationPool& pool,
                                     TimestampMs now) override;
  StoreStatus StoreResult(const Signature& sig, const Bytes& result, const std::string& tier,
                          TimestampMs now) override;
  std::optional<Bytes> Lookup(const Signature& sig) override;
  std::vector<Signature> RequeueExpired(TimestampMs now, DurationMs lease) override;
  SignatureLocation Locate(const Signature& sig) override;
  std::size_t LiveClaimsHeldBy(const std::string& tier, TimestampMs now,
                               DurationMs lease) override;
  StoreStats Stats() override;

  // Not owned; must outlive the store or be reset to nullptr.
  void SetCommitLog(CommitLog* log);
  // Called under the store lock for every successful claim.
  using ClaimObserver = std::function<void(const ClaimInfo&)>;
  void SetClaimObserver(ClaimObserver observer);
  // Runs the incremental partition audit after every mutating operation.
  void SetAuditEveryOperation(bool on);

  // Installs a recovered value without logging (WAL replay, replica apply).
  // Returns false if the warehouse already held the signature.
  bool InstallResult(const Signature& sig, Bytes result);

  // Inspectable event history (System/Resource demands from the manager).
  void AppendHistory(const Demand& d);
  std::vector<Demand> History() const;

  // Warehouse read that leaves hit/miss statistics untouched.
  std::optional<Bytes> Peek(const Signature& sig) const;
  std::map<Signature, Bytes> WarehouseSnapshot() const;
  // SHA-256 over the warehouse entries in signature order.
  Sha256Digest WarehouseDigest() const;
  std::vector<Demand> PendingInOrder() const;
  std::vector<ClaimInfo> Claims() const;

  std::size_t pending_size() const;
  std::size_t in_process_size() const;
  std::size_t warehouse_size() const;

  // Full O(n) partition audit; throws std::logic_error on violation.
  void Audit() const;

 private:
  struct PendingEntry {
    Demand demand;
    std::int64_t seq;
  };
  struct InProcessEntry {
    Demand demand;
    std::string tier;
    TimestampMs claimed_at;
    std::int64_t seq;
  };

  void EnqueueLocked(Demand d, std::int64_t seq);
  void AuditTouchedLocked(const Signature& sig) const;
  void AuditLocked() const;

  std::string id_;
  mutable std::mutex mu_;
  std::unordered_map<Signature, PendingEntry, SignatureHash> pending_;
  // Per-operation FIFO of (seq, signature); stale entries are skipped lazily.
  std::map<std::string, std::deque<std::pair<std::int64_t, Signature>>, std::less<>> queues_;
  std::unordered_map<Signature, InProcessEntry, SignatureHash> in_process_;
  std::unordered_map<Signature, Bytes, SignatureHash> warehouse_;
  std::unordered_map<Signature, SignatureLocation, SignatureHash> locations_;
  std::vector<Demand> history_;
  StoreStats stats_;
  std::int64_t next_back_seq_ = 1;
  std::int64_t next_front_seq_ = 0;
  CommitLog* commit_log_ = nullptr;
  ClaimObserver claim_observer_;
  bool audit_every_op_ = false;
};

}  // namespace edupipe
