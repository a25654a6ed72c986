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

#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "edupipe/store.h"
#include "edupipe/tiers.h"

namespace edupipe {

// Crash-recovery policies with their fixed numeric codes.
enum class RecoveryPolicy : int {
  kLetItBe = 0,
  kTryNextUntilTheEnd = 1,
  kTryNextAndWrapAround = 2,
  kIfCrashThenTryNextUntilTheEnd = 3,
  kIfCrashThenRestart = 4,
};

std::string_view ToString(RecoveryPolicy p);
// Accepts 0-4; throws kBadConfig otherwise.
RecoveryPolicy PolicyFromCode(int code);

struct GipsyNode {
  std::string node_id;
  std::string host;
  std::vector<TierId> tiers;
  bool registered = false;
  bool up = true;
};

struct ManagerConfig {
  RecoveryPolicy policy = RecoveryPolicy::kLetItBe;
  DurationMs heartbeat_ms = 1000;
  int missed_k = 3;
  bool one_node_per_host = false;
  // Lease used to decide whether a silent tier's claims have expired.
  DurationMs lease_ms = 10000;

  // Keys: policy, heartbeat_ms, missed_k, one_node_per_host, lease_ms.
  static ManagerConfig FromConfiguration(const Configuration& cfg);
};

struct RecoveryAction {
  enum class Kind {
    // Policy 0, or already handled.
    kNone,
    // Crash not yet confirmed; retried on a later tick.
    kDeferred,
    kReassigned,
    kRestarted,
    // The policy could not find a home for the role.
    kFailed,
  };
  Kind kind = Kind::kNone;
  TierId failed;
  std::optional<TierId> replacement;
  std::string detail;
};

std::string_view ToString(RecoveryAction::Kind k);

// GIPSY Manager Tier: node registry, tier allocation, liveness monitoring
// and self-healing. Mutations are serialized; reads are safe concurrently.
class Manager {
 public:
  // `work_store` answers claim probes for crash confirmation; allocation
  // history goes to `registration_store`. Neither is owned.
  Manager(ManagerConfig config, TierFactory* factory, StoreEndpoint* work_store,
          DemandStore* registration_store, DemandIdGenerator* ids);
  ~Manager();

  std::string RegisterNode(const std::string& host, TimestampMs now);

  // `overrides` may carry pool, exec_latency_ms and other tier keys.
  TierId AllocateTier(const std::string& node_id, TierKind kind, std::optional<Stage> stage,
                      TimestampMs now, const Configuration& overrides = {});
  void DeallocateTier(const TierId& id, TimestampMs now);

  void Heartbeat(const TierId& id, TimestampMs now);
  void NodeHeartbeat(const std::string& node_id, TimestampMs now);

  // Applies `policy` to a tier that has missed its heartbeats. Throws
  // kNoCandidateNode when try-next runs out of nodes and kNodeDown when a
  // restart targets a dead node.
  RecoveryAction OnHeartbeatMissed(const TierId& id, RecoveryPolicy policy, TimestampMs now);

  // Marks silent nodes down and runs the configured policy for every tier
  // with at least missed_k missed heartbeats. Never throws for policy
  // failures; they come back as kFailed actions.
  std::vector<RecoveryAction> Tick(TimestampMs now);

  void SetPolicy(RecoveryPolicy policy);
  RecoveryPolicy policy() const;
  const ManagerConfig& config() const { return config_; }

  NodeController* Controller(const std::string& node_id) const;
  TierWrapper* FindTier(const TierId& id) const;
  std::vector<GipsyNode> Nodes() const;
  std::vector<TierId> Tiers() const;
  // Live (not given-up) tiers of one kind and stage in id order.
  std::vector<TierId> TiersFor(TierKind kind, std::optional<Stage> stage) const;
  std::optional<std::string> NodeOf(const TierId& id) const;
  bool IsNodeUp(const std::string& node_id) const;

  // Sets the listener on every current and future node controller.
  void SetTierListener(TierListener* listener);

  // Registration-store crash handling: re-records the registry's nodes and
  // allocations into a fresh store and switches to it.
  void RecoverRegistrationStore(DemandStore* fresh);

  // Throws std::logic_error if the tier index and node tier lists disagree.
  void Audit() const;

 private:
  struct NodeEntry {
    GipsyNode node;
    std::unique_ptr<NodeController> controller;
    TimestampMs last_heartbeat = 0;
    std::size_t order = 0;
  };
  struct TierEntry {
    std::string node_id;
    Configuration config;
    TimestampMs last_heartbeat = 0;
    bool given_up = false;
  };

  TierId AllocateLocked(const std::string& node_id, Configuration cfg, TimestampMs now);
  void DeallocateLocked(const TierId& id, TimestampMs now);
  void RecordEvent(std::string operation, Params params, DemandType type = DemandType::kSystem);
  std::vector<const NodeEntry*> NodesInOrderLocked() const;
  RecoveryAction HandleMissedLocked(const TierId& id, RecoveryPolicy policy, TimestampMs now);

  ManagerConfig config_;
  TierFactory* factory_;
  StoreEndpoint* work_store_;
  DemandStore* registration_store_;
  DemandIdGenerator* ids_;

  mutable std::recursive_mutex mu_;
  std::map<std::string, NodeEntry> nodes_;
  std::map<TierId, TierEntry> tier_index_;
  std::uint64_t node_counter_ = 0;
  TierListener* listener_ = nullptr;
};

}  // namespace edupipe
