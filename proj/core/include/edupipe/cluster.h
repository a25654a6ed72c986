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

#include <atomic>
#include <functional>
#include <map>
#include <memory>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "edupipe/clock.h"
#include "edupipe/manager.h"
#include "edupipe/protocol.h"
#include "edupipe/resilience.h"
#include "edupipe/runtime.h"
#include "edupipe/store.h"
#include "edupipe/tiers.h"

namespace edupipe {

struct TierSpec {
  TierKind kind = TierKind::kDWT;
  Stage stage = Stage::kSL;
  // Comma-separated operations; empty means every operation of the stage.
  std::string pool;
  DurationMs exec_latency_ms = 0;

  bool operator==(const TierSpec&) const = default;
};

// "KIND:STAGE[:op+op...][@latency_ms]", e.g. "DWT:TC:train+classify@2000".
TierSpec ParseTierToken(std::string_view token);
std::string FormatTierToken(const TierSpec& t);

struct NodeSpec {
  std::string host;
  std::vector<TierSpec> tiers;

  bool operator==(const NodeSpec&) const = default;
};

struct TopologySpec {
  std::vector<NodeSpec> nodes;

  // One generator and one worker per stage on `nodes` nodes, stages dealt
  // round-robin across nodes.
  static TopologySpec Uniform(std::size_t nodes, std::size_t workers_per_stage = 1,
                              DurationMs exec_latency_ms = 0);

  bool operator==(const TopologySpec&) const = default;
};

struct ClusterOptions {
  ManagerConfig manager;
  std::uint64_t seed = 1;
  bool wal = false;
  // Empty: in-memory WAL and checkpoint that survive a simulated crash.
  std::string wal_path;
  std::size_t wal_capacity = Wal::kDefaultCapacity;
  std::size_t checkpoint_interval = DurableLog::kCheckpointInterval;
  bool broadcast = false;
  DurationMs broadcast_timeout_ms = 100;
  bool audit_every_operation = false;
  // Talk to a store in another process instead of the local one. The
  // local WAL options are then ignored.
  std::shared_ptr<Transport> remote_store;
};

// Everything one process hosts: the store behind the frame protocol, the
// manager with its node controllers, the executors, and optional WAL.
// Tier stepping is either cooperative (Step) or threaded (LiveHost).
class Cluster : public TierListener {
 public:
  Cluster(ClusterOptions options, const Clock* clock);
  ~Cluster() override;

  void Build(const TopologySpec& topology, TimestampMs now);

  // One cooperative round: every live tier steps in id order and
  // heartbeats, surviving nodes heartbeat, expired claims are requeued,
  // and the manager applies its policy.
  std::vector<RecoveryAction> Step(TimestampMs now);
  // The non-tier half of Step: node heartbeats, lease requeue, manager
  // tick, and store recovery after a simulated crash.
  void Maintain(TimestampMs now, std::vector<RecoveryAction>& actions);

  void KillTier(const TierId& id);
  void KillNode(const std::string& node_id);
  bool IsNodeKilled(const std::string& node_id) const;
  // Drops the in-memory store and rebuilds it from checkpoint + WAL (or
  // empty when the WAL is off). Returns results recovered.
  std::size_t CrashStore();
  // Crash the store right after the commit with this zero-based index.
  // With the WAL on the record is durable but unacknowledged; without it
  // the result was acknowledged and is lost.
  void CrashAfterCommit(std::optional<std::uint64_t> index);
  std::uint64_t store_crashes() const { return store_crashes_; }
  // Runs inside CrashStore with the dead store and the WAL storage, before
  // recovery reads the storage.
  using CrashHook = std::function<void(const DemandStore& dead, DurableStorage* wal_storage)>;
  void SetCrashHook(CrashHook hook) { crash_hook_ = std::move(hook); }
  void SetClaimObserver(DemandStore::ClaimObserver observer);
  void Checkpoint();
  std::size_t ShipWal();
  void AddReplica(WalEndpointHandler* replica, ReplicationMode mode);

  DemandStore& store() { return *store_; }
  StoreEndpoint& endpoint() { return *client_; }
  Manager& manager() { return *manager_; }
  ExecutorRegistry& executors() { return registry_; }
  std::shared_ptr<TrainingSetCache> training_sets() { return training_sets_; }
  DemandStore& registration_store() { return registration_store_; }
  DurableLog* durable_log() { return log_.get(); }
  Wal* wal() { return wal_.get(); }
  DurableStorage* wal_storage() { return wal_storage_.get(); }
  StoreService& service() { return service_; }
  const ClusterOptions& options() const { return options_; }

  // Executions per tier, recorded by worker observers.
  std::map<TierId, std::uint64_t> ExecutionsByTier() const;
  struct Execution {
    Signature signature;
    TierId tier;
    std::string stage;
  };
  // Every execution, in order.
  std::vector<Execution> ExecutionLog() const;
  std::uint64_t TotalExecutions() const;

  // Optional hooks for a live host.
  void SetTierHooks(std::function<void(TierWrapper&)> added, std::function<void(TierWrapper&)> removed);

  void OnTierAdded(TierWrapper& tier) override;
  void OnTierRemoved(TierWrapper& tier) override;

 private:
  void OpenDurability();
  void RewireBroadcast();

  ClusterOptions options_;
  const Clock* clock_;
  DemandIdGenerator ids_;
  std::shared_ptr<TrainingSetCache> training_sets_;
  ExecutorRegistry registry_;

  std::unique_ptr<DemandStore> store_;
  DemandStore registration_store_{"registry"};
  StoreService service_;
  std::shared_ptr<InMemoryTransport> transport_;
  std::unique_ptr<FramedStoreClient> client_;

  std::shared_ptr<DurableStorage> wal_storage_;
  std::shared_ptr<DurableStorage> checkpoint_storage_;
  std::shared_ptr<Wal> wal_;
  std::unique_ptr<DurableLog> log_;
  std::vector<std::pair<WalEndpointHandler*, ReplicationMode>> replicas_;

  std::unique_ptr<StandardTierFactory> factory_;
  std::unique_ptr<Manager> manager_;
  std::set<std::string> killed_nodes_;

  mutable std::mutex exec_mu_;
  std::map<TierId, std::uint64_t> executions_;
  std::vector<Execution> execution_log_;

  bool CrashDue() const;

  std::optional<std::uint64_t> crash_after_commit_;
  std::uint64_t store_crashes_ = 0;
  CrashHook crash_hook_;
  DemandStore::ClaimObserver claim_observer_;
  std::vector<std::unique_ptr<DemandStore>> graveyard_;
  std::vector<std::unique_ptr<DurableLog>> dead_logs_;

  std::mutex hooks_mu_;
  std::vector<DemandWorker*> workers_;
  std::function<void(TierWrapper&)> on_added_;
  std::function<void(TierWrapper&)> on_removed_;
};

// Runs every tier of a cluster on its own thread plus a monitor thread
// that requeues expired claims and drives the manager.
class LiveHost {
 public:
  LiveHost(Cluster* cluster, const Clock* clock, DurationMs poll_ms = 1, DurationMs monitor_ms = 50);
  ~LiveHost();

  // Spawns threads for tiers that already exist and any added later.
  void Start();
  void Stop();

 private:
  void Spawn(TierWrapper* tier);
  void Reap(TierWrapper* tier);
  void TierLoop(TierWrapper* tier, std::shared_ptr<std::atomic<bool>> stop);
  void MonitorLoop();

  Cluster* cluster_;
  const Clock* clock_;
  DurationMs poll_ms_;
  DurationMs monitor_ms_;
  std::mutex mu_;
  std::map<TierWrapper*, std::pair<std::thread, std::shared_ptr<std::atomic<bool>>>> threads_;
  std::thread monitor_;
  std::atomic<bool> stopping_{false};
  bool started_ = false;
};

// Runs `spec` to completion on threads. Throws kTimeout.
JobReport RunJobLive(Cluster& cluster, const JobSpec& spec, const Clock& clock,
                     DurationMs timeout_ms = 600000);

// Runs `spec` to completion by stepping the cluster cooperatively on a
// virtual clock. Throws kStallDetected after `stall_ticks` ticks without
// progress.
JobReport RunJobStepped(Cluster& cluster, const JobSpec& spec, VirtualClock& clock,
                        DurationMs tick_ms = 1000, std::uint64_t stall_ticks = 200);

}  // namespace edupipe
