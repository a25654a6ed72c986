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

#include "edupipe/cluster.h"

#include <boost/algorithm/string/classification.hpp>
#include <boost/algorithm/string/join.hpp>
#include <boost/algorithm/string/replace.hpp>
#include <boost/algorithm/string/split.hpp>

#include <chrono>
#include <thread>

namespace edupipe {

TierSpec ParseTierToken(std::string_view token) {
  std::string text(token);
  TierSpec t;
  if (auto at = text.find('@'); at != std::string::npos) {
    try {
      t.exec_latency_ms = std::stoll(text.substr(at + 1));
    } catch (const std::exception&) {
      Fail(ErrorCode::kBadConfig, "bad latency in tier token '" + text + "'");
    }
    if (t.exec_latency_ms < 0) Fail(ErrorCode::kBadConfig, "negative latency in '" + text + "'");
    text.resize(at);
  }
  std::vector<std::string> parts;
  boost::split(parts, text, boost::is_any_of(":"));
  if (parts.size() < 2 || parts.size() > 3) {
    Fail(ErrorCode::kBadConfig, "tier token '" + std::string(token) + "' is not KIND:STAGE[:ops]");
  }
  t.kind = ParseTierKind(parts[0]);
  t.stage = ParseStage(parts[1]);
  if (t.kind != TierKind::kDGT && t.kind != TierKind::kDWT) {
    Fail(ErrorCode::kBadConfig, "topology hosts only DGT and DWT tiers");
  }
  if (parts.size() == 3) t.pool = boost::replace_all_copy(parts[2], "+", ",");
  return t;
}

std::string FormatTierToken(const TierSpec& t) {
  std::string out = std::string(ToString(t.kind)) + ":" + std::string(ToString(t.stage));
  if (!t.pool.empty()) out += ":" + boost::replace_all_copy(t.pool, ",", "+");
  if (t.exec_latency_ms != 0) out += "@" + std::to_string(t.exec_latency_ms);
  return out;
}

TopologySpec TopologySpec::Uniform(std::size_t nodes, std::size_t workers_per_stage,
                                   DurationMs exec_latency_ms) {
  if (nodes == 0) Fail(ErrorCode::kBadConfig, "topology needs at least one node");
  TopologySpec t;
  for (std::size_t i = 0; i < nodes; ++i) t.nodes.push_back({"host-" + std::to_string(i), {}});
  std::size_t i = 0;
  for (Stage s : kAllStages) {
    auto& node = t.nodes[i++ % nodes];
    node.tiers.push_back({TierKind::kDGT, s, "", 0});
    for (std::size_t w = 0; w < workers_per_stage; ++w) {
      node.tiers.push_back({TierKind::kDWT, s, "", exec_latency_ms});
    }
  }
  return t;
}

Cluster::Cluster(ClusterOptions options, const Clock* clock)
    : options_(std::move(options)),
      clock_(clock),
      ids_(options_.seed),
      training_sets_(std::make_shared<TrainingSetCache>()),
      store_(std::make_unique<DemandStore>()),
      service_(store_.get()) {
  RegisterPipelineExecutors(registry_, training_sets_);
  store_->SetAuditEveryOperation(options_.audit_every_operation);
  transport_ = std::make_shared<InMemoryTransport>(&service_);
  if (options_.remote_store) {
    options_.wal = false;
    client_ = std::make_unique<FramedStoreClient>(options_.remote_store);
  } else {
    client_ = std::make_unique<FramedStoreClient>(transport_);
  }
  OpenDurability();
  factory_ = std::make_unique<StandardTierFactory>(client_.get(), &registry_, &ids_);
  manager_ = std::make_unique<Manager>(options_.manager, factory_.get(), client_.get(),
                                       &registration_store_, &ids_);
  manager_->SetTierListener(this);
}

Cluster::~Cluster() {
  // Controllers report their tiers as removed while the rest is alive.
  manager_.reset();
}

void Cluster::OpenDurability() {
  if (!options_.wal) return;
  if (options_.wal_path.empty()) {
    wal_storage_ = std::make_shared<MemoryStorage>();
    checkpoint_storage_ = std::make_shared<MemoryStorage>();
  } else {
    wal_storage_ = std::make_shared<FileStorage>(options_.wal_path + "/wal.log");
    checkpoint_storage_ = std::make_shared<FileStorage>(options_.wal_path + "/checkpoint.bin");
  }
  wal_ = std::make_shared<Wal>(wal_storage_, options_.wal_capacity);
  // A file-backed store restarts with whatever the last process left.
  RecoverStore(*store_, *wal_, checkpoint_storage_.get());
  log_ = std::make_unique<DurableLog>(wal_, checkpoint_storage_, options_.checkpoint_interval);
  store_->SetCommitLog(log_.get());
}

void Cluster::Build(const TopologySpec& topology, TimestampMs now) {
  for (const auto& node : topology.nodes) {
    std::string id = manager_->RegisterNode(node.host, now);
    for (const auto& t : node.tiers) {
      Configuration overrides;
      if (!t.pool.empty()) overrides.Set("pool", t.pool);
      if (t.exec_latency_ms != 0) overrides.Set("exec_latency_ms", std::to_string(t.exec_latency_ms));
      manager_->AllocateTier(id, t.kind, t.stage, now, overrides);
    }
  }
}

void Cluster::Maintain(TimestampMs now, std::vector<RecoveryAction>& actions) {
  if (CrashDue()) CrashStore();
  for (const auto& node : manager_->Nodes()) {
    if (!IsNodeKilled(node.node_id)) manager_->NodeHeartbeat(node.node_id, now);
  }
  try {
    client_->RequeueExpired(now, options_.manager.lease_ms);
  } catch (const Error&) {
    // Store down; retried next round.
  }
  auto tick = manager_->Tick(now);
  actions.insert(actions.end(), tick.begin(), tick.end());
}

bool Cluster::CrashDue() const {
  if (store_crashes_ > 0 || !crash_after_commit_) return false;
  if (log_) return log_->crash_fired();
  return store_->warehouse_size() > *crash_after_commit_;
}

void Cluster::CrashAfterCommit(std::optional<std::uint64_t> index) {
  crash_after_commit_ = index;
  if (log_) log_->CrashAfterAppend(index);
}

void Cluster::SetClaimObserver(DemandStore::ClaimObserver observer) {
  claim_observer_ = std::move(observer);
  store_->SetClaimObserver(claim_observer_);
}

std::vector<RecoveryAction> Cluster::Step(TimestampMs now) {
  std::vector<RecoveryAction> actions;
  for (const TierId& id : manager_->Tiers()) {
    if (IsNodeKilled(id.node_id)) continue;
    TierWrapper* tier = manager_->FindTier(id);
    if (tier == nullptr || tier->crashed()) continue;
    try {
      tier->Step(now);
    } catch (const Error&) {
      // Abandoned claims come back through lease expiry.
    }
    if (CrashDue()) transport_->SetDown(true);
    manager_->Heartbeat(id, now);
  }
  Maintain(now, actions);
  return actions;
}

void Cluster::KillTier(const TierId& id) {
  TierWrapper* tier = manager_->FindTier(id);
  if (tier == nullptr) Fail(ErrorCode::kUnknownTier, id.ToString());
  tier->Crash();
}

void Cluster::KillNode(const std::string& node_id) {
  NodeController* c = manager_->Controller(node_id);
  if (c == nullptr) Fail(ErrorCode::kUnknownNode, node_id);
  {
    std::lock_guard<std::mutex> l(exec_mu_);
    killed_nodes_.insert(node_id);
  }
  for (const TierId& id : c->Tiers()) {
    if (TierWrapper* t = c->Find(id)) t->Crash();
  }
}

bool Cluster::IsNodeKilled(const std::string& node_id) const {
  std::lock_guard<std::mutex> l(exec_mu_);
  return killed_nodes_.contains(node_id);
}

std::size_t Cluster::CrashStore() {
  transport_->SetDown(true);
  auto fresh = std::make_unique<DemandStore>(store_->id());
  fresh->SetAuditEveryOperation(options_.audit_every_operation);
  fresh->SetClaimObserver(claim_observer_);
  ++store_crashes_;
  if (crash_hook_) crash_hook_(*store_, wal_storage_.get());
  std::size_t recovered = 0;
  std::unique_ptr<DurableLog> old_log;
  if (options_.wal) {
    wal_ = std::make_shared<Wal>(wal_storage_, options_.wal_capacity);
    recovered = RecoverStore(*fresh, *wal_, checkpoint_storage_.get());
    old_log = std::move(log_);
    log_ = std::make_unique<DurableLog>(wal_, checkpoint_storage_, options_.checkpoint_interval);
    for (const auto& [replica, mode] : replicas_) log_->AddReplica(replica, mode);
    fresh->SetCommitLog(log_.get());
  }
  service_.SetStore(fresh.get());
  // Live threads may still be inside the old store or log; keep both.
  graveyard_.push_back(std::move(store_));
  if (old_log) dead_logs_.push_back(std::move(old_log));
  store_ = std::move(fresh);
  transport_->SetDown(false);
  return recovered;
}

void Cluster::Checkpoint() {
  if (!log_) Fail(ErrorCode::kBadConfig, "checkpoint needs the WAL enabled");
  log_->CheckpointNow(*store_);
}

std::size_t Cluster::ShipWal() {
  if (!log_) Fail(ErrorCode::kBadConfig, "shipping needs the WAL enabled");
  return log_->ShipAll();
}

void Cluster::AddReplica(WalEndpointHandler* replica, ReplicationMode mode) {
  if (!log_) Fail(ErrorCode::kBadConfig, "replication needs the WAL enabled");
  replicas_.emplace_back(replica, mode);
  log_->AddReplica(replica, mode);
}

std::map<TierId, std::uint64_t> Cluster::ExecutionsByTier() const {
  std::lock_guard<std::mutex> l(exec_mu_);
  return executions_;
}

std::vector<Cluster::Execution> Cluster::ExecutionLog() const {
  std::lock_guard<std::mutex> l(exec_mu_);
  return execution_log_;
}

std::uint64_t Cluster::TotalExecutions() const {
  std::lock_guard<std::mutex> l(exec_mu_);
  return execution_log_.size();
}

void Cluster::SetTierHooks(std::function<void(TierWrapper&)> added,
                           std::function<void(TierWrapper&)> removed) {
  std::lock_guard<std::mutex> l(hooks_mu_);
  on_added_ = std::move(added);
  on_removed_ = std::move(removed);
}

void Cluster::OnTierAdded(TierWrapper& tier) {
  if (auto* w = dynamic_cast<DemandWorker*>(&tier)) {
    w->SetExecutionObserver([this](const TierId& id, const Demand& d) {
      std::lock_guard<std::mutex> l(exec_mu_);
      ++executions_[id];
      execution_log_.push_back({d.signature(), id, d.stage()});
    });
    std::lock_guard<std::mutex> l(hooks_mu_);
    workers_.push_back(w);
  }
  RewireBroadcast();
  std::function<void(TierWrapper&)> hook;
  {
    std::lock_guard<std::mutex> l(hooks_mu_);
    hook = on_added_;
  }
  if (hook) hook(tier);
}

void Cluster::OnTierRemoved(TierWrapper& tier) {
  std::function<void(TierWrapper&)> hook;
  {
    std::lock_guard<std::mutex> l(hooks_mu_);
    hook = on_removed_;
    std::erase(workers_, &tier);
  }
  if (hook) hook(tier);
  RewireBroadcast();
}

void Cluster::RewireBroadcast() {
  if (!options_.broadcast) return;
  std::lock_guard<std::mutex> l(hooks_mu_);
  for (DemandWorker* w : workers_) {
    std::vector<ResultPeer*> peers;
    for (DemandWorker* p : workers_) {
      if (p != w) peers.push_back(p);
    }
    w->EnableBroadcast(std::move(peers), clock_, options_.broadcast_timeout_ms);
  }
}

LiveHost::LiveHost(Cluster* cluster, const Clock* clock, DurationMs poll_ms, DurationMs monitor_ms)
    : cluster_(cluster), clock_(clock), poll_ms_(poll_ms), monitor_ms_(monitor_ms) {}

LiveHost::~LiveHost() { Stop(); }

void LiveHost::Spawn(TierWrapper* tier) {
  auto stop = std::make_shared<std::atomic<bool>>(false);
  std::lock_guard<std::mutex> l(mu_);
  if (threads_.contains(tier)) return;
  threads_.emplace(tier, std::make_pair(std::thread(&LiveHost::TierLoop, this, tier, stop), stop));
}

void LiveHost::Reap(TierWrapper* tier) {
  std::thread t;
  {
    std::lock_guard<std::mutex> l(mu_);
    auto it = threads_.find(tier);
    if (it == threads_.end()) return;
    *it->second.second = true;
    t = std::move(it->second.first);
    threads_.erase(it);
  }
  if (t.joinable() && t.get_id() != std::this_thread::get_id()) t.join();
  else if (t.joinable()) t.detach();
}

void LiveHost::Start() {
  if (started_) return;
  started_ = true;
  stopping_ = false;
  cluster_->SetTierHooks([this](TierWrapper& t) { Spawn(&t); }, [this](TierWrapper& t) { Reap(&t); });
  for (const TierId& id : cluster_->manager().Tiers()) {
    if (TierWrapper* t = cluster_->manager().FindTier(id)) Spawn(t);
  }
  monitor_ = std::thread(&LiveHost::MonitorLoop, this);
}

void LiveHost::Stop() {
  if (!started_) return;
  stopping_ = true;
  if (monitor_.joinable()) monitor_.join();
  cluster_->SetTierHooks({}, {});
  std::map<TierWrapper*, std::pair<std::thread, std::shared_ptr<std::atomic<bool>>>> threads;
  {
    std::lock_guard<std::mutex> l(mu_);
    threads.swap(threads_);
  }
  for (auto& [tier, entry] : threads) {
    *entry.second = true;
    if (entry.first.joinable()) entry.first.join();
  }
  started_ = false;
}

void LiveHost::TierLoop(TierWrapper* tier, std::shared_ptr<std::atomic<bool>> stop) {
  const TierId id = tier->id();
  while (!*stop && !stopping_) {
    if (!tier->crashed() && !cluster_->IsNodeKilled(id.node_id)) {
      TimestampMs now = clock_->NowMs();
      try {
        tier->Step(now);
      } catch (const Error&) {
      }
      if (tier->crashed()) continue;
      try {
        cluster_->manager().Heartbeat(id, now);
      } catch (const Error&) {
        // Already deallocated; the reaper is on its way.
      }
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(poll_ms_));
  }
}

void LiveHost::MonitorLoop() {
  while (!stopping_) {
    std::vector<RecoveryAction> actions;
    cluster_->Maintain(clock_->NowMs(), actions);
    std::this_thread::sleep_for(std::chrono::milliseconds(monitor_ms_));
  }
}

JobReport RunJobLive(Cluster& cluster, const JobSpec& spec, const Clock& clock,
                     DurationMs timeout_ms) {
  JobDriver driver(spec, &cluster.manager(), &cluster.endpoint(), cluster.training_sets());
  LiveHost host(&cluster, &clock);
  host.Start();
  TimestampMs start = clock.NowMs();
  while (!driver.Step(clock.NowMs())) {
    if (clock.NowMs() - start > timeout_ms) {
      host.Stop();
      Fail(ErrorCode::kTimeout, "job did not finish within " + std::to_string(timeout_ms) + " ms");
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(1));
  }
  host.Stop();
  return driver.Report();
}

JobReport RunJobStepped(Cluster& cluster, const JobSpec& spec, VirtualClock& clock,
                        DurationMs tick_ms, std::uint64_t stall_ticks) {
  JobDriver driver(spec, &cluster.manager(), &cluster.endpoint(), cluster.training_sets());
  std::uint64_t idle = 0;
  std::uint64_t last = 0;
  while (!driver.Step(clock.NowMs())) {
    cluster.Step(clock.NowMs());
    clock.Advance(tick_ms);
    std::uint64_t mark = driver.progress() + cluster.TotalExecutions();
    idle = mark == last ? idle + 1 : 0;
    last = mark;
    if (idle >= stall_ticks) {
      Fail(ErrorCode::kStallDetected, "no progress for " + std::to_string(stall_ticks) + " ticks");
    }
  }
  return driver.Report();
}

}  // namespace edupipe
