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

#include "edupipe/manager.h"

#include <algorithm>
#include <stdexcept>

namespace edupipe {

std::string_view ToString(RecoveryPolicy p) {
  switch (p) {
    case RecoveryPolicy::kLetItBe: return "LET_IT_BE";
    case RecoveryPolicy::kTryNextUntilTheEnd: return "TRY_NEXT_UNTIL_THE_END";
    case RecoveryPolicy::kTryNextAndWrapAround: return "TRY_NEXT_AND_WRAP_AROUND";
    case RecoveryPolicy::kIfCrashThenTryNextUntilTheEnd: return "IF_CRASH_THEN_TRY_NEXT_UNTIL_THE_END";
    case RecoveryPolicy::kIfCrashThenRestart: return "IF_CRASH_THEN_RESTART";
  }
  return "?";
}

RecoveryPolicy PolicyFromCode(int code) {
  if (code < 0 || code > 4) {
    Fail(ErrorCode::kBadConfig, "recovery policy must be 0-4, got " + std::to_string(code));
  }
  return static_cast<RecoveryPolicy>(code);
}

std::string_view ToString(RecoveryAction::Kind k) {
  switch (k) {
    case RecoveryAction::Kind::kNone: return "None";
    case RecoveryAction::Kind::kDeferred: return "Deferred";
    case RecoveryAction::Kind::kReassigned: return "Reassigned";
    case RecoveryAction::Kind::kRestarted: return "Restarted";
    case RecoveryAction::Kind::kFailed: return "Failed";
  }
  return "?";
}

ManagerConfig ManagerConfig::FromConfiguration(const Configuration& cfg) {
  ManagerConfig c;
  c.policy = PolicyFromCode(static_cast<int>(cfg.GetInt("policy", static_cast<int>(c.policy))));
  c.heartbeat_ms = cfg.GetInt("heartbeat_ms", c.heartbeat_ms);
  c.missed_k = static_cast<int>(cfg.GetInt("missed_k", c.missed_k));
  c.lease_ms = cfg.GetInt("lease_ms", c.lease_ms);
  std::string one = cfg.GetOr("one_node_per_host", "false");
  c.one_node_per_host = one == "true" || one == "1" || one == "yes";
  if (c.heartbeat_ms <= 0 || c.missed_k <= 0 || c.lease_ms <= 0) {
    Fail(ErrorCode::kBadConfig, "heartbeat_ms, missed_k and lease_ms must be positive");
  }
  return c;
}

Manager::Manager(ManagerConfig config, TierFactory* factory, StoreEndpoint* work_store,
                 DemandStore* registration_store, DemandIdGenerator* ids)
    : config_(config),
      factory_(factory),
      work_store_(work_store),
      registration_store_(registration_store),
      ids_(ids) {}

Manager::~Manager() = default;

void Manager::RecordEvent(std::string operation, Params params, DemandType type) {
  if (registration_store_ == nullptr) return;
  registration_store_->AppendHistory(
      Demand::Create(ids_->Next(), type, "GMT", std::move(operation), std::move(params), {}));
}

std::string Manager::RegisterNode(const std::string& host, TimestampMs now) {
  std::lock_guard<std::recursive_mutex> l(mu_);
  if (config_.one_node_per_host) {
    for (const auto& [id, n] : nodes_) {
      if (n.node.host == host) Fail(ErrorCode::kDuplicateHost, host + " already hosts " + id);
    }
  }
  std::string id = "node-" + std::to_string(node_counter_);
  NodeEntry e;
  e.node = GipsyNode{id, host, {}, true, true};
  e.controller = std::make_unique<NodeController>(id, factory_);
  if (listener_ != nullptr) e.controller->SetListener(listener_);
  e.last_heartbeat = now;
  e.order = node_counter_;
  ++node_counter_;
  nodes_.emplace(id, std::move(e));
  RecordEvent("register_node", {{"host", host}, {"node", id}});
  return id;
}

TierId Manager::AllocateLocked(const std::string& node_id, Configuration cfg, TimestampMs now) {
  auto it = nodes_.find(node_id);
  if (it == nodes_.end() || !it->second.node.registered) Fail(ErrorCode::kUnknownNode, node_id);
  if (!it->second.node.up) Fail(ErrorCode::kNodeDown, node_id);
  cfg.Set("node_id", node_id);
  TierId id = it->second.controller->AddTier(cfg);
  it->second.node.tiers.push_back(id);
  tier_index_.emplace(id, TierEntry{node_id, cfg, now, false});
  Params p{{"node", node_id}, {"tier", id.ToString()}, {"kind", cfg.GetOr("kind", "")}};
  if (auto s = cfg.Get("stage")) p.emplace("stage", *s);
  RecordEvent("allocate_tier", std::move(p));
  return id;
}

TierId Manager::AllocateTier(const std::string& node_id, TierKind kind, std::optional<Stage> stage,
                             TimestampMs now, const Configuration& overrides) {
  std::lock_guard<std::recursive_mutex> l(mu_);
  Configuration cfg = overrides.Clone();
  cfg.Set("kind", std::string(ToString(kind)));
  if (stage) cfg.Set("stage", std::string(ToString(*stage)));
  return AllocateLocked(node_id, std::move(cfg), now);
}

void Manager::DeallocateLocked(const TierId& id, TimestampMs /*now*/) {
  auto it = tier_index_.find(id);
  if (it == tier_index_.end()) Fail(ErrorCode::kUnknownTier, id.ToString());
  auto& node = nodes_.at(it->second.node_id);
  std::erase(node.node.tiers, id);
  tier_index_.erase(it);
  RecordEvent("deallocate_tier", {{"node", node.node.node_id}, {"tier", id.ToString()}});
}

void Manager::DeallocateTier(const TierId& id, TimestampMs now) {
  NodeController* controller = nullptr;
  {
    std::lock_guard<std::recursive_mutex> l(mu_);
    auto it = tier_index_.find(id);
    if (it == tier_index_.end()) Fail(ErrorCode::kUnknownTier, id.ToString());
    controller = nodes_.at(it->second.node_id).controller.get();
    DeallocateLocked(id, now);
  }
  // Outside the lock: a live host joins the tier thread here, and that
  // thread may be waiting to heartbeat.
  controller->RemoveTier(id);
}

void Manager::Heartbeat(const TierId& id, TimestampMs now) {
  std::lock_guard<std::recursive_mutex> l(mu_);
  auto it = tier_index_.find(id);
  if (it == tier_index_.end()) return;
  it->second.last_heartbeat = std::max(it->second.last_heartbeat, now);
  auto& node = nodes_.at(it->second.node_id);
  node.last_heartbeat = std::max(node.last_heartbeat, now);
}

void Manager::NodeHeartbeat(const std::string& node_id, TimestampMs now) {
  std::lock_guard<std::recursive_mutex> l(mu_);
  auto it = nodes_.find(node_id);
  if (it == nodes_.end()) return;
  it->second.last_heartbeat = std::max(it->second.last_heartbeat, now);
  it->second.node.up = true;
}

std::vector<const Manager::NodeEntry*> Manager::NodesInOrderLocked() const {
  std::vector<const NodeEntry*> out;
  for (const auto& [id, e] : nodes_) out.push_back(&e);
  std::sort(out.begin(), out.end(),
            [](const NodeEntry* a, const NodeEntry* b) { return a->order < b->order; });
  return out;
}

RecoveryAction Manager::HandleMissedLocked(const TierId& id, RecoveryPolicy policy,
                                           TimestampMs now) {
  auto it = tier_index_.find(id);
  if (it == tier_index_.end()) Fail(ErrorCode::kUnknownTier, id.ToString());
  TierEntry entry = it->second;
  RecoveryAction action;
  action.failed = id;

  if (entry.given_up) return action;
  if (policy == RecoveryPolicy::kLetItBe) {
    it->second.given_up = true;
    action.detail = "policy 0: no action";
    return action;
  }

  bool needs_confirmation = policy == RecoveryPolicy::kIfCrashThenTryNextUntilTheEnd ||
                            policy == RecoveryPolicy::kIfCrashThenRestart;
  if (needs_confirmation && work_store_ != nullptr &&
      work_store_->LiveClaimsHeldBy(id.ToString(), now, config_.lease_ms) > 0) {
    action.kind = RecoveryAction::Kind::kDeferred;
    action.detail = "claims still within lease";
    return action;
  }

  std::string target;
  if (policy == RecoveryPolicy::kIfCrashThenRestart) {
    target = entry.node_id;
    if (!nodes_.at(target).node.up) Fail(ErrorCode::kNodeDown, target + " cannot restart " + id.ToString());
  } else {
    auto order = NodesInOrderLocked();
    std::size_t pos = 0;
    while (pos < order.size() && order[pos]->node.node_id != entry.node_id) ++pos;
    std::vector<const NodeEntry*> candidates(order.begin() + static_cast<std::ptrdiff_t>(pos) + 1, order.end());
    if (policy == RecoveryPolicy::kTryNextAndWrapAround) {
      // Wrap to the front and finish the cycle at the failed tier's own node.
      candidates.insert(candidates.end(), order.begin(),
                        order.begin() + static_cast<std::ptrdiff_t>(std::min(pos + 1, order.size())));
    }
    for (const NodeEntry* n : candidates) {
      if (n->node.up && n->node.registered) {
        target = n->node.node_id;
        break;
      }
    }
    if (target.empty()) {
      it->second.given_up = true;
      Fail(ErrorCode::kNoCandidateNode, "no node after " + entry.node_id + " for " + id.ToString());
    }
  }

  Configuration cfg = entry.config.Clone();
  TierId replacement = AllocateLocked(target, std::move(cfg), now);
  RecordEvent("recover_tier",
              {{"failed", id.ToString()},
               {"replacement", replacement.ToString()},
               {"policy", static_cast<std::int64_t>(policy)}},
              DemandType::kResource);
  DeallocateLocked(id, now);
  action.kind = policy == RecoveryPolicy::kIfCrashThenRestart ? RecoveryAction::Kind::kRestarted
                                                               : RecoveryAction::Kind::kReassigned;
  action.replacement = replacement;
  action.detail = "moved to " + target;
  return action;
}

RecoveryAction Manager::OnHeartbeatMissed(const TierId& id, RecoveryPolicy policy,
                                          TimestampMs now) {
  NodeController* controller = nullptr;
  RecoveryAction action;
  {
    std::lock_guard<std::recursive_mutex> l(mu_);
    auto it = tier_index_.find(id);
    if (it == tier_index_.end()) Fail(ErrorCode::kUnknownTier, id.ToString());
    controller = nodes_.at(it->second.node_id).controller.get();
    action = HandleMissedLocked(id, policy, now);
  }
  if (action.replacement) controller->RemoveTier(id);
  return action;
}

std::vector<RecoveryAction> Manager::Tick(TimestampMs now) {
  std::vector<TierId> suspects;
  RecoveryPolicy policy;
  {
    std::lock_guard<std::recursive_mutex> l(mu_);
    policy = config_.policy;
    const DurationMs silence = config_.heartbeat_ms * config_.missed_k;
    for (auto& [id, n] : nodes_) {
      if (now - n.last_heartbeat >= silence) n.node.up = false;
    }
    for (const auto& [id, t] : tier_index_) {
      if (!t.given_up && now - t.last_heartbeat >= silence) suspects.push_back(id);
    }
  }
  std::vector<RecoveryAction> actions;
  for (const TierId& id : suspects) {
    try {
      actions.push_back(OnHeartbeatMissed(id, policy, now));
    } catch (const Error& e) {
      RecoveryAction failed;
      failed.kind = RecoveryAction::Kind::kFailed;
      failed.failed = id;
      failed.detail = e.what();
      {
        std::lock_guard<std::recursive_mutex> l(mu_);
        if (auto it = tier_index_.find(id); it != tier_index_.end()) it->second.given_up = true;
      }
      actions.push_back(std::move(failed));
    }
  }
  return actions;
}

void Manager::SetPolicy(RecoveryPolicy policy) {
  std::lock_guard<std::recursive_mutex> l(mu_);
  config_.policy = policy;
}

RecoveryPolicy Manager::policy() const {
  std::lock_guard<std::recursive_mutex> l(mu_);
  return config_.policy;
}

NodeController* Manager::Controller(const std::string& node_id) const {
  std::lock_guard<std::recursive_mutex> l(mu_);
  auto it = nodes_.find(node_id);
  return it == nodes_.end() ? nullptr : it->second.controller.get();
}

TierWrapper* Manager::FindTier(const TierId& id) const {
  std::lock_guard<std::recursive_mutex> l(mu_);
  auto it = tier_index_.find(id);
  if (it == tier_index_.end()) return nullptr;
  return nodes_.at(it->second.node_id).controller->Find(id);
}

std::vector<GipsyNode> Manager::Nodes() const {
  std::lock_guard<std::recursive_mutex> l(mu_);
  std::vector<GipsyNode> out;
  for (const NodeEntry* e : NodesInOrderLocked()) out.push_back(e->node);
  return out;
}

std::vector<TierId> Manager::Tiers() const {
  std::lock_guard<std::recursive_mutex> l(mu_);
  std::vector<TierId> out;
  for (const auto& [id, t] : tier_index_) out.push_back(id);
  return out;
}

std::vector<TierId> Manager::TiersFor(TierKind kind, std::optional<Stage> stage) const {
  std::lock_guard<std::recursive_mutex> l(mu_);
  std::vector<TierId> out;
  for (const auto& [id, t] : tier_index_) {
    if (id.kind != kind || t.given_up) continue;
    if (stage && t.config.Get("stage") != std::string(ToString(*stage))) continue;
    out.push_back(id);
  }
  return out;
}

std::optional<std::string> Manager::NodeOf(const TierId& id) const {
  std::lock_guard<std::recursive_mutex> l(mu_);
  auto it = tier_index_.find(id);
  if (it == tier_index_.end()) return std::nullopt;
  return it->second.node_id;
}

bool Manager::IsNodeUp(const std::string& node_id) const {
  std::lock_guard<std::recursive_mutex> l(mu_);
  auto it = nodes_.find(node_id);
  return it != nodes_.end() && it->second.node.up;
}

void Manager::SetTierListener(TierListener* listener) {
  std::lock_guard<std::recursive_mutex> l(mu_);
  listener_ = listener;
  for (auto& [id, n] : nodes_) n.controller->SetListener(listener);
}

void Manager::RecoverRegistrationStore(DemandStore* fresh) {
  std::lock_guard<std::recursive_mutex> l(mu_);
  registration_store_ = fresh;
  for (const NodeEntry* e : NodesInOrderLocked()) {
    RecordEvent("register_node", {{"host", e->node.host}, {"node", e->node.node_id}});
    for (const TierId& t : e->node.tiers) {
      RecordEvent("allocate_tier", {{"node", e->node.node_id},
                                    {"tier", t.ToString()},
                                    {"kind", std::string(ToString(t.kind))}});
    }
  }
}

void Manager::Audit() const {
  std::lock_guard<std::recursive_mutex> l(mu_);
  std::size_t listed = 0;
  for (const auto& [node_id, n] : nodes_) {
    auto hosted = n.controller->Tiers();
    std::vector<TierId> listed_here = n.node.tiers;
    std::sort(listed_here.begin(), listed_here.end());
    if (hosted != listed_here) throw std::logic_error("controller tiers disagree with registry on " + node_id);
    for (const TierId& t : n.node.tiers) {
      auto it = tier_index_.find(t);
      if (it == tier_index_.end() || it->second.node_id != node_id) {
        throw std::logic_error("tier " + t.ToString() + " missing from tier index");
      }
    }
    listed += n.node.tiers.size();
  }
  for (const auto& [id, t] : tier_index_) {
    if (!nodes_.contains(t.node_id)) throw std::logic_error("tier index points at unknown node");
  }
  if (listed != tier_index_.size()) throw std::logic_error("tier index size disagrees with node lists");
}

}  // namespace edupipe
