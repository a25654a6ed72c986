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

#include "edupipe/store.h"

#include <algorithm>
#include <stdexcept>

namespace edupipe {

std::string_view ToString(PutStatus s) {
  switch (s) {
    case PutStatus::kEnqueued: return "Enqueued";
    case PutStatus::kAlreadyComputed: return "AlreadyComputed";
    case PutStatus::kAlreadyInFlight: return "AlreadyInFlight";
  }
  return "?";
}

std::string_view ToString(SignatureLocation s) {
  switch (s) {
    case SignatureLocation::kUnknown: return "Unknown";
    case SignatureLocation::kPending: return "Pending";
    case SignatureLocation::kInProcess: return "InProcess";
    case SignatureLocation::kComputed: return "Computed";
  }
  return "?";
}

DemandStore::DemandStore(std::string id) : id_(std::move(id)) {}

void DemandStore::SetClaimObserver(ClaimObserver observer) {
  std::lock_guard<std::mutex> l(mu_);
  claim_observer_ = std::move(observer);
}

void DemandStore::SetCommitLog(CommitLog* log) {
  std::lock_guard<std::mutex> l(mu_);
  commit_log_ = log;
}

void DemandStore::SetAuditEveryOperation(bool on) {
  std::lock_guard<std::mutex> l(mu_);
  audit_every_op_ = on;
}

void DemandStore::EnqueueLocked(Demand d, std::int64_t seq) {
  Signature sig = d.signature();
  auto& q = queues_[d.operation()];
  if (seq < 0) {
    q.emplace_front(seq, sig);
  } else {
    q.emplace_back(seq, sig);
  }
  locations_[sig] = SignatureLocation::kPending;
  pending_.insert_or_assign(sig, PendingEntry{std::move(d), seq});
}

PutOutcome DemandStore::PutDemand(const Demand& d) {
  if (d.state() != DemandState::kPending) {
    Fail(ErrorCode::kIllegalTransition, "put_demand requires a Pending demand");
  }
  std::lock_guard<std::mutex> l(mu_);
  const Signature& sig = d.signature();
  ++stats_.lookups;
  if (auto it = warehouse_.find(sig); it != warehouse_.end()) {
    ++stats_.hits;
    return {PutStatus::kAlreadyComputed, it->second};
  }
  ++stats_.misses;
  if (auto it = pending_.find(sig); it != pending_.end()) {
    it->second.demand = it->second.demand.Touched();
    return {PutStatus::kAlreadyInFlight, std::nullopt};
  }
  if (auto it = in_process_.find(sig); it != in_process_.end()) {
    it->second.demand = it->second.demand.Touched();
    return {PutStatus::kAlreadyInFlight, std::nullopt};
  }
  EnqueueLocked(d, next_back_seq_++);
  ++stats_.puts;
  if (audit_every_op_) AuditTouchedLocked(sig);
  return {PutStatus::kEnqueued, std::nullopt};
}

std::optional<Demand> DemandStore::ClaimPending(const std::string& tier,
                                                const OperationPool& pool, TimestampMs now) {
  std::lock_guard<std::mutex> l(mu_);
  std::deque<std::pair<std::int64_t, Signature>>* best = nullptr;
  for (const auto& op : pool) {
    auto qit = queues_.find(op);
    if (qit == queues_.end()) continue;
    auto& q = qit->second;
    while (!q.empty()) {
      auto pit = pending_.find(q.front().second);
      if (pit != pending_.end() && pit->second.seq == q.front().first) break;
      q.pop_front();
    }
    if (q.empty()) continue;
    if (best == nullptr || q.front().first < best->front().first) best = &q;
  }
  if (best == nullptr) return std::nullopt;

  auto [seq, sig] = best->front();
  best->pop_front();
  auto node = pending_.extract(sig);
  Demand claimed = Transition(node.mapped().demand, DemandState::kInProcess, tier, now).Touched();
  in_process_.emplace(sig, InProcessEntry{claimed, tier, now, seq});
  locations_[sig] = SignatureLocation::kInProcess;
  ++stats_.claims;
  if (audit_every_op_) AuditTouchedLocked(sig);
  if (claim_observer_) claim_observer_(ClaimInfo{sig, tier, now});
  return claimed;
}

StoreStatus DemandStore::StoreResult(const Signature& sig, const Bytes& result,
                                     const std::string& tier, TimestampMs now) {
  CommitLog* log = nullptr;
  {
    std::lock_guard<std::mutex> l(mu_);
    if (warehouse_.contains(sig)) {
      ++stats_.duplicates;
      return StoreStatus::kDuplicate;
    }
    if (commit_log_ != nullptr) commit_log_->OnCommit(sig, std::nullopt, result);

    if (auto it = in_process_.find(sig); it != in_process_.end()) {
      // Run the state machine so a bad edge is caught even though the
      // demand record leaves the store here.
      (void)Transition(it->second.demand, DemandState::kComputed, tier, now, result);
      in_process_.erase(it);
    } else {
      // A late or adopted result for a demand that was requeued or lost.
      pending_.erase(sig);
    }
    warehouse_.emplace(sig, result);
    locations_[sig] = SignatureLocation::kComputed;
    ++stats_.stores;
    if (audit_every_op_) AuditTouchedLocked(sig);
    log = commit_log_;
  }
  if (log != nullptr) log->AfterCommit(*this);
  return StoreStatus::kStored;
}

std::optional<Bytes> DemandStore::Lookup(const Signature& sig) {
  std::lock_guard<std::mutex> l(mu_);
  ++stats_.lookups;
  auto it = warehouse_.find(sig);
  if (it == warehouse_.end()) {
    ++stats_.misses;
    return std::nullopt;
  }
  ++stats_.hits;
  return it->second;
}

std::vector<Signature> DemandStore::RequeueExpired(TimestampMs now, DurationMs lease) {
  if (lease <= 0) Fail(ErrorCode::kBadParameter, "lease must be positive");
  std::lock_guard<std::mutex> l(mu_);
  std::vector<const InProcessEntry*> expired;
  for (const auto& [sig, entry] : in_process_) {
    if (now - entry.claimed_at > lease) expired.push_back(&entry);
  }
  std::sort(expired.begin(), expired.end(),
            [](const InProcessEntry* a, const InProcessEntry* b) { return a->seq < b->seq; });

  std::vector<Signature> out;
  out.reserve(expired.size());
  for (const auto* e : expired) out.push_back(e->demand.signature());

  // Walk newest-first so the oldest requeued demand ends up at the very front.
  for (auto it = out.rbegin(); it != out.rend(); ++it) {
    auto node = in_process_.extract(*it);
    Demand back = Transition(node.mapped().demand, DemandState::kPending, id_, now);
    EnqueueLocked(std::move(back), --next_front_seq_);
    ++stats_.requeues;
    if (audit_every_op_) AuditTouchedLocked(*it);
  }
  return out;
}

SignatureLocation DemandStore::Locate(const Signature& sig) {
  std::lock_guard<std::mutex> l(mu_);
  auto it = locations_.find(sig);
  return it == locations_.end() ? SignatureLocation::kUnknown : it->second;
}

std::size_t DemandStore::LiveClaimsHeldBy(const std::string& tier, TimestampMs now,
                                          DurationMs lease) {
  std::lock_guard<std::mutex> l(mu_);
  std::size_t n = 0;
  for (const auto& [sig, entry] : in_process_) {
    if (entry.tier == tier && now - entry.claimed_at <= lease) ++n;
  }
  return n;
}

StoreStats DemandStore::Stats() {
  std::lock_guard<std::mutex> l(mu_);
  return stats_;
}

bool DemandStore::InstallResult(const Signature& sig, Bytes result) {
  std::lock_guard<std::mutex> l(mu_);
  if (warehouse_.contains(sig)) return false;
  in_process_.erase(sig);
  pending_.erase(sig);
  warehouse_.emplace(sig, std::move(result));
  locations_[sig] = SignatureLocation::kComputed;
  if (audit_every_op_) AuditTouchedLocked(sig);
  return true;
}

void DemandStore::AppendHistory(const Demand& d) {
  std::lock_guard<std::mutex> l(mu_);
  history_.push_back(d);
}

std::vector<Demand> DemandStore::History() const {
  std::lock_guard<std::mutex> l(mu_);
  return history_;
}

std::optional<Bytes> DemandStore::Peek(const Signature& sig) const {
  std::lock_guard<std::mutex> l(mu_);
  auto it = warehouse_.find(sig);
  if (it == warehouse_.end()) return std::nullopt;
  return it->second;
}

std::map<Signature, Bytes> DemandStore::WarehouseSnapshot() const {
  std::lock_guard<std::mutex> l(mu_);
  return {warehouse_.begin(), warehouse_.end()};
}

Sha256Digest DemandStore::WarehouseDigest() const {
  Bytes canonical;
  for (const auto& [sig, value] : WarehouseSnapshot()) {
    PutBytes(canonical, sig.view());
    PutLengthPrefixed(canonical, value);
  }
  return Sha256(canonical);
}

std::vector<Demand> DemandStore::PendingInOrder() const {
  std::lock_guard<std::mutex> l(mu_);
  std::vector<const PendingEntry*> entries;
  for (const auto& [sig, e] : pending_) entries.push_back(&e);
  std::sort(entries.begin(), entries.end(),
            [](const PendingEntry* a, const PendingEntry* b) { return a->seq < b->seq; });
  std::vector<Demand> out;
  for (const auto* e : entries) out.push_back(e->demand);
  return out;
}

std::vector<ClaimInfo> DemandStore::Claims() const {
  std::lock_guard<std::mutex> l(mu_);
  std::vector<ClaimInfo> out;
  for (const auto& [sig, e] : in_process_) out.push_back({sig, e.tier, e.claimed_at});
  std::sort(out.begin(), out.end(),
            [](const ClaimInfo& a, const ClaimInfo& b) { return a.signature < b.signature; });
  return out;
}

std::size_t DemandStore::pending_size() const {
  std::lock_guard<std::mutex> l(mu_);
  return pending_.size();
}

std::size_t DemandStore::in_process_size() const {
  std::lock_guard<std::mutex> l(mu_);
  return in_process_.size();
}

std::size_t DemandStore::warehouse_size() const {
  std::lock_guard<std::mutex> l(mu_);
  return warehouse_.size();
}

void DemandStore::AuditTouchedLocked(const Signature& sig) const {
  int where = static_cast<int>(pending_.contains(sig)) +
              static_cast<int>(in_process_.contains(sig)) +
              static_cast<int>(warehouse_.contains(sig));
  if (where > 1) {
    throw std::logic_error("partition violated: " + sig.Hex() + " in " + std::to_string(where) +
                           " sets");
  }
  // Every located signature sits in exactly one set, so the set sizes must
  // add up to the size of the location index.
  if (pending_.size() + in_process_.size() + warehouse_.size() != locations_.size()) {
    throw std::logic_error("partition violated: set sizes do not match location index");
  }
}

void DemandStore::AuditLocked() const {
  for (const auto& [sig, e] : pending_) {
    if (in_process_.contains(sig) || warehouse_.contains(sig)) {
      throw std::logic_error("partition violated: pending " + sig.Hex());
    }
    if (e.demand.state() != DemandState::kPending) {
      throw std::logic_error("pending entry not in Pending state");
    }
  }
  for (const auto& [sig, e] : in_process_) {
    if (warehouse_.contains(sig)) throw std::logic_error("partition violated: in-process " + sig.Hex());
    if (e.demand.state() != DemandState::kInProcess) {
      throw std::logic_error("in-process entry not in InProcess state");
    }
  }
  for (const auto& [sig, loc] : locations_) {
    bool ok = (loc == SignatureLocation::kPending && pending_.contains(sig)) ||
              (loc == SignatureLocation::kInProcess && in_process_.contains(sig)) ||
              (loc == SignatureLocation::kComputed && warehouse_.contains(sig));
    if (!ok) throw std::logic_error("location index disagrees for " + sig.Hex());
  }
  if (pending_.size() + in_process_.size() + warehouse_.size() != locations_.size()) {
    throw std::logic_error("partition violated: set sizes do not match location index");
  }
}

void DemandStore::Audit() const {
  std::lock_guard<std::mutex> l(mu_);
  AuditLocked();
}

}  // namespace edupipe
