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
#include <compare>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "edupipe/broadcast.h"
#include "edupipe/clock.h"
#include "edupipe/demand.h"
#include "edupipe/store.h"

namespace edupipe {

// Pipeline stages: sample loading, preprocessing, feature extraction,
// training/classification.
enum class Stage : std::uint8_t { kSL = 0, kP = 1, kFE = 2, kTC = 3 };

inline constexpr Stage kAllStages[] = {Stage::kSL, Stage::kP, Stage::kFE, Stage::kTC};

std::string_view ToString(Stage s);
Stage ParseStage(std::string_view s);

enum class TierKind : std::uint8_t { kDGT = 0, kDWT = 1, kDST = 2, kGMT = 3 };

std::string_view ToString(TierKind k);
TierKind ParseTierKind(std::string_view s);

struct TierId {
  std::string node_id;
  TierKind kind = TierKind::kDWT;
  std::uint64_t instance = 0;

  // "node-0/DWT/3"
  std::string ToString() const;
  static TierId Parse(std::string_view s);

  auto operator<=>(const TierId&) const = default;
};

// String property map with prototype (clone) semantics.
class Configuration {
 public:
  Configuration() = default;
  using Map = std::map<std::string, std::string, std::less<>>;

  explicit Configuration(Map settings) : settings_(std::move(settings)) {}

  // Parses "key = value" lines; '#' and ';' start comments. Section headers
  // prefix keys as "section.key".
  static Configuration FromIniText(std::string_view text);
  static Configuration FromIniFile(const std::string& path);

  Configuration Clone() const { return Configuration(settings_); }

  bool Has(std::string_view key) const;
  std::optional<std::string> Get(std::string_view key) const;
  std::string GetOr(std::string_view key, std::string fallback) const;
  std::int64_t GetInt(std::string_view key, std::int64_t fallback) const;
  // Throws kBadConfig if absent.
  std::string Require(std::string_view key) const;
  void Set(std::string key, std::string value);
  // Overlays every entry of `other` on top of this map.
  void Merge(const Configuration& other);

  const Map& settings() const { return settings_; }

  bool operator==(const Configuration&) const = default;

 private:
  Map settings_;
};

OperationPool ParsePool(std::string_view comma_separated);
std::string FormatPool(const OperationPool& pool);

// What a generator traverses for one stage: operation, parameters, and the
// pool of operations that stage's workers accept.
struct StagePlan {
  Stage stage = Stage::kSL;
  std::string operation;
  Params params;
  OperationPool pool;

  // Throws kInvalidSpec if the pool does not contain the operation.
  void Validate() const;

  bool operator==(const StagePlan&) const = default;
};

// Operation dispatch for workers. Executors are compiled in and selected by
// operation name.
class ExecutorRegistry {
 public:
  using Executor = std::function<Bytes(const Demand&)>;

  void Register(Stage stage, std::string operation, Executor fn);
  bool Has(std::string_view operation) const;
  OperationPool OperationsFor(Stage stage) const;
  // Throws kUnsupportedMethod for unknown operations.
  Bytes Execute(const Demand& d) const;

 private:
  struct Entry {
    Stage stage;
    Executor fn;
  };
  std::map<std::string, Entry, std::less<>> executors_;
};

// Stage result envelope stored in the warehouse: status byte then either
// the executor output (ok) or a u32 BE error code and message (failed).
struct StageOutcome {
  bool ok = true;
  Bytes body;
  ErrorCode error = ErrorCode::kExecutorFailure;
  std::string message;
};

Bytes EncodeStageSuccess(ByteView body);
Bytes EncodeStageFailure(ErrorCode code, std::string_view message);
StageOutcome DecodeStageOutcome(ByteView stored);

// Base of every tier instance hosted by a node controller.
class TierWrapper {
 public:
  TierWrapper(TierId id, Configuration config);
  virtual ~TierWrapper() = default;

  TierWrapper(const TierWrapper&) = delete;
  TierWrapper& operator=(const TierWrapper&) = delete;

  const TierId& id() const { return id_; }
  const Configuration& config() const { return config_; }
  std::optional<Stage> stage() const;

  // One cooperative slice of work. Default: nothing to do.
  virtual void Step(TimestampMs /*now*/) {}

  // A crashed tier stops stepping and heartbeating; hosts skip it.
  void Crash() { crashed_ = true; }
  bool crashed() const { return crashed_; }

 private:
  TierId id_;
  Configuration config_;
  std::atomic<bool> crashed_{false};
};

// Demand Generator Tier: wraps stage inputs into procedural demands and
// waits for their values.
class DemandGenerator final : public TierWrapper {
 public:
  DemandGenerator(TierId id, Configuration config, StoreEndpoint* store,
                  DemandIdGenerator* ids);

  struct Generated {
    Signature signature;
    PutStatus status = PutStatus::kEnqueued;
    std::optional<Bytes> result;
  };

  // Throws kStoreUnreachable if the store cannot be reached.
  Generated Generate(const StagePlan& plan, ByteView input);
  std::optional<Bytes> Poll(const Signature& sig);
  // Polls until the value is available. `idle` runs between polls (sleeps
  // 10 ms by default). Throws kTimeout.
  Bytes Await(const Signature& sig, DurationMs timeout, const Clock& clock,
              const std::function<void()>& idle = {});

  std::uint64_t generated() const { return generated_; }

 private:
  StoreEndpoint* store_;
  DemandIdGenerator* ids_;
  std::atomic<std::uint64_t> generated_{0};
};

// Demand Worker Tier: claims demands in its operation pool, executes them,
// and stores the results.
class DemandWorker final : public TierWrapper, public ResultPeer {
 public:
  DemandWorker(TierId id, Configuration config, StoreEndpoint* store,
               const ExecutorRegistry* executors, OperationPool pool);

  enum class RunKind { kExecuted, kAdopted, kIdle };
  struct RunResult {
    RunKind kind = RunKind::kIdle;
    std::optional<Signature> signature;
  };

  // Claim, execute, store in one call. Domain errors from the executor are
  // stored as failed stage outcomes; any other executor exception leaves
  // the claim to lease expiry and is rethrown as kExecutorFailure.
  RunResult RunOnce(TimestampMs now);

  // Latency-aware variant for cooperative hosts: claims on one step and
  // completes once `exec_latency_ms` has elapsed.
  void Step(TimestampMs now) override;

  const OperationPool& pool() const { return pool_; }
  std::uint64_t executions() const { return executions_; }
  std::uint64_t adoptions() const { return adoptions_; }
  bool busy() const;

  // Broadcast-before-compute: ask peers before executing a claimed demand.
  void EnableBroadcast(std::vector<ResultPeer*> peers, const Clock* clock, DurationMs timeout);

  // Results this worker has computed, served to peers.
  std::optional<Bytes> QueryResult(const Signature& sig) override;

  using ExecutionObserver = std::function<void(const TierId&, const Demand&)>;
  void SetExecutionObserver(ExecutionObserver observer) { observer_ = std::move(observer); }

 private:
  RunResult Complete(const Demand& claimed, TimestampMs now);
  Bytes ExecuteEnveloped(const Demand& d);

  StoreEndpoint* store_;
  const ExecutorRegistry* executors_;
  OperationPool pool_;
  DurationMs exec_latency_ms_ = 0;

  mutable std::mutex mu_;
  std::optional<Demand> in_flight_;
  TimestampMs in_flight_done_at_ = 0;
  std::unordered_map<Signature, Bytes, SignatureHash> local_results_;

  std::vector<ResultPeer*> peers_;
  const Clock* broadcast_clock_ = nullptr;
  DurationMs broadcast_timeout_ = 0;
  bool broadcast_ = false;

  ExecutionObserver observer_;
  std::atomic<std::uint64_t> executions_{0};
  std::atomic<std::uint64_t> adoptions_{0};
};

// TAFactory analogue: builds tier wrappers from configuration.
class TierFactory {
 public:
  virtual ~TierFactory() = default;
  // Throws kTierFactoryFailure if the kind cannot be built.
  virtual std::unique_ptr<TierWrapper> Create(const TierId& id, const Configuration& config) = 0;
};

// Builds DGTs and DWTs bound to one store and executor registry. DST and
// GMT instances are hosted by the runtime, not by node controllers.
class StandardTierFactory final : public TierFactory {
 public:
  StandardTierFactory(StoreEndpoint* store, const ExecutorRegistry* executors,
                      DemandIdGenerator* ids);

  std::unique_ptr<TierWrapper> Create(const TierId& id, const Configuration& config) override;

  void set_store(StoreEndpoint* store) { store_ = store; }

 private:
  StoreEndpoint* store_;
  const ExecutorRegistry* executors_;
  DemandIdGenerator* ids_;
};

// Notified when controllers add or remove tiers; live hosts start and join
// tier threads here.
class TierListener {
 public:
  virtual ~TierListener() = default;
  virtual void OnTierAdded(TierWrapper& tier) = 0;
  // Called before the tier is destroyed.
  virtual void OnTierRemoved(TierWrapper& tier) = 0;
};

// NodeController / DGTController analogue: creates, tracks and removes the
// tiers hosted on one node.
class NodeController {
 public:
  NodeController(std::string node_id, TierFactory* factory);
  ~NodeController();

  const std::string& node_id() const { return node_id_; }

  // Requires `kind` and `node_id` keys; `node_id` must name this node.
  TierId AddTier(const Configuration& config);
  void RemoveTier(const TierId& id);
  TierWrapper* Find(const TierId& id) const;
  std::vector<TierId> Tiers() const;
  std::uint64_t next_instance() const;

  void SetListener(TierListener* listener);

 private:
  std::string node_id_;
  TierFactory* factory_;
  mutable std::mutex mu_;
  std::uint64_t instance_counter_ = 0;
  std::map<TierId, std::unique_ptr<TierWrapper>> active_;
  TierListener* listener_ = nullptr;
};

}  // namespace edupipe
