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

#include "edupipe/tiers.h"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <fstream>
#include <sstream>
#include <thread>

namespace edupipe {

std::string_view ToString(Stage s) {
  switch (s) {
    case Stage::kSL: return "SL";
    case Stage::kP: return "P";
    case Stage::kFE: return "FE";
    case Stage::kTC: return "TC";
  }
  return "?";
}

Stage ParseStage(std::string_view s) {
  for (Stage st : kAllStages) {
    if (ToString(st) == s) return st;
  }
  Fail(ErrorCode::kBadConfig, "unknown stage '" + std::string(s) + "'");
}

std::string_view ToString(TierKind k) {
  switch (k) {
    case TierKind::kDGT: return "DGT";
    case TierKind::kDWT: return "DWT";
    case TierKind::kDST: return "DST";
    case TierKind::kGMT: return "GMT";
  }
  return "?";
}

TierKind ParseTierKind(std::string_view s) {
  for (auto k : {TierKind::kDGT, TierKind::kDWT, TierKind::kDST, TierKind::kGMT}) {
    if (ToString(k) == s) return k;
  }
  Fail(ErrorCode::kBadConfig, "unknown tier kind '" + std::string(s) + "'");
}

std::string TierId::ToString() const {
  return node_id + "/" + std::string(edupipe::ToString(kind)) + "/" + std::to_string(instance);
}

TierId TierId::Parse(std::string_view s) {
  auto a = s.find('/');
  auto b = s.rfind('/');
  if (a == std::string_view::npos || a == b) {
    Fail(ErrorCode::kBadConfig, "tier id must look like node/KIND/instance: '" + std::string(s) + "'");
  }
  TierId id;
  id.node_id = std::string(s.substr(0, a));
  id.kind = ParseTierKind(s.substr(a + 1, b - a - 1));
  try {
    id.instance = std::stoull(std::string(s.substr(b + 1)));
  } catch (const std::exception&) {
    Fail(ErrorCode::kBadConfig, "bad tier instance in '" + std::string(s) + "'");
  }
  return id;
}

Configuration Configuration::FromIniText(std::string_view text) {
  // The ini parser only knows ';' comments.
  std::istringstream lines{std::string(text)};
  std::ostringstream normalized;
  for (std::string line; std::getline(lines, line);) {
    auto first = line.find_first_not_of(" \t");
    if (first != std::string::npos && line[first] == '#') line[first] = ';';
    normalized << line << '\n';
  }
  boost::property_tree::ptree tree;
  std::istringstream in(normalized.str());
  try {
    boost::property_tree::read_ini(in, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    Fail(ErrorCode::kBadConfig, e.what());
  }
  Configuration cfg;
  for (const auto& [key, node] : tree) {
    if (node.empty()) {
      cfg.Set(key, node.data());
    } else {
      for (const auto& [sub, leaf] : node) cfg.Set(key + "." + sub, leaf.data());
    }
  }
  return cfg;
}

Configuration Configuration::FromIniFile(const std::string& path) {
  std::ifstream in(path);
  if (!in) Fail(ErrorCode::kBadConfig, "cannot open config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return FromIniText(ss.str());
}

bool Configuration::Has(std::string_view key) const { return settings_.find(key) != settings_.end(); }

std::optional<std::string> Configuration::Get(std::string_view key) const {
  auto it = settings_.find(key);
  if (it == settings_.end()) return std::nullopt;
  return it->second;
}

std::string Configuration::GetOr(std::string_view key, std::string fallback) const {
  auto v = Get(key);
  return v ? *v : std::move(fallback);
}

std::int64_t Configuration::GetInt(std::string_view key, std::int64_t fallback) const {
  auto v = Get(key);
  if (!v) return fallback;
  try {
    std::size_t used = 0;
    std::int64_t n = std::stoll(*v, &used);
    if (used != v->size()) throw std::invalid_argument("trailing");
    return n;
  } catch (const std::exception&) {
    Fail(ErrorCode::kBadConfig, "key '" + std::string(key) + "' is not an integer: '" + *v + "'");
  }
}

std::string Configuration::Require(std::string_view key) const {
  auto v = Get(key);
  if (!v) Fail(ErrorCode::kBadConfig, "missing configuration key '" + std::string(key) + "'");
  return *v;
}

void Configuration::Set(std::string key, std::string value) {
  settings_.insert_or_assign(std::move(key), std::move(value));
}

void Configuration::Merge(const Configuration& other) {
  for (const auto& [k, v] : other.settings_) settings_.insert_or_assign(k, v);
}

OperationPool ParsePool(std::string_view comma_separated) {
  OperationPool pool;
  std::size_t start = 0;
  while (start <= comma_separated.size()) {
    auto end = comma_separated.find(',', start);
    if (end == std::string_view::npos) end = comma_separated.size();
    std::string_view item = comma_separated.substr(start, end - start);
    while (!item.empty() && item.front() == ' ') item.remove_prefix(1);
    while (!item.empty() && item.back() == ' ') item.remove_suffix(1);
    if (!item.empty()) pool.emplace(item);
    start = end + 1;
  }
  return pool;
}

std::string FormatPool(const OperationPool& pool) {
  std::string out;
  for (const auto& op : pool) {
    if (!out.empty()) out += ',';
    out += op;
  }
  return out;
}

void StagePlan::Validate() const {
  if (operation.empty()) Fail(ErrorCode::kInvalidSpec, "stage plan has no operation");
  if (!pool.contains(operation)) {
    Fail(ErrorCode::kInvalidSpec, "pool for stage " + std::string(ToString(stage)) +
                                      " does not contain '" + operation + "'");
  }
}

void ExecutorRegistry::Register(Stage stage, std::string operation, Executor fn) {
  executors_.insert_or_assign(std::move(operation), Entry{stage, std::move(fn)});
}

bool ExecutorRegistry::Has(std::string_view operation) const {
  return executors_.find(operation) != executors_.end();
}

OperationPool ExecutorRegistry::OperationsFor(Stage stage) const {
  OperationPool pool;
  for (const auto& [op, e] : executors_) {
    if (e.stage == stage) pool.insert(op);
  }
  return pool;
}

Bytes ExecutorRegistry::Execute(const Demand& d) const {
  auto it = executors_.find(d.operation());
  if (it == executors_.end()) {
    Fail(ErrorCode::kUnsupportedMethod, "no executor for operation '" + d.operation() + "'");
  }
  return it->second.fn(d);
}

Bytes EncodeStageSuccess(ByteView body) {
  Bytes out;
  out.reserve(body.size() + 1);
  PutU8(out, 0);
  PutBytes(out, body);
  return out;
}

Bytes EncodeStageFailure(ErrorCode code, std::string_view message) {
  Bytes out;
  PutU8(out, 1);
  PutU32BE(out, static_cast<std::uint32_t>(code));
  PutString(out, message);
  return out;
}

StageOutcome DecodeStageOutcome(ByteView stored) {
  ByteReader r(stored);
  StageOutcome o;
  std::uint8_t status = r.U8();
  if (status == 0) {
    o.ok = true;
    o.body = r.TakeBytes(r.remaining());
  } else if (status == 1) {
    o.ok = false;
    o.error = static_cast<ErrorCode>(r.U32BE());
    o.message = ToString(r.Take(r.remaining()));
  } else {
    Fail(ErrorCode::kMalformedRecord, "bad stage outcome status");
  }
  return o;
}

TierWrapper::TierWrapper(TierId id, Configuration config)
    : id_(std::move(id)), config_(std::move(config)) {}

std::optional<Stage> TierWrapper::stage() const {
  auto s = config_.Get("stage");
  if (!s) return std::nullopt;
  return ParseStage(*s);
}

DemandGenerator::DemandGenerator(TierId id, Configuration config, StoreEndpoint* store,
                                 DemandIdGenerator* ids)
    : TierWrapper(std::move(id), std::move(config)), store_(store), ids_(ids) {}

DemandGenerator::Generated DemandGenerator::Generate(const StagePlan& plan, ByteView input) {
  if (store_ == nullptr) Fail(ErrorCode::kStoreUnreachable, "generator is not bound to a store");
  Demand d = Demand::Create(ids_->Next(), DemandType::kProcedural, std::string(ToString(plan.stage)),
                            plan.operation, plan.params, Bytes(input.begin(), input.end()));
  PutOutcome o = store_->PutDemand(d);
  ++generated_;
  return {d.signature(), o.status, std::move(o.result)};
}

std::optional<Bytes> DemandGenerator::Poll(const Signature& sig) { return store_->Lookup(sig); }

Bytes DemandGenerator::Await(const Signature& sig, DurationMs timeout, const Clock& clock,
                             const std::function<void()>& idle) {
  const TimestampMs deadline = clock.NowMs() + timeout;
  while (true) {
    if (auto r = Poll(sig)) return std::move(*r);
    if (clock.NowMs() >= deadline) {
      Fail(ErrorCode::kTimeout, "no value for " + sig.Hex() + " within " + std::to_string(timeout) + " ms");
    }
    if (idle) {
      idle();
    } else {
      std::this_thread::sleep_for(std::chrono::milliseconds(10));
    }
  }
}

DemandWorker::DemandWorker(TierId id, Configuration config, StoreEndpoint* store,
                           const ExecutorRegistry* executors, OperationPool pool)
    : TierWrapper(std::move(id), std::move(config)),
      store_(store),
      executors_(executors),
      pool_(std::move(pool)) {
  if (pool_.empty()) Fail(ErrorCode::kBadConfig, "worker pool must be nonempty");
  exec_latency_ms_ = this->config().GetInt("exec_latency_ms", 0);
}

bool DemandWorker::busy() const {
  std::lock_guard<std::mutex> l(mu_);
  return in_flight_.has_value();
}

void DemandWorker::EnableBroadcast(std::vector<ResultPeer*> peers, const Clock* clock,
                                   DurationMs timeout) {
  std::lock_guard<std::mutex> l(mu_);
  peers_ = std::move(peers);
  broadcast_clock_ = clock;
  broadcast_timeout_ = timeout;
  broadcast_ = true;
}

std::optional<Bytes> DemandWorker::QueryResult(const Signature& sig) {
  if (crashed()) return std::nullopt;
  std::lock_guard<std::mutex> l(mu_);
  auto it = local_results_.find(sig);
  if (it == local_results_.end()) return std::nullopt;
  return it->second;
}

Bytes DemandWorker::ExecuteEnveloped(const Demand& d) {
  try {
    return EncodeStageSuccess(executors_->Execute(d));
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kExecutorFailure) throw;
    return EncodeStageFailure(e.code(), e.what());
  } catch (const std::exception& e) {
    Fail(ErrorCode::kExecutorFailure, d.signature().Hex() + ": " + e.what());
  }
}

DemandWorker::RunResult DemandWorker::Complete(const Demand& claimed, TimestampMs now) {
  const Signature& sig = claimed.signature();
  std::vector<ResultPeer*> peers;
  bool broadcast;
  {
    std::lock_guard<std::mutex> l(mu_);
    peers = peers_;
    broadcast = broadcast_;
  }
  RunKind kind = RunKind::kExecuted;
  Bytes result;
  bool adopted = false;
  if (broadcast) {
    auto outcome = BroadcastBeforeCompute(sig, peers, *broadcast_clock_, broadcast_timeout_);
    if (auto* a = std::get_if<Adopted>(&outcome)) {
      result = std::move(a->result);
      adopted = true;
      kind = RunKind::kAdopted;
    }
  }
  if (!adopted) {
    result = ExecuteEnveloped(claimed);
    ++executions_;
    if (observer_) observer_(id(), claimed);
  } else {
    ++adoptions_;
  }
  {
    std::lock_guard<std::mutex> l(mu_);
    local_results_.insert_or_assign(sig, result);
  }
  store_->StoreResult(sig, result, id().ToString(), now);
  return {kind, sig};
}

DemandWorker::RunResult DemandWorker::RunOnce(TimestampMs now) {
  auto claimed = store_->ClaimPending(id().ToString(), pool_, now);
  if (!claimed) return {};
  if (!pool_.contains(claimed->operation())) {
    Fail(ErrorCode::kExecutorFailure, "store handed out an operation outside the pool");
  }
  return Complete(*claimed, now);
}

void DemandWorker::Step(TimestampMs now) {
  if (crashed()) return;
  std::optional<Demand> current;
  TimestampMs done_at = 0;
  {
    std::lock_guard<std::mutex> l(mu_);
    current = in_flight_;
    done_at = in_flight_done_at_;
  }
  if (!current) {
    current = store_->ClaimPending(id().ToString(), pool_, now);
    if (!current) return;
    done_at = now + exec_latency_ms_;
    std::lock_guard<std::mutex> l(mu_);
    in_flight_ = current;
    in_flight_done_at_ = done_at;
  }
  if (now < done_at) return;
  // Clear before completing: a failing executor abandons the claim, which
  // the store recovers by lease expiry.
  {
    std::lock_guard<std::mutex> l(mu_);
    in_flight_.reset();
  }
  Complete(*current, now);
}

StandardTierFactory::StandardTierFactory(StoreEndpoint* store, const ExecutorRegistry* executors,
                                         DemandIdGenerator* ids)
    : store_(store), executors_(executors), ids_(ids) {}

std::unique_ptr<TierWrapper> StandardTierFactory::Create(const TierId& id,
                                                         const Configuration& config) {
  switch (id.kind) {
    case TierKind::kDGT:
      return std::make_unique<DemandGenerator>(id, config.Clone(), store_, ids_);
    case TierKind::kDWT: {
      OperationPool pool;
      if (auto p = config.Get("pool")) {
        pool = ParsePool(*p);
      } else if (auto s = config.Get("stage")) {
        pool = executors_->OperationsFor(ParseStage(*s));
      }
      if (pool.empty()) {
        Fail(ErrorCode::kTierFactoryFailure, "worker " + id.ToString() + " has an empty pool");
      }
      for (const auto& op : pool) {
        if (!executors_->Has(op)) {
          Fail(ErrorCode::kTierFactoryFailure, "no executor for pool operation '" + op + "'");
        }
      }
      return std::make_unique<DemandWorker>(id, config.Clone(), store_, executors_, std::move(pool));
    }
    case TierKind::kDST:
    case TierKind::kGMT:
      break;
  }
  Fail(ErrorCode::kTierFactoryFailure,
       std::string(ToString(id.kind)) + " tiers are hosted by the runtime, not a node controller");
}

NodeController::NodeController(std::string node_id, TierFactory* factory)
    : node_id_(std::move(node_id)), factory_(factory) {}

NodeController::~NodeController() {
  std::map<TierId, std::unique_ptr<TierWrapper>> tiers;
  TierListener* listener;
  {
    std::lock_guard<std::mutex> l(mu_);
    tiers.swap(active_);
    listener = listener_;
  }
  if (listener != nullptr) {
    for (auto& [id, tier] : tiers) listener->OnTierRemoved(*tier);
  }
}

void NodeController::SetListener(TierListener* listener) {
  std::lock_guard<std::mutex> l(mu_);
  listener_ = listener;
}

TierId NodeController::AddTier(const Configuration& config) {
  TierKind kind = ParseTierKind(config.Require("kind"));
  std::string node = config.Require("node_id");
  if (node != node_id_) {
    Fail(ErrorCode::kBadConfig, "tier config names node '" + node + "' but controller is '" + node_id_ + "'");
  }
  TierWrapper* added = nullptr;
  TierListener* listener = nullptr;
  TierId id;
  {
    std::lock_guard<std::mutex> l(mu_);
    id = TierId{node_id_, kind, instance_counter_};
    std::unique_ptr<TierWrapper> tier;
    try {
      tier = factory_->Create(id, config);
    } catch (const Error& e) {
      if (e.code() == ErrorCode::kTierFactoryFailure) throw;
      throw Error(ErrorCode::kTierFactoryFailure, e.what());
    }
    ++instance_counter_;
    added = tier.get();
    active_.emplace(id, std::move(tier));
    listener = listener_;
  }
  if (listener != nullptr) listener->OnTierAdded(*added);
  return id;
}

void NodeController::RemoveTier(const TierId& id) {
  std::unique_ptr<TierWrapper> removed;
  TierListener* listener;
  {
    std::lock_guard<std::mutex> l(mu_);
    auto it = active_.find(id);
    if (it == active_.end()) Fail(ErrorCode::kUnknownTier, id.ToString());
    removed = std::move(it->second);
    active_.erase(it);
    listener = listener_;
  }
  removed->Crash();
  if (listener != nullptr) listener->OnTierRemoved(*removed);
}

TierWrapper* NodeController::Find(const TierId& id) const {
  std::lock_guard<std::mutex> l(mu_);
  auto it = active_.find(id);
  return it == active_.end() ? nullptr : it->second.get();
}

std::vector<TierId> NodeController::Tiers() const {
  std::lock_guard<std::mutex> l(mu_);
  std::vector<TierId> out;
  for (const auto& [id, t] : active_) out.push_back(id);
  return out;
}

std::uint64_t NodeController::next_instance() const {
  std::lock_guard<std::mutex> l(mu_);
  return instance_counter_;
}

}  // namespace edupipe
