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

#include "edupipe/simharness.h"

#include <boost/algorithm/string/case_conv.hpp>
#include <boost/algorithm/string/predicate.hpp>
#include <boost/algorithm/string/classification.hpp>
#include <boost/algorithm/string/split.hpp>
#include <boost/algorithm/string/trim.hpp>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <fstream>
#include <set>
#include <sstream>

namespace edupipe {

namespace {

constexpr std::uint64_t kMaxTicks = 1'000'000;

std::vector<std::string> Words(const std::string& text) {
  std::vector<std::string> out;
  std::string t = boost::algorithm::trim_copy(text);
  if (t.empty()) return out;
  boost::algorithm::split(out, t, boost::is_any_of(" \t"), boost::token_compress_on);
  return out;
}

bool ParseBool(const std::string& key, const std::string& value) {
  std::string v = boost::algorithm::to_lower_copy(boost::algorithm::trim_copy(value));
  if (v == "1" || v == "true" || v == "yes" || v == "on") return true;
  if (v == "0" || v == "false" || v == "no" || v == "off") return false;
  Fail(ErrorCode::kBadConfig, key + ": expected a boolean, got '" + value + "'");
}

std::uint64_t ParseU64(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    std::string v = boost::algorithm::trim_copy(value);
    if (!v.empty() && v[0] == '-') throw std::invalid_argument("negative");
    auto n = std::stoull(v, &used);
    if (used != v.size()) throw std::invalid_argument("trailing");
    return n;
  } catch (const std::exception&) {
    Fail(ErrorCode::kBadConfig, key + ": expected a non-negative integer, got '" + value + "'");
  }
}

double ParseReal(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    std::string v = boost::algorithm::trim_copy(value);
    double d = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument("trailing");
    return d;
  } catch (const std::exception&) {
    Fail(ErrorCode::kBadConfig, key + ": expected a number, got '" + value + "'");
  }
}

RecoveryPolicy ParsePolicy(const std::string& value) {
  std::string v = boost::algorithm::to_upper_copy(boost::algorithm::trim_copy(value));
  for (int code = 0; code <= 4; ++code) {
    if (v == ToString(PolicyFromCode(code))) return PolicyFromCode(code);
  }
  return PolicyFromCode(static_cast<int>(ParseU64("policy", value)));
}

std::string Sha256Hex(std::string_view text) {
  auto d = Sha256(ByteView(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
  return ToHex(d);
}

Bytes ToBytes(const std::string& s) { return Bytes(s.begin(), s.end()); }

std::vector<JobSpec> BuildJobs(const Scenario& sc, const std::optional<TrainingSet>& pretrained) {
  const ScenarioJob& j = sc.job;
  auto corpus = MakeSyntheticCorpus(j.subjects, j.train_per_subject, j.held_out_per_subject, j.corpus_seed,
                                    j.noise);
  JobSpec base;
  base.loader = AudioFormat::kSine;
  base.preprocessor = {j.preprocessor, {}};
  base.extractor = {j.extractor, {}};
  base.classifier = {j.classifier, {}};

  std::vector<JobSpec> jobs;
  if (!pretrained) {
    for (SubjectId s = 1; s <= j.subjects; ++s) {
      JobSpec t = base;
      t.mode = JobMode::kTrain;
      t.subject_id = s;
      for (const auto& r : corpus.train) {
        if (r.subject == s) t.inputs.push_back({r.label, ToBytes(r.spec)});
      }
      jobs.push_back(std::move(t));
    }
  }
  JobSpec r = base;
  r.mode = JobMode::kRecognize;
  r.training_set = pretrained;
  for (const auto& rec : corpus.held_out) r.inputs.push_back({rec.label, ToBytes(rec.spec)});
  for (std::size_t k = 0; k < j.silent_inputs; ++k) {
    r.inputs.push_back({"silent/" + std::to_string(k),
                        ToBytes("freq=440,amp=0,dur=0.5,rate=8000,noise=0,seed=" + std::to_string(k + 1))});
  }
  jobs.push_back(std::move(r));
  return jobs;
}

ClusterOptions OptionsFor(const Scenario& sc) {
  ClusterOptions o;
  o.seed = sc.seed;
  o.manager.policy = sc.policy;
  o.manager.heartbeat_ms = sc.heartbeat_ms;
  o.manager.missed_k = sc.missed_k;
  o.manager.lease_ms = sc.lease_ms;
  o.wal = sc.wal;
  o.checkpoint_interval = sc.checkpoint_interval;
  o.broadcast = sc.broadcast;
  return o;
}

// Training on a scratch cluster; the simulated run only recognizes.
TrainingSet Pretrain(const Scenario& sc) {
  ClusterOptions o = OptionsFor(sc);
  o.wal = false;
  o.broadcast = false;
  VirtualClock clock;
  Cluster scratch(o, &clock);
  scratch.Build(TopologySpec::Uniform(1), 0);
  Scenario train_only = sc;
  std::optional<TrainingSet> current;
  auto jobs = BuildJobs(train_only, std::nullopt);
  jobs.pop_back();
  for (auto& job : jobs) {
    job.training_set = current;
    JobReport r = RunJobStepped(scratch, job, clock, sc.tick_ms, sc.stall_ticks);
    current = r.training_set;
  }
  if (!current) Fail(ErrorCode::kInvalidSpec, "pretraining produced no training set");
  return *current;
}

std::string ApplyEvent(Cluster& c, const ScenarioEvent& ev, TimestampMs now) {
  std::string text = std::string(ToString(ev.action));
  if (!ev.target.empty()) text += " " + ev.target;
  try {
    switch (ev.action) {
      case EventAction::kKillTier:
        c.KillTier(TierId::Parse(ev.target));
        break;
      case EventAction::kKillNode:
        c.KillNode(ev.target);
        break;
      case EventAction::kCrashStore:
        text += " recovered=" + std::to_string(c.CrashStore());
        break;
      case EventAction::kAllocateTier: {
        auto w = Words(ev.target);
        if (w.size() != 2) Fail(ErrorCode::kBadConfig, "AllocateTier wants 'NODE TOKEN'");
        TierSpec t = ParseTierToken(w[1]);
        Configuration overrides;
        if (!t.pool.empty()) overrides.Set("pool", t.pool);
        if (t.exec_latency_ms != 0) overrides.Set("exec_latency_ms", std::to_string(t.exec_latency_ms));
        text += " -> " + c.manager().AllocateTier(w[0], t.kind, t.stage, now, overrides).ToString();
        break;
      }
      case EventAction::kCheckpoint:
        c.Checkpoint();
        break;
      case EventAction::kShipWal:
        text += " shipped=" + std::to_string(c.ShipWal());
        break;
    }
  } catch (const Error& e) {
    text += " failed: " + std::string(e.what());
  }
  return text;
}

std::string ActionText(const RecoveryAction& a) {
  std::string text = "recovery " + std::string(ToString(a.kind)) + " " + a.failed.ToString();
  if (a.replacement) text += " -> " + a.replacement->ToString();
  if (!a.detail.empty()) text += " (" + a.detail + ")";
  return text;
}

}  // namespace

std::string_view ToString(EventAction a) {
  switch (a) {
    case EventAction::kKillTier:
      return "KillTier";
    case EventAction::kKillNode:
      return "KillNode";
    case EventAction::kCrashStore:
      return "CrashStore";
    case EventAction::kAllocateTier:
      return "AllocateTier";
    case EventAction::kCheckpoint:
      return "Checkpoint";
    case EventAction::kShipWal:
      return "ShipWal";
  }
  return "?";
}

EventAction ParseEventAction(std::string_view s) {
  for (EventAction a : {EventAction::kKillTier, EventAction::kKillNode, EventAction::kCrashStore,
                        EventAction::kAllocateTier, EventAction::kCheckpoint, EventAction::kShipWal}) {
    if (boost::algorithm::iequals(s, ToString(a))) return a;
  }
  Fail(ErrorCode::kBadConfig, "unknown event action '" + std::string(s) + "'");
}

void Scenario::Validate() const {
  for (std::size_t i = 1; i < events.size(); ++i) {
    if (events[i].tick < events[i - 1].tick) {
      Fail(ErrorCode::kInvalidSpec, "event ticks must be nondecreasing");
    }
  }
  if (topology.nodes.empty()) Fail(ErrorCode::kInvalidSpec, "scenario has no nodes");
  if (tick_ms <= 0 || stall_ticks == 0) Fail(ErrorCode::kInvalidSpec, "tick and stall bound must be positive");
  if (torn_tail_keep && !crash_after_commit) {
    Fail(ErrorCode::kInvalidSpec, "torn tail needs a crash point");
  }
}

Scenario ParseScenario(std::string_view ini_text) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  std::istringstream in{std::string(ini_text)};
  try {
    pt::ini_parser::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    Fail(ErrorCode::kBadConfig, std::string("scenario: ") + e.what());
  }

  Scenario sc;
  sc.topology.nodes.clear();
  for (const auto& [section, body] : tree) {
    if (!body.data().empty()) Fail(ErrorCode::kBadConfig, "scenario key '" + section + "' outside a section");
    for (const auto& [key, node] : body) {
      const std::string k = section + "." + key;
      const std::string v = boost::algorithm::trim_copy(node.data());
      if (section == "scenario") {
        if (key == "name") sc.name = v;
        else if (key == "seed") sc.seed = ParseU64(k, v);
        else if (key == "policy") sc.policy = ParsePolicy(v);
        else if (key == "tick_ms") sc.tick_ms = static_cast<DurationMs>(ParseU64(k, v));
        else if (key == "lease_ms") sc.lease_ms = static_cast<DurationMs>(ParseU64(k, v));
        else if (key == "heartbeat_ms") sc.heartbeat_ms = static_cast<DurationMs>(ParseU64(k, v));
        else if (key == "missed_k") sc.missed_k = static_cast<int>(ParseU64(k, v));
        else if (key == "stall_ticks") sc.stall_ticks = ParseU64(k, v);
        else if (key == "wal") sc.wal = ParseBool(k, v);
        else if (key == "checkpoint_interval") sc.checkpoint_interval = ParseU64(k, v);
        else if (key == "broadcast") sc.broadcast = ParseBool(k, v);
        else if (key == "replica") sc.replica = ParseBool(k, v);
        else if (key == "crash_after_commit") sc.crash_after_commit = ParseU64(k, v);
        else if (key == "torn_tail_keep") sc.torn_tail_keep = ParseU64(k, v);
        else Fail(ErrorCode::kBadConfig, "unknown key " + k);
      } else if (section == "topology") {
        NodeSpec n{key, {}};
        for (const auto& token : Words(v)) n.tiers.push_back(ParseTierToken(token));
        sc.topology.nodes.push_back(std::move(n));
      } else if (section == "events") {
        auto w = Words(v);
        if (w.size() < 2) Fail(ErrorCode::kBadConfig, k + ": expected 'TICK ACTION [TARGET]'");
        ScenarioEvent ev;
        ev.tick = ParseU64(k, w[0]);
        ev.action = ParseEventAction(w[1]);
        for (std::size_t i = 2; i < w.size(); ++i) ev.target += (i > 2 ? " " : "") + w[i];
        sc.events.push_back(std::move(ev));
      } else if (section == "job") {
        if (key == "subjects") sc.job.subjects = ParseU64(k, v);
        else if (key == "train_per_subject") sc.job.train_per_subject = ParseU64(k, v);
        else if (key == "held_out_per_subject") sc.job.held_out_per_subject = ParseU64(k, v);
        else if (key == "corpus_seed") sc.job.corpus_seed = ParseU64(k, v);
        else if (key == "noise") sc.job.noise = ParseReal(k, v);
        else if (key == "pretrain") sc.job.pretrain = ParseBool(k, v);
        else if (key == "silent_inputs") sc.job.silent_inputs = ParseU64(k, v);
        else if (key == "preproc") sc.job.preprocessor = v;
        else if (key == "fe") sc.job.extractor = v;
        else if (key == "metric") sc.job.classifier = v;
        else Fail(ErrorCode::kBadConfig, "unknown key " + k);
      } else if (section == "assert") {
        if (key == "complete") sc.assertions.complete = ParseBool(k, v);
        else if (key == "expect_stall") sc.assertions.expect_stall = ParseBool(k, v);
        else if (key == "equals_fault_free") sc.assertions.equals_fault_free = ParseBool(k, v);
        else Fail(ErrorCode::kBadConfig, "unknown key " + k);
      } else {
        Fail(ErrorCode::kBadConfig, "unknown section [" + section + "]");
      }
    }
  }
  try {
    sc.Validate();
  } catch (const Error& e) {
    Fail(ErrorCode::kBadConfig, e.what());
  }
  return sc;
}

Scenario LoadScenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) Fail(ErrorCode::kBadConfig, "cannot open scenario " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ParseScenario(ss.str());
}

std::uint64_t Ledger::total_executions() const {
  std::uint64_t n = 0;
  for (const auto& [tier, count] : executions_by_tier) n += count;
  return n;
}

std::string Ledger::Dump() const {
  std::ostringstream out;
  out << "scenario " << scenario << "\n";
  out << "seed " << seed << "\n";
  out << "completed " << completed << "\n";
  out << "stalled " << stalled << "\n";
  out << "ticks " << ticks << "\n";
  out << "store_crashes " << store_crashes << "\n";
  out << "recovered " << recovered << "\n";
  out << "wal_truncated_bytes " << wal_truncated_bytes << "\n";
  out << "warehouse " << warehouse_size << " " << warehouse_digest << "\n";
  if (!replica_digest.empty()) out << "replica " << replica_digest << "\n";
  out << "report " << report_digest << "\n";
  for (std::size_t i = 0; i < reports.size(); ++i) out << "job " << i << " " << Sha256Hex(reports[i]) << "\n";
  for (const auto& [tier, n] : executions_by_tier) out << "tier " << tier << " " << n << "\n";
  for (const auto& [sig, n] : executions_by_signature) out << "exec " << sig.Hex() << " " << n << "\n";
  for (const auto& [sig, list] : claims) {
    out << "claim " << sig.Hex();
    for (const auto& c : list) out << " " << c.tier << "@" << c.at;
    out << "\n";
  }
  for (const auto& e : events) out << "event " << e << "\n";
  for (const auto& s : lost) out << "lost " << s.Hex() << "\n";
  for (const auto& s : reexecuted) out << "reexecuted " << s.Hex() << "\n";
  for (const auto& a : audit_failures) out << "audit " << a << "\n";
  return out.str();
}

std::string Ledger::Digest() const { return Sha256Hex(Dump()); }

Ledger Simulate(const Scenario& sc) {
  sc.Validate();
  std::optional<TrainingSet> pretrained;
  if (sc.job.pretrain) pretrained = Pretrain(sc);
  std::vector<JobSpec> jobs = BuildJobs(sc, pretrained);

  Ledger ledger;
  ledger.scenario = sc.name;
  ledger.seed = sc.seed;

  VirtualClock clock(0);
  Cluster c(OptionsFor(sc), &clock);

  std::unique_ptr<ReplicaHost> replica;
  std::unique_ptr<DemandStore> replica_store;
  if (sc.replica) {
    if (!sc.wal) Fail(ErrorCode::kInvalidSpec, "a replica needs the WAL");
    replica_store = std::make_unique<DemandStore>("replica");
    replica = std::make_unique<ReplicaHost>(std::make_shared<Wal>(std::make_shared<MemoryStorage>()),
                                            replica_store.get());
    c.AddReplica(replica.get(), ReplicationMode::kLazy);
  }

  c.SetClaimObserver([&ledger](const ClaimInfo& info) {
    ledger.claims[info.signature].push_back({info.tier, info.claimed_at});
  });

  // Durability bookkeeping for injected crashes.
  std::map<Signature, Bytes> acknowledged;
  std::size_t executions_at_crash = 0;
  bool checked_crash = false;
  if (sc.crash_after_commit) c.CrashAfterCommit(sc.crash_after_commit);
  c.SetCrashHook([&](const DemandStore& dead, DurableStorage* wal_storage) {
    acknowledged = dead.WarehouseSnapshot();
    executions_at_crash = c.TotalExecutions();
    if (c.wal() != nullptr && c.wal()->size() > 0) {
      Bytes rec;
      EncodeWalRecord(rec, c.wal()->Records().back());
      ledger.crash_record_size = rec.size();
    }
    if (sc.torn_tail_keep) {
      auto* mem = dynamic_cast<MemoryStorage*>(wal_storage);
      if (mem == nullptr || c.wal() == nullptr || c.wal()->size() == 0) {
        Fail(ErrorCode::kInvalidSpec, "torn tail needs an in-memory WAL with records");
      }
      Bytes last;
      EncodeWalRecord(last, c.wal()->Records().back());
      if (*sc.torn_tail_keep >= last.size()) Fail(ErrorCode::kInvalidSpec, "torn tail offset past the record");
      mem->TruncateTo(mem->size() - last.size() + *sc.torn_tail_keep);
    }
  });
  auto check_recovery = [&](std::uint64_t tick) {
    if (checked_crash || c.store_crashes() == 0) return;
    checked_crash = true;
    auto recovered = c.store().WarehouseSnapshot();
    ledger.recovered = recovered.size();
    if (c.wal() != nullptr) ledger.wal_truncated_bytes = c.wal()->truncated_bytes();
    for (const auto& [sig, bytes] : acknowledged) {
      auto it = recovered.find(sig);
      if (it == recovered.end() || it->second != bytes) ledger.lost.push_back(sig);
    }
    ledger.events.push_back(std::to_string(tick) + ": store crash, acknowledged=" +
                            std::to_string(acknowledged.size()) +
                            " recovered=" + std::to_string(recovered.size()));
  };

  c.Build(sc.topology, 0);

  std::size_t next_event = 0;
  std::size_t phase = 0;
  std::optional<TrainingSet> current = pretrained;
  auto make_driver = [&](std::size_t i) {
    JobSpec spec = jobs[i];
    if (spec.mode == JobMode::kTrain || !spec.training_set) spec.training_set = current;
    return std::make_unique<JobDriver>(std::move(spec), &c.manager(), &c.endpoint(), c.training_sets());
  };
  auto driver = make_driver(0);

  std::uint64_t tick = 0;
  std::uint64_t idle = 0;
  std::uint64_t last_mark = 0;
  for (; tick < kMaxTicks; ++tick) {
    const TimestampMs now = static_cast<TimestampMs>(tick) * sc.tick_ms;
    clock.Set(now);
    while (next_event < sc.events.size() && sc.events[next_event].tick <= tick) {
      ledger.events.push_back(std::to_string(tick) + ": " + ApplyEvent(c, sc.events[next_event], now));
      ++next_event;
    }
    check_recovery(tick);

    bool finished = false;
    while (driver->Step(now)) {
      JobReport r = driver->Report();
      ledger.reports.push_back(ReportToJson(r));
      if (r.training_set) current = r.training_set;
      if (++phase == jobs.size()) {
        finished = true;
        break;
      }
      driver = make_driver(phase);
    }
    if (finished) {
      ledger.completed = true;
      break;
    }

    for (const auto& a : c.Step(now)) {
      if (a.kind != RecoveryAction::Kind::kNone && a.kind != RecoveryAction::Kind::kDeferred) {
        ledger.events.push_back(std::to_string(tick) + ": " + ActionText(a));
      }
    }
    check_recovery(tick);
    try {
      c.store().Audit();
      c.manager().Audit();
    } catch (const std::exception& e) {
      ledger.audit_failures.push_back(std::to_string(tick) + ": " + e.what());
    }

    std::uint64_t mark = driver->progress() + c.TotalExecutions() + phase + c.store_crashes();
    idle = mark == last_mark ? idle + 1 : 0;
    last_mark = mark;
    if (idle >= sc.stall_ticks) {
      ledger.stalled = true;
      ledger.events.push_back(std::to_string(tick) + ": stall after " + std::to_string(idle) + " idle ticks");
      break;
    }
  }
  ledger.ticks = tick;

  // Events scheduled past completion still run, so a late ShipWal can sync.
  if (ledger.completed) {
    for (; next_event < sc.events.size(); ++next_event) {
      const auto& e = sc.events[next_event];
      clock.Set(static_cast<TimestampMs>(e.tick) * sc.tick_ms);
      ledger.events.push_back(std::to_string(e.tick) + ": " + ApplyEvent(c, e, clock.NowMs()));
    }
    check_recovery(tick);
  }

  // A crash point past the last commit crashes the finished store.
  if (ledger.completed && sc.crash_after_commit && c.store_crashes() == 0) {
    c.CrashStore();
    check_recovery(tick);
  }

  auto log = c.ExecutionLog();
  std::set<Signature> seen_after;
  for (std::size_t i = 0; i < log.size(); ++i) {
    const auto& [sig, tier, stage] = log[i];
    ledger.execution_stages.push_back(stage);
    ++ledger.executions_by_tier[tier.ToString()];
    ++ledger.executions_by_signature[sig];
    if (checked_crash && i >= executions_at_crash && acknowledged.contains(sig) && seen_after.insert(sig).second) {
      ledger.reexecuted.push_back(sig);
    }
  }
  ledger.store_crashes = c.store_crashes();
  ledger.warehouse_size = c.store().warehouse_size();
  ledger.warehouse_digest = ToHex(c.store().WarehouseDigest());
  if (replica_store) ledger.replica_digest = ToHex(replica_store->WarehouseDigest());
  std::string all;
  for (const auto& r : ledger.reports) all += r;
  ledger.report_digest = Sha256Hex(all);
  return ledger;
}

Ledger SimulateToCompletion(const Scenario& sc) {
  Ledger l = Simulate(sc);
  if (l.stalled) {
    Fail(ErrorCode::kStallDetected, sc.name + ": no progress for " + std::to_string(sc.stall_ticks) + " ticks");
  }
  return l;
}

std::vector<std::string> CheckAssertions(const Scenario& sc, const Ledger& ledger) {
  std::vector<std::string> failures;
  if (sc.assertions.expect_stall) {
    if (!ledger.stalled) failures.push_back("expected a stall, but the job " +
                                            std::string(ledger.completed ? "completed" : "did not stall"));
  } else if (sc.assertions.complete && !ledger.completed) {
    failures.push_back(ledger.stalled ? "job stalled" : "job did not complete");
  }
  for (const auto& a : ledger.audit_failures) failures.push_back("audit failed at " + a);
  for (const auto& s : ledger.lost) failures.push_back("acknowledged result lost: " + s.Hex());
  for (const auto& s : ledger.reexecuted) failures.push_back("acknowledged result re-executed: " + s.Hex());
  if (sc.assertions.equals_fault_free && ledger.completed) {
    Scenario clean = sc;
    clean.events.clear();
    clean.crash_after_commit.reset();
    clean.torn_tail_keep.reset();
    Ledger ref = Simulate(clean);
    if (!ref.completed) failures.push_back("fault-free reference did not complete");
    else if (ref.report_digest != ledger.report_digest) {
      failures.push_back("report " + ledger.report_digest + " differs from fault-free " + ref.report_digest);
    }
  }
  return failures;
}

bool SweepVerdict::passed() const { return !first_violation().has_value(); }

std::optional<SweepRun> SweepVerdict::first_violation() const {
  for (const auto& r : runs) {
    if (!r.passed) return r;
  }
  return std::nullopt;
}

namespace {

SweepRun Judge(const Scenario& run, const Ledger& l, const std::string& baseline_report) {
  SweepRun r;
  r.crash_index = *run.crash_after_commit;
  r.torn_keep = run.torn_tail_keep;
  std::vector<std::string> problems;
  if (l.store_crashes != 1) problems.push_back("crash did not fire");
  if (!l.completed) problems.push_back(l.stalled ? "stalled" : "did not complete");
  if (!l.lost.empty()) problems.push_back(std::to_string(l.lost.size()) + " acknowledged results lost");
  if (!l.reexecuted.empty()) problems.push_back(std::to_string(l.reexecuted.size()) + " acknowledged results re-executed");
  if (!l.audit_failures.empty()) problems.push_back("audit: " + l.audit_failures.front());
  if (l.completed && l.report_digest != baseline_report) problems.push_back("report differs from baseline");
  if (run.torn_tail_keep && l.wal_truncated_bytes != *run.torn_tail_keep) {
    problems.push_back("expected " + std::to_string(*run.torn_tail_keep) + " torn bytes dropped, saw " +
                       std::to_string(l.wal_truncated_bytes));
  }
  r.passed = problems.empty();
  for (std::size_t i = 0; i < problems.size(); ++i) r.violation += (i ? "; " : "") + problems[i];
  return r;
}

Ledger Baseline(const Scenario& sc, SweepVerdict& v) {
  Scenario base = sc;
  base.crash_after_commit.reset();
  base.torn_tail_keep.reset();
  Ledger b = SimulateToCompletion(base);
  v.commits = b.warehouse_size;
  v.baseline_report_digest = b.report_digest;
  return b;
}

}  // namespace

SweepVerdict CrashPointSweep(const Scenario& sc, std::optional<Stage> stage) {
  SweepVerdict v;
  Ledger b = Baseline(sc, v);
  // Fault-free ticks store each result right after executing it, so the
  // execution order is the commit order.
  const bool by_stage = stage && b.execution_stages.size() == v.commits;
  if (stage && !by_stage) Fail(ErrorCode::kInvalidSpec, "stage filter needs one execution per commit");
  for (std::uint64_t i = 0; i <= v.commits; ++i) {
    if (by_stage && (i == v.commits || b.execution_stages[i] != ToString(*stage))) continue;
    Scenario run = sc;
    run.torn_tail_keep.reset();
    run.crash_after_commit = i;
    v.runs.push_back(Judge(run, Simulate(run), v.baseline_report_digest));
  }
  return v;
}

SweepVerdict TornTailSweep(const Scenario& sc) {
  if (!sc.wal) Fail(ErrorCode::kInvalidSpec, "torn-tail sweep needs the WAL");
  SweepVerdict v;
  Baseline(sc, v);
  if (v.commits == 0) return v;
  Scenario plain = sc;
  plain.crash_after_commit = v.commits - 1;
  plain.torn_tail_keep.reset();
  Ledger whole = Simulate(plain);
  v.runs.push_back(Judge(plain, whole, v.baseline_report_digest));
  for (std::size_t keep = 0; keep < whole.crash_record_size; ++keep) {
    Scenario run = plain;
    run.torn_tail_keep = keep;
    v.runs.push_back(Judge(run, Simulate(run), v.baseline_report_digest));
  }
  return v;
}

}  // namespace edupipe
