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
#include <optional>
#include <string>
#include <vector>

#include "edupipe/cluster.h"

namespace edupipe {

enum class EventAction { kKillTier, kKillNode, kCrashStore, kAllocateTier, kCheckpoint, kShipWal };

std::string_view ToString(EventAction a);
EventAction ParseEventAction(std::string_view s);

// `target` is a tier id for KillTier ("node-0/DWT/3"), a node id for
// KillNode, "node-1 DWT:FE[:ops][@latency]" for AllocateTier, and empty
// otherwise.
struct ScenarioEvent {
  std::uint64_t tick = 0;
  EventAction action = EventAction::kKillTier;
  std::string target;

  bool operator==(const ScenarioEvent&) const = default;
};

// The job is a toy speaker-identification run over a synthetic corpus:
// one Train job per subject, chained, then one Recognize job over the
// held-out recordings. With `pretrain` the training runs on a scratch
// cluster first and only recognition is simulated.
struct ScenarioJob {
  std::size_t subjects = 4;
  std::size_t train_per_subject = 5;
  std::size_t held_out_per_subject = 5;
  std::uint64_t corpus_seed = 42;
  double noise = 0.02;
  bool pretrain = false;
  // All-zero recordings appended to the Recognize job.
  std::size_t silent_inputs = 0;
  std::string preprocessor = "raw";
  std::string extractor = "fft";
  std::string classifier = "euclidean";

  bool operator==(const ScenarioJob&) const = default;
};

struct ScenarioAssertions {
  bool complete = true;
  bool expect_stall = false;
  // Report digest must equal the same scenario with no events.
  bool equals_fault_free = false;

  bool operator==(const ScenarioAssertions&) const = default;
};

struct Scenario {
  std::string name = "scenario";
  std::uint64_t seed = 1;
  RecoveryPolicy policy = RecoveryPolicy::kLetItBe;
  TopologySpec topology;
  std::vector<ScenarioEvent> events;
  ScenarioJob job;
  ScenarioAssertions assertions;

  DurationMs tick_ms = 1000;
  DurationMs lease_ms = 5000;
  DurationMs heartbeat_ms = 1000;
  int missed_k = 3;
  std::uint64_t stall_ticks = 60;
  bool wal = false;
  std::size_t checkpoint_interval = DurableLog::kCheckpointInterval;
  bool broadcast = false;
  // Lazy replica fed by ShipWal events.
  bool replica = false;

  // Sweep injection: crash the store after this commit, and optionally
  // keep only this many bytes of the crashing WAL record.
  std::optional<std::uint64_t> crash_after_commit;
  std::optional<std::size_t> torn_tail_keep;

  // Throws kInvalidSpec when event ticks decrease.
  void Validate() const;
};

// Sections [scenario], [topology], [events], [job], [assert]. Topology
// keys are host names in order, values space-separated tier tokens (empty
// for a spare node). Event values are "TICK ACTION [TARGET]". Throws
// kBadConfig on malformed input.
Scenario ParseScenario(std::string_view ini_text);
Scenario LoadScenario(const std::string& path);

struct ClaimRecord {
  std::string tier;
  TimestampMs at = 0;

  bool operator==(const ClaimRecord&) const = default;
};

struct Ledger {
  std::string scenario;
  std::uint64_t seed = 0;
  bool completed = false;
  bool stalled = false;
  std::uint64_t ticks = 0;
  std::map<std::string, std::uint64_t> executions_by_tier;
  std::map<Signature, std::uint64_t> executions_by_signature;
  std::map<Signature, std::vector<ClaimRecord>> claims;
  // Applied events and recovery actions, "tick: text".
  std::vector<std::string> events;
  std::string warehouse_digest;
  std::string replica_digest;
  std::size_t warehouse_size = 0;
  // One JSON report per job, then the hex digest over all of them.
  std::vector<std::string> reports;
  std::string report_digest;
  std::uint64_t store_crashes = 0;
  std::size_t recovered = 0;
  std::size_t wal_truncated_bytes = 0;
  // Encoded size of the WAL record the crash interrupted.
  std::size_t crash_record_size = 0;
  // Stage of every execution, in order.
  std::vector<std::string> execution_stages;
  // Acknowledged before the crash and missing after recovery.
  std::vector<Signature> lost;
  // Acknowledged before the crash and executed again afterwards.
  std::vector<Signature> reexecuted;
  // Store partition audits that failed.
  std::vector<std::string> audit_failures;

  std::uint64_t total_executions() const;
  // Line-oriented structured text.
  std::string Dump() const;
  // Hex SHA-256 of Dump().
  std::string Digest() const;
};

// Runs the scenario on a virtual clock until every job finishes or
// `stall_ticks` ticks pass without progress (ledger.stalled).
Ledger Simulate(const Scenario& sc);
// Simulate, throwing kStallDetected on a stall.
Ledger SimulateToCompletion(const Scenario& sc);

// Assertion failures of a finished run; empty means the scenario holds.
std::vector<std::string> CheckAssertions(const Scenario& sc, const Ledger& ledger);

struct SweepRun {
  std::uint64_t crash_index = 0;
  std::optional<std::size_t> torn_keep;
  bool passed = false;
  std::string violation;
};

struct SweepVerdict {
  // Commits in the crash-free baseline.
  std::uint64_t commits = 0;
  std::string baseline_report_digest;
  std::vector<SweepRun> runs;

  bool passed() const;
  std::optional<SweepRun> first_violation() const;
};

// Baseline plus one run per commit index (only commits of `stage` when
// given). Each crash run must lose no acknowledged result, never
// re-execute one, and finish with the baseline report.
SweepVerdict CrashPointSweep(const Scenario& sc, std::optional<Stage> stage = std::nullopt);

// Crashes at the final commit and truncates its WAL record at every byte
// offset before recovery. Needs the WAL on an in-memory storage.
SweepVerdict TornTailSweep(const Scenario& sc);

}  // namespace edupipe
