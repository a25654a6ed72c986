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

#include <gtest/gtest.h>

#include "edupipe/simharness.h"

namespace edupipe {
namespace {

// Two subjects, pretrained, so only recognition runs in the simulation.
Scenario Small(std::size_t held_out, std::size_t silent = 0) {
  Scenario sc;
  sc.name = "small";
  sc.seed = 5;
  sc.policy = RecoveryPolicy::kIfCrashThenRestart;
  sc.topology = TopologySpec::Uniform(1);
  sc.job.subjects = 2;
  sc.job.train_per_subject = 2;
  sc.job.held_out_per_subject = held_out;
  sc.job.pretrain = true;
  sc.job.silent_inputs = silent;
  sc.job.preprocessor = "endpoint";
  sc.wal = true;
  sc.stall_ticks = 30;
  return sc;
}

TEST(ScenarioParseTest, AllSections) {
  Scenario sc = ParseScenario(R"(
[scenario]
name = demo
seed = 9
policy = IF_CRASH_THEN_RESTART
wal = true
replica = true
checkpoint_interval = 8

[topology]
host-a = DGT:SL DWT:SL@500 DGT:P DWT:P
host-b = DGT:FE DWT:FE:extract_fft DGT:TC DWT:TC
host-c =

[events]
first = 3 KillTier node-1/DWT/1
second = 5 allocatetier node-2 DWT:FE
third = 7 ShipWal

[job]
subjects = 3
preproc = endpoint
metric = chebyshev

[assert]
equals_fault_free = true
)");
  EXPECT_EQ(sc.name, "demo");
  EXPECT_EQ(sc.seed, 9u);
  EXPECT_EQ(sc.policy, RecoveryPolicy::kIfCrashThenRestart);
  EXPECT_TRUE(sc.wal);
  EXPECT_TRUE(sc.replica);
  EXPECT_EQ(sc.checkpoint_interval, 8u);
  ASSERT_EQ(sc.topology.nodes.size(), 3u);
  EXPECT_EQ(sc.topology.nodes[0].host, "host-a");
  EXPECT_EQ(sc.topology.nodes[0].tiers[1].exec_latency_ms, 500);
  EXPECT_EQ(sc.topology.nodes[1].tiers[1].pool, "extract_fft");
  EXPECT_TRUE(sc.topology.nodes[2].tiers.empty());
  ASSERT_EQ(sc.events.size(), 3u);
  EXPECT_EQ(sc.events[0], (ScenarioEvent{3, EventAction::kKillTier, "node-1/DWT/1"}));
  EXPECT_EQ(sc.events[1].action, EventAction::kAllocateTier);
  EXPECT_EQ(sc.events[1].target, "node-2 DWT:FE");
  EXPECT_EQ(sc.events[2].target, "");
  EXPECT_EQ(sc.job.subjects, 3u);
  EXPECT_EQ(sc.job.preprocessor, "endpoint");
  EXPECT_EQ(sc.job.classifier, "chebyshev");
  EXPECT_TRUE(sc.assertions.equals_fault_free);
}

TEST(ScenarioParseTest, Errors) {
  for (const char* text : {"[scenario]\npolicy = 9\n", "[events]\nx = soon KillTier a\n",
                           "[events]\nx = 1 Explode\n", "[topology]\nh = DST:SL\n", "[scenario]\nseed = x\n"}) {
    try {
      ParseScenario(text);
      FAIL() << text;
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::kBadConfig) << text;
    }
  }
  Scenario sc = Small(1);
  sc.events = {{5, EventAction::kCheckpoint, ""}, {4, EventAction::kCheckpoint, ""}};
  try {
    sc.Validate();
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kInvalidSpec);
  }
}

TEST(SimulateTest, SameSeedSameLedger) {
  Scenario sc = Small(2);
  Ledger a = Simulate(sc);
  Ledger b = Simulate(sc);
  EXPECT_TRUE(a.completed);
  EXPECT_EQ(a.Dump(), b.Dump());
  EXPECT_EQ(a.Digest(), b.Digest());
  EXPECT_EQ(a.warehouse_size, 16u);
  EXPECT_EQ(a.total_executions(), 16u);
  for (const auto& [sig, n] : a.executions_by_signature) EXPECT_EQ(n, 1u);
  for (const auto& [sig, claims] : a.claims) EXPECT_EQ(claims.size(), 1u);
}

TEST(SimulateTest, RecognitionIsCorrect) {
  Ledger l = Simulate(Small(2));
  ASSERT_EQ(l.reports.size(), 1u);
  EXPECT_NE(l.reports[0].find("\"top\": 1"), std::string::npos);
  EXPECT_NE(l.reports[0].find("\"top\": 2"), std::string::npos);
}

TEST(SweepTest, OneRunPerCommitPlusOne) {
  // Two held-out inputs, four stage results each.
  SweepVerdict eight = CrashPointSweep(Small(1));
  EXPECT_EQ(eight.commits, 8u);
  EXPECT_EQ(eight.runs.size(), 9u);
  EXPECT_TRUE(eight.passed());

  // One silent input through the raw preprocessor: four results.
  Scenario tiny = Small(0, 1);
  tiny.job.preprocessor = "raw";
  SweepVerdict v = CrashPointSweep(tiny);
  EXPECT_EQ(v.commits, 4u);
  EXPECT_EQ(v.runs.size(), 5u);
  EXPECT_TRUE(v.passed());

  // Silent inputs fail at endpoint detection: two results each.
  SweepVerdict six = CrashPointSweep(Small(0, 3));
  EXPECT_EQ(six.commits, 6u);
  EXPECT_EQ(six.runs.size(), 7u);
  EXPECT_TRUE(six.passed());
}

TEST(SweepTest, StageFilter) {
  SweepVerdict v = CrashPointSweep(Small(1), Stage::kTC);
  EXPECT_EQ(v.runs.size(), 2u);
  EXPECT_TRUE(v.passed());
}

TEST(SweepTest, WithoutWalAcknowledgedResultsAreLost) {
  Scenario sc = Small(1);
  sc.wal = false;
  SweepVerdict v = CrashPointSweep(sc);
  EXPECT_FALSE(v.passed());
  ASSERT_TRUE(v.first_violation());
  EXPECT_NE(v.first_violation()->violation.find("lost"), std::string::npos);
}

TEST(SweepTest, TornTailAtEveryOffset) {
  Scenario sc = Small(0, 1);
  sc.job.preprocessor = "raw";
  SweepVerdict v = TornTailSweep(sc);
  EXPECT_GT(v.runs.size(), 40u);
  EXPECT_TRUE(v.passed()) << v.first_violation()->violation;
  Scenario no_wal = sc;
  no_wal.wal = false;
  EXPECT_THROW(TornTailSweep(no_wal), Error);
}

Scenario SingleFeWorker(RecoveryPolicy policy) {
  Scenario sc;
  sc.name = "kill-fe";
  sc.seed = 7;
  sc.policy = policy;
  sc.topology = ParseScenario(
                    "[topology]\nhost-a = DGT:SL DWT:SL DGT:P DWT:P\nhost-b = DGT:FE DWT:FE DGT:TC DWT:TC\n")
                    .topology;
  sc.job.subjects = 2;
  sc.job.train_per_subject = 2;
  sc.job.held_out_per_subject = 2;
  sc.events = {{6, EventAction::kKillTier, "node-1/DWT/1"}};
  sc.stall_ticks = 30;
  sc.assertions.equals_fault_free = true;
  return sc;
}

TEST(SelfHealingTest, RestartMatchesFaultFree) {
  Scenario sc = SingleFeWorker(RecoveryPolicy::kIfCrashThenRestart);
  Ledger l = Simulate(sc);
  EXPECT_TRUE(l.completed);
  EXPECT_TRUE(CheckAssertions(sc, l).empty());
  Scenario clean = sc;
  clean.events.clear();
  EXPECT_EQ(l.report_digest, Simulate(clean).report_digest);
  EXPECT_EQ(l.executions_by_tier.count("node-1/DWT/1"), 1u);
}

TEST(SelfHealingTest, LetItBeStalls) {
  Scenario sc = SingleFeWorker(RecoveryPolicy::kLetItBe);
  Ledger l = Simulate(sc);
  EXPECT_TRUE(l.stalled);
  EXPECT_FALSE(l.completed);
  EXPECT_FALSE(CheckAssertions(sc, l).empty());
  try {
    SimulateToCompletion(sc);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kStallDetected);
  }
  sc.assertions = {};
  sc.assertions.complete = false;
  sc.assertions.expect_stall = true;
  EXPECT_TRUE(CheckAssertions(sc, l).empty());
}

TEST(ReplicationTest, ReplicaCatchesUp) {
  Scenario sc = Small(1);
  sc.replica = true;
  sc.events = {{3, EventAction::kShipWal, ""}, {4, EventAction::kCrashStore, ""}, {40, EventAction::kShipWal, ""}};
  Ledger l = Simulate(sc);
  EXPECT_TRUE(l.completed);
  EXPECT_EQ(l.store_crashes, 1u);
  EXPECT_TRUE(l.lost.empty());
  EXPECT_EQ(l.replica_digest, l.warehouse_digest);
}

}  // namespace
}  // namespace edupipe
