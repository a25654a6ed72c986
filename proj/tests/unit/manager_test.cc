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

#include "edupipe/manager.h"

namespace edupipe {
namespace {

TEST(ConfigurationTest, IniSectionsAndClone) {
  Configuration c = Configuration::FromIniText(
      "top = 1\n# comment\n[store]\naddr = tcp://h:1\n; comment\n[gmt]\npolicy=4\n");
  EXPECT_EQ(c.GetInt("top", 0), 1);
  EXPECT_EQ(c.Get("store.addr"), "tcp://h:1");
  EXPECT_EQ(c.GetInt("gmt.policy", 0), 4);
  Configuration copy = c.Clone();
  copy.Set("top", "2");
  EXPECT_EQ(c.GetInt("top", 0), 1);
  EXPECT_THROW(c.Require("missing"), Error);
  Configuration over(Configuration::Map{{"top", "3"}, {"new", "x"}});
  c.Merge(over);
  EXPECT_EQ(c.GetOr("top", ""), "3");
  EXPECT_EQ(c.GetOr("new", ""), "x");
}

TEST(TierIdTest, FormatAndParse) {
  TierId id{"node-2", TierKind::kDWT, 5};
  EXPECT_EQ(id.ToString(), "node-2/DWT/5");
  EXPECT_EQ(TierId::Parse("node-2/DWT/5"), id);
  EXPECT_THROW(TierId::Parse("node-2/XYZ/5"), Error);
}

TEST(StageOutcomeTest, Envelopes) {
  StageOutcome ok = DecodeStageOutcome(EncodeStageSuccess(Bytes{1, 2}));
  EXPECT_TRUE(ok.ok);
  EXPECT_EQ(ok.body, (Bytes{1, 2}));
  StageOutcome bad = DecodeStageOutcome(EncodeStageFailure(ErrorCode::kEmptyAfterSilence, "quiet"));
  EXPECT_FALSE(bad.ok);
  EXPECT_EQ(bad.error, ErrorCode::kEmptyAfterSilence);
  EXPECT_EQ(bad.message, "quiet");
}

TEST(StagePlanTest, PoolMustContainOperation) {
  StagePlan plan{Stage::kP, "normalize", {}, ParsePool("endpoint,raw")};
  EXPECT_THROW(plan.Validate(), Error);
  plan.pool.insert("normalize");
  plan.Validate();
  EXPECT_EQ(FormatPool(plan.pool), "endpoint,normalize,raw");
}

class ManagerTest : public ::testing::Test {
 protected:
  ManagerTest() {
    registry_.Register(Stage::kP, "double", [](const Demand& d) {
      Bytes out = d.payload();
      out.insert(out.end(), d.payload().begin(), d.payload().end());
      return out;
    });
    registry_.Register(Stage::kP, "boom", [](const Demand&) -> Bytes {
      Fail(ErrorCode::kBadParameter, "domain failure");
    });
  }

  void Make(RecoveryPolicy policy) {
    ManagerConfig cfg;
    cfg.policy = policy;
    cfg.heartbeat_ms = 100;
    cfg.missed_k = 3;
    cfg.lease_ms = 1000;
    manager_ = std::make_unique<Manager>(cfg, &factory_, &store_, &registry_store_, &ids_);
  }

  Demand Put(const std::string& op, Bytes payload) {
    Demand d = Demand::Create(ids_.Next(), DemandType::kProcedural, "P", op, {}, std::move(payload));
    store_.PutDemand(d);
    return d;
  }

  DemandStore store_;
  DemandStore registry_store_{"registry"};
  DemandIdGenerator ids_{5};
  ExecutorRegistry registry_;
  StandardTierFactory factory_{&store_, &registry_, &ids_};
  std::unique_ptr<Manager> manager_;
};

TEST_F(ManagerTest, WorkerExecutesAndStoresEnvelopes) {
  Make(RecoveryPolicy::kLetItBe);
  std::string n = manager_->RegisterNode("h", 0);
  TierId w = manager_->AllocateTier(n, TierKind::kDWT, Stage::kP, 0);
  auto* worker = dynamic_cast<DemandWorker*>(manager_->FindTier(w));
  ASSERT_NE(worker, nullptr);
  EXPECT_EQ(worker->pool(), (OperationPool{"boom", "double"}));

  Demand ok = Put("double", Bytes{3});
  Demand bad = Put("boom", {});
  EXPECT_EQ(worker->RunOnce(0).kind, DemandWorker::RunKind::kExecuted);
  EXPECT_EQ(worker->RunOnce(0).kind, DemandWorker::RunKind::kExecuted);
  EXPECT_EQ(worker->RunOnce(0).kind, DemandWorker::RunKind::kIdle);
  EXPECT_EQ(DecodeStageOutcome(*store_.Peek(ok.signature())).body, (Bytes{3, 3}));
  StageOutcome failed = DecodeStageOutcome(*store_.Peek(bad.signature()));
  EXPECT_FALSE(failed.ok);
  EXPECT_EQ(failed.error, ErrorCode::kBadParameter);
}

TEST_F(ManagerTest, GeneratorAwaitsValue) {
  Make(RecoveryPolicy::kLetItBe);
  std::string n = manager_->RegisterNode("h", 0);
  auto* gen = dynamic_cast<DemandGenerator*>(manager_->FindTier(manager_->AllocateTier(n, TierKind::kDGT, Stage::kP, 0)));
  auto* worker = dynamic_cast<DemandWorker*>(manager_->FindTier(manager_->AllocateTier(n, TierKind::kDWT, Stage::kP, 0)));
  StagePlan plan{Stage::kP, "double", {}, {"double"}};
  auto g = gen->Generate(plan, Bytes{1});
  EXPECT_EQ(g.status, PutStatus::kEnqueued);
  VirtualClock clock;
  Bytes value = gen->Await(g.signature, 1000, clock, [&] {
    worker->RunOnce(clock.NowMs());
    clock.Advance(10);
  });
  EXPECT_EQ(DecodeStageOutcome(value).body, (Bytes{1, 1}));
  EXPECT_EQ(gen->Generate(plan, Bytes{1}).status, PutStatus::kAlreadyComputed);
  EXPECT_THROW(gen->Await(gen->Generate(plan, Bytes{2}).signature, 50, clock, [&] { clock.Advance(10); }), Error);
}

TEST_F(ManagerTest, RegistryHistoryIsRecorded) {
  Make(RecoveryPolicy::kLetItBe);
  std::string n = manager_->RegisterNode("h", 0);
  manager_->AllocateTier(n, TierKind::kDWT, Stage::kP, 0);
  auto history = registry_store_.History();
  ASSERT_EQ(history.size(), 2u);
  EXPECT_EQ(history[0].type(), DemandType::kSystem);
  EXPECT_EQ(history[0].operation(), "register_node");
  EXPECT_EQ(history[1].operation(), "allocate_tier");
}

TEST_F(ManagerTest, OneNodePerHost) {
  ManagerConfig cfg;
  cfg.one_node_per_host = true;
  Manager m(cfg, &factory_, &store_, nullptr, &ids_);
  m.RegisterNode("h", 0);
  try {
    m.RegisterNode("h", 0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kDuplicateHost);
  }
}

TEST_F(ManagerTest, PolicyCodes) {
  for (int c = 0; c <= 4; ++c) EXPECT_EQ(static_cast<int>(PolicyFromCode(c)), c);
  EXPECT_THROW(PolicyFromCode(5), Error);
}

// Three nodes; the worker on the middle or last node goes silent while
// the other nodes keep heartbeating.
class PolicyTest : public ManagerTest {
 protected:
  TierId Setup(RecoveryPolicy policy, int victim_node) {
    Make(policy);
    for (int i = 0; i < 3; ++i) nodes_.push_back(manager_->RegisterNode("h" + std::to_string(i), 0));
    return manager_->AllocateTier(nodes_[victim_node], TierKind::kDWT, Stage::kP, 0);
  }

  std::vector<RecoveryAction> Silence(TimestampMs now, const std::string& dead_node = "") {
    for (const auto& n : nodes_) {
      if (n != dead_node) manager_->NodeHeartbeat(n, now);
    }
    return manager_->Tick(now);
  }

  std::vector<std::string> nodes_;
};

TEST_F(PolicyTest, LetItBeDoesNothing) {
  TierId w = Setup(RecoveryPolicy::kLetItBe, 1);
  auto actions = Silence(300);
  ASSERT_EQ(actions.size(), 1u);
  EXPECT_EQ(actions[0].kind, RecoveryAction::Kind::kNone);
  EXPECT_TRUE(manager_->TiersFor(TierKind::kDWT, Stage::kP).empty());
  EXPECT_TRUE(manager_->FindTier(w));
  EXPECT_TRUE(Silence(600).empty());
}

TEST_F(PolicyTest, NotBeforeMissedK) {
  Setup(RecoveryPolicy::kTryNextUntilTheEnd, 1);
  EXPECT_TRUE(Silence(299).empty());
  EXPECT_EQ(Silence(300).size(), 1u);
}

TEST_F(PolicyTest, TryNextMovesToFollowingNode) {
  TierId w = Setup(RecoveryPolicy::kTryNextUntilTheEnd, 1);
  auto actions = Silence(300);
  ASSERT_EQ(actions[0].kind, RecoveryAction::Kind::kReassigned);
  EXPECT_EQ(manager_->NodeOf(*actions[0].replacement), nodes_[2]);
  EXPECT_FALSE(manager_->FindTier(w));
  manager_->Audit();
}

TEST_F(PolicyTest, TryNextRunsOutAtTheEnd) {
  Setup(RecoveryPolicy::kTryNextUntilTheEnd, 2);
  auto actions = Silence(300);
  ASSERT_EQ(actions.size(), 1u);
  EXPECT_EQ(actions[0].kind, RecoveryAction::Kind::kFailed);
  EXPECT_NE(actions[0].detail.find("NoCandidateNode"), std::string::npos);
}

TEST_F(PolicyTest, WrapAroundFindsFirstNode) {
  Setup(RecoveryPolicy::kTryNextAndWrapAround, 2);
  auto actions = Silence(300);
  ASSERT_EQ(actions[0].kind, RecoveryAction::Kind::kReassigned);
  EXPECT_EQ(manager_->NodeOf(*actions[0].replacement), nodes_[0]);
}

TEST_F(PolicyTest, TryNextSkipsDownNodes) {
  Setup(RecoveryPolicy::kTryNextAndWrapAround, 0);
  for (const auto& n : {nodes_[0], nodes_[2]}) manager_->NodeHeartbeat(n, 300);
  auto actions = manager_->Tick(300);
  ASSERT_EQ(actions.size(), 1u);
  EXPECT_EQ(manager_->NodeOf(*actions[0].replacement), nodes_[2]);
  EXPECT_FALSE(manager_->IsNodeUp(nodes_[1]));
}

TEST_F(PolicyTest, RestartStaysOnNode) {
  TierId w = Setup(RecoveryPolicy::kIfCrashThenRestart, 1);
  auto actions = Silence(300);
  ASSERT_EQ(actions[0].kind, RecoveryAction::Kind::kRestarted);
  EXPECT_EQ(actions[0].replacement->node_id, w.node_id);
  EXPECT_GT(actions[0].replacement->instance, w.instance);
}

TEST_F(PolicyTest, RestartOnDeadNodeFails) {
  Setup(RecoveryPolicy::kIfCrashThenRestart, 1);
  auto actions = Silence(300, nodes_[1]);
  ASSERT_EQ(actions.size(), 1u);
  EXPECT_EQ(actions[0].kind, RecoveryAction::Kind::kFailed);
  EXPECT_NE(actions[0].detail.find("NodeDown"), std::string::npos);
}

TEST_F(PolicyTest, CrashConfirmationWaitsForLease) {
  TierId w = Setup(RecoveryPolicy::kIfCrashThenTryNextUntilTheEnd, 0);
  Put("double", Bytes{1});
  ASSERT_TRUE(store_.ClaimPending(w.ToString(), {"double"}, 0));
  EXPECT_EQ(Silence(300)[0].kind, RecoveryAction::Kind::kDeferred);
  EXPECT_EQ(Silence(1000)[0].kind, RecoveryAction::Kind::kDeferred);
  auto actions = Silence(1001);
  ASSERT_EQ(actions[0].kind, RecoveryAction::Kind::kReassigned);
  EXPECT_EQ(manager_->NodeOf(*actions[0].replacement), nodes_[1]);
}

TEST_F(PolicyTest, RecoveryIsRecordedAsResourceDemand) {
  Setup(RecoveryPolicy::kTryNextUntilTheEnd, 0);
  Silence(300);
  bool found = false;
  for (const auto& d : registry_store_.History()) {
    if (d.operation() == "recover_tier") {
      found = true;
      EXPECT_EQ(d.type(), DemandType::kResource);
    }
  }
  EXPECT_TRUE(found);
}

}  // namespace
}  // namespace edupipe
