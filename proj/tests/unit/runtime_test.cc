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

#include "edupipe/cluster.h"
#include "edupipe/runtime.h"

namespace edupipe {
namespace {

JobSpec SineJob(JobMode mode, std::optional<SubjectId> subject, std::vector<std::string> specs) {
  JobSpec spec;
  spec.mode = mode;
  spec.loader = AudioFormat::kSine;
  spec.subject_id = subject;
  for (std::size_t i = 0; i < specs.size(); ++i) {
    spec.inputs.push_back({"in" + std::to_string(i), ToBytes(specs[i])});
  }
  return spec;
}

TrainingSet TrainCorpus(Cluster& cluster, VirtualClock& clock, const SyntheticCorpus& corpus) {
  std::optional<TrainingSet> ts;
  std::map<SubjectId, std::vector<std::string>> by_subject;
  for (const auto& r : corpus.train) by_subject[r.subject].push_back(r.spec);
  for (const auto& [subject, specs] : by_subject) {
    JobSpec spec = SineJob(JobMode::kTrain, subject, specs);
    spec.training_set = ts;
    JobReport report = RunJobStepped(cluster, spec, clock);
    EXPECT_FALSE(report.partial());
    ts = report.training_set;
  }
  return *ts;
}

TEST(PlanTest, FourStagePlans) {
  JobSpec spec = SineJob(JobMode::kRecognize, std::nullopt, {"freq=1"});
  spec.preprocessor = {"104", {{"low", 1000.0}}};
  spec.classifier = {"504", {}};
  auto plans = PlanJob(spec);
  ASSERT_EQ(plans.size(), 4u);
  EXPECT_EQ(plans[0].operation, "load_sine");
  EXPECT_EQ(plans[1].operation, "fft_filter");
  EXPECT_EQ(std::get<std::string>(plans[1].params.at("kind")), "low_pass");
  EXPECT_EQ(plans[2].operation, "extract_fft");
  EXPECT_EQ(plans[3].operation, "classify");
  EXPECT_EQ(std::get<std::string>(plans[3].params.at("metric")), "chebyshev");
}

TEST(PlanTest, InvalidSpecs) {
  auto expect_invalid = [](const JobSpec& spec) {
    try {
      PlanJob(spec);
      FAIL();
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::kInvalidSpec);
    }
  };
  expect_invalid(SineJob(JobMode::kTrain, std::nullopt, {"freq=1"}));
  expect_invalid(SineJob(JobMode::kRecognize, 3, {"freq=1"}));
  JobSpec nn = SineJob(JobMode::kRecognize, std::nullopt, {"freq=1"});
  nn.classifier = {"500", {}};
  expect_invalid(nn);
  JobSpec mp3 = SineJob(JobMode::kRecognize, std::nullopt, {"freq=1"});
  mp3.loader = AudioFormat::kMp3;
  expect_invalid(mp3);
  JobSpec f0 = SineJob(JobMode::kRecognize, std::nullopt, {"freq=1"});
  f0.extractor = {"f0", {}};
  expect_invalid(f0);
}

TEST(PlanTest, ExtractorTagCarriesParams) {
  JobSpec a = SineJob(JobMode::kRecognize, std::nullopt, {"freq=1"});
  JobSpec b = a;
  b.extractor.params["length"] = std::int64_t{64};
  EXPECT_NE(ExtractorTag(a), ExtractorTag(b));
}

class RuntimeTest : public ::testing::Test {
 protected:
  std::unique_ptr<Cluster> MakeCluster(std::size_t nodes) {
    ClusterOptions opts;
    opts.manager.lease_ms = 5000;
    auto c = std::make_unique<Cluster>(opts, &clock_);
    c->Build(TopologySpec::Uniform(nodes), clock_.NowMs());
    return c;
  }

  VirtualClock clock_;
};

TEST_F(RuntimeTest, TrainThenRecognize) {
  auto cluster = MakeCluster(2);
  SyntheticCorpus corpus = MakeSyntheticCorpus(3, 3, 2, 9);
  TrainingSet ts = TrainCorpus(*cluster, clock_, corpus);
  ASSERT_EQ(ts.entries().size(), 3u);
  for (const auto& [id, e] : ts.entries()) EXPECT_EQ(e.count, 3u);

  std::vector<std::string> specs;
  for (const auto& r : corpus.held_out) specs.push_back(r.spec);
  JobSpec rec = SineJob(JobMode::kRecognize, std::nullopt, specs);
  rec.training_set = ts;
  JobReport report = RunJobStepped(*cluster, rec, clock_);
  ASSERT_EQ(report.inputs.size(), corpus.held_out.size());
  for (std::size_t i = 0; i < report.inputs.size(); ++i) {
    EXPECT_TRUE(report.inputs[i].ok);
    EXPECT_EQ(report.inputs[i].top, corpus.held_out[i].subject);
    EXPECT_EQ(report.inputs[i].results.size(), 3u);
  }
}

TEST_F(RuntimeTest, WarmRerunIsAllCacheHits) {
  auto cluster = MakeCluster(1);
  JobSpec spec = SineJob(JobMode::kTrain, 1, {"freq=300,dur=0.2", "freq=310,dur=0.2"});
  JobReport cold = RunJobStepped(*cluster, spec, clock_);
  std::uint64_t executions = cluster->TotalExecutions();
  JobReport warm = RunJobStepped(*cluster, spec, clock_);
  for (const auto& c : cold.ledger) EXPECT_EQ(c.executed, c.generated);
  for (const auto& c : warm.ledger) {
    EXPECT_EQ(c.executed, 0u);
    EXPECT_EQ(c.cache_hit, c.generated);
    EXPECT_EQ(c.generated, 2u);
  }
  EXPECT_EQ(cluster->TotalExecutions(), executions);
  EXPECT_EQ(*warm.training_set, *cold.training_set);
}

TEST_F(RuntimeTest, TrainingSetHashIsFoldedIntoSignatures) {
  auto cluster = MakeCluster(1);
  JobReport one = RunJobStepped(*cluster, SineJob(JobMode::kTrain, 1, {"freq=300,dur=0.2"}), clock_);
  JobReport two = RunJobStepped(*cluster, SineJob(JobMode::kTrain, 1, {"freq=900,dur=0.2"}), clock_);
  JobSpec rec = SineJob(JobMode::kRecognize, std::nullopt, {"freq=320,dur=0.2"});
  rec.training_set = one.training_set;
  JobReport r1 = RunJobStepped(*cluster, rec, clock_);
  rec.training_set = two.training_set;
  JobReport r2 = RunJobStepped(*cluster, rec, clock_);
  EXPECT_NE(r1.inputs[0].final_signature, r2.inputs[0].final_signature);
  // Upstream stages are shared; only classification reruns.
  EXPECT_EQ(r2.ledger[2].cache_hit, 1u);
  EXPECT_EQ(r2.ledger[3].executed, 1u);
}

TEST_F(RuntimeTest, FailedInputMakesPartialReport) {
  auto cluster = MakeCluster(1);
  JobSpec spec = SineJob(JobMode::kTrain, 1, {"freq=300,dur=0.2", "freq=300,amp=0,dur=0.2"});
  spec.preprocessor = {"endpoint", {}};
  JobReport report = RunJobStepped(*cluster, spec, clock_);
  EXPECT_TRUE(report.partial());
  EXPECT_TRUE(report.inputs[0].ok);
  EXPECT_FALSE(report.inputs[1].ok);
  EXPECT_EQ(report.inputs[1].error_code, "EmptyAfterSilence");
  EXPECT_EQ(report.training_set->entries().at(1).count, 1u);
}

TEST_F(RuntimeTest, ReportJsonIsDeterministic) {
  auto a = MakeCluster(1);
  auto b = MakeCluster(2);
  JobSpec spec = SineJob(JobMode::kTrain, 4, {"freq=500,dur=0.2"});
  std::string ja = ReportToJson(RunJobStepped(*a, spec, clock_));
  std::string jb = ReportToJson(RunJobStepped(*b, spec, clock_));
  EXPECT_EQ(ja, jb);
  EXPECT_NE(ja.find("\"ledger\""), std::string::npos);
  EXPECT_NE(ja.find("\"training_set\""), std::string::npos);
}

TEST_F(RuntimeTest, RecognizeRejectsForeignTrainingSet) {
  auto cluster = MakeCluster(1);
  JobReport train = RunJobStepped(*cluster, SineJob(JobMode::kTrain, 1, {"freq=300,dur=0.2"}), clock_);
  JobSpec rec = SineJob(JobMode::kRecognize, std::nullopt, {"freq=300,dur=0.2"});
  rec.extractor = {"lpc", {}};
  rec.training_set = train.training_set;
  try {
    RunJobStepped(*cluster, rec, clock_);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kInvalidSpec);
  }
}

TEST_F(RuntimeTest, LiveHostRunsJob) {
  ClusterOptions opts;
  WallClock wall;
  Cluster cluster(opts, &wall);
  cluster.Build(TopologySpec::Uniform(2), wall.NowMs());
  JobReport report = RunJobLive(cluster, SineJob(JobMode::kTrain, 2, {"freq=400,dur=0.2", "freq=410,dur=0.2"}), wall, 60000);
  EXPECT_FALSE(report.partial());
  EXPECT_EQ(report.training_set->entries().at(2).count, 2u);
}

TEST(SyntheticCorpusTest, SeededAndShaped) {
  auto a = MakeSyntheticCorpus(4, 5, 5, 42);
  auto b = MakeSyntheticCorpus(4, 5, 5, 42);
  EXPECT_EQ(a.train.size(), 20u);
  EXPECT_EQ(a.held_out.size(), 20u);
  for (std::size_t i = 0; i < a.train.size(); ++i) EXPECT_EQ(a.train[i].spec, b.train[i].spec);
  EXPECT_NE(a.train[0].spec, MakeSyntheticCorpus(4, 5, 5, 43).train[0].spec);
}

TEST(TopologyTest, TokensAndUniform) {
  TierSpec t = ParseTierToken("DWT:TC:train+classify@2000");
  EXPECT_EQ(t.kind, TierKind::kDWT);
  EXPECT_EQ(t.stage, Stage::kTC);
  EXPECT_EQ(t.pool, "train,classify");
  EXPECT_EQ(t.exec_latency_ms, 2000);
  EXPECT_EQ(ParseTierToken(FormatTierToken(t)), t);
  EXPECT_THROW(ParseTierToken("DST:SL"), Error);
  TopologySpec u = TopologySpec::Uniform(2);
  ASSERT_EQ(u.nodes.size(), 2u);
  std::size_t tiers = 0;
  for (const auto& n : u.nodes) tiers += n.tiers.size();
  EXPECT_EQ(tiers, 8u);
}

}  // namespace
}  // namespace edupipe
