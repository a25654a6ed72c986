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

#include <filesystem>
#include <fstream>
#include <sstream>

#include "cli.h"

namespace edupipe::cli {
namespace {

namespace fs = std::filesystem;

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("edupipe_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  int Cli(std::vector<std::string> args) {
    out_.str("");
    err_.str("");
    return cli::Run(args, out_, err_);
  }

  void WriteText(const fs::path& p, const std::string& text) {
    fs::create_directories(p.parent_path());
    std::ofstream(p) << text;
  }

  // Two subjects, three sine recordings each.
  fs::path SineCorpus() {
    fs::path corpus = dir_ / "corpus";
    for (int k = 0; k < 3; ++k) {
      WriteText(corpus / "1" / ("r" + std::to_string(k) + ".sine"),
                "freq=300+900,amp=0.4,dur=0.25,noise=0.01,seed=" + std::to_string(k + 1));
      WriteText(corpus / "2" / ("r" + std::to_string(k) + ".sine"),
                "freq=1500+2500,amp=0.4,dur=0.25,noise=0.01,seed=" + std::to_string(k + 11));
    }
    return corpus;
  }

  fs::path dir_;
  std::ostringstream out_, err_;
};

TEST_F(CliTest, TrainsSineCorpus) {
  fs::path ts = dir_ / "ts.bin";
  ASSERT_EQ(Cli({"train", SineCorpus().string(), "--loader", "sine", "-o", ts.string()}), kExitOk) << err_.str();
  std::ifstream in(ts, std::ios::binary);
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  TrainingSet set = TrainingSet::Decode(AsBytes(bytes));
  ASSERT_EQ(set.entries().size(), 2u);
  EXPECT_EQ(set.entries().at(1).count, 3u);
  EXPECT_NE(out_.str().find("subject 2 samples 3"), std::string::npos);
}

TEST_F(CliTest, RecognizesTrainingInput) {
  fs::path corpus = SineCorpus();
  fs::path ts = dir_ / "ts.bin";
  ASSERT_EQ(Cli({"train", corpus.string(), "--loader", "sine", "-o", ts.string()}), kExitOk);
  ASSERT_EQ(Cli({"recognize", (corpus / "2" / "r0.sine").string(), "-t", ts.string(), "--loader", "sine"}), kExitOk)
      << err_.str();
  EXPECT_NE(out_.str().find("top 2"), std::string::npos) << out_.str();
}

TEST_F(CliTest, Metric504IsChebyshev) {
  fs::path corpus = SineCorpus();
  fs::path ts = dir_ / "ts.bin";
  ASSERT_EQ(Cli({"train", corpus.string(), "--loader", "sine", "-o", ts.string()}), kExitOk);
  ASSERT_EQ(Cli({"recognize", (corpus / "1" / "r1.sine").string(), "-t", ts.string(), "--loader", "sine",
                 "--metric", "504"}),
            kExitOk);
  EXPECT_NE(out_.str().find("metric=chebyshev"), std::string::npos) << out_.str();
  EXPECT_NE(out_.str().find("top 1"), std::string::npos);
}

TEST_F(CliTest, EmptyCorpusIsBadInput) {
  fs::create_directories(dir_ / "empty");
  EXPECT_EQ(Cli({"train", (dir_ / "empty").string()}), kExitBadInput);
  EXPECT_EQ(Cli({"train", (dir_ / "missing").string()}), kExitBadInput);
}

TEST_F(CliTest, NonAudioFileIsPerFileError) {
  fs::path corpus = dir_ / "corpus";
  ASSERT_EQ(Cli({"make-corpus", (dir_ / "wavs").string(), "--subjects", "2", "--train", "2", "--held-out", "1"}),
            kExitOk);
  fs::copy(dir_ / "wavs" / "train", corpus, fs::copy_options::recursive);
  WriteText(corpus / "1" / "notes.txt", "this is not audio");
  EXPECT_EQ(Cli({"train", corpus.string(), "-o", (dir_ / "ts.bin").string()}), kExitPipelineError);
  EXPECT_NE(err_.str().find("notes.txt"), std::string::npos) << err_.str();
  // The good files still trained.
  EXPECT_TRUE(fs::exists(dir_ / "ts.bin"));
}

TEST_F(CliTest, CorruptTrainingSetIsBadInput) {
  fs::path corpus = SineCorpus();
  fs::path ts = dir_ / "ts.bin";
  ASSERT_EQ(Cli({"train", corpus.string(), "--loader", "sine", "-o", ts.string()}), kExitOk);
  {
    std::fstream f(ts, std::ios::in | std::ios::out | std::ios::binary);
    f.seekp(20);
    f.put('\x7f');
  }
  EXPECT_EQ(Cli({"recognize", (corpus / "1" / "r0.sine").string(), "-t", ts.string(), "--loader", "sine"}),
            kExitBadInput);
  EXPECT_NE(err_.str().find("ChecksumMismatch"), std::string::npos) << err_.str();
}

TEST_F(CliTest, WavRoundTripThroughMakeCorpus) {
  ASSERT_EQ(Cli({"make-corpus", dir_.string(), "--subjects", "3", "--train", "2", "--held-out", "1"}), kExitOk);
  fs::path ts = dir_ / "ts.bin";
  ASSERT_EQ(Cli({"train", (dir_ / "train").string(), "-o", ts.string(), "--nodes", "2"}), kExitOk) << err_.str();
  for (int s = 1; s <= 3; ++s) {
    fs::path input = dir_ / "test" / std::to_string(s) / "test0.wav";
    ASSERT_EQ(Cli({"recognize", input.string(), "-t", ts.string()}), kExitOk) << err_.str();
    EXPECT_NE(out_.str().find("top " + std::to_string(s)), std::string::npos) << out_.str();
  }
}

TEST_F(CliTest, ConfigFileAndFlagsMerge) {
  fs::path cfg = dir_ / "pipe.ini";
  WriteText(cfg, "metric = cosine\nloader = sine\n");
  Configuration merged = MergeConfig(DefaultConfig(), cfg.string(), Configuration(Configuration::Map{{"metric", "diff"}}));
  EXPECT_EQ(merged.GetOr("metric", ""), "diff");
  EXPECT_EQ(merged.GetOr("loader", ""), "sine");
  EXPECT_EQ(merged.GetOr("fe", ""), "fft");
}

TEST_F(CliTest, ModuleChoiceParams) {
  ModuleChoice c = ParseModuleChoice("low_pass:low=1200.5,tag=x,n=3");
  EXPECT_EQ(c.name, "low_pass");
  EXPECT_EQ(std::get<double>(c.params.at("low")), 1200.5);
  EXPECT_EQ(std::get<std::int64_t>(c.params.at("n")), 3);
  EXPECT_EQ(std::get<std::string>(c.params.at("tag")), "x");
}

TEST_F(CliTest, BundledScenarios) {
  const std::string dir = EDUPIPE_SCENARIO_DIR;
  EXPECT_EQ(Cli({"simulate", dir + "/fault_free.ini"}), kExitOk) << err_.str();
  EXPECT_NE(out_.str().find("ledger "), std::string::npos);
  EXPECT_EQ(Cli({"simulate", dir + "/kill_worker.ini"}), kExitOk) << err_.str();
  EXPECT_EQ(Cli({"simulate", dir + "/kill_worker.ini", "--policy", "0"}), kExitAssertionFailed);
  EXPECT_NE(err_.str().find("assertion failed"), std::string::npos);
}

TEST_F(CliTest, SimulateBadInput) {
  EXPECT_EQ(Cli({"simulate", (dir_ / "nope.ini").string()}), kExitBadInput);
  WriteText(dir_ / "bad.ini", "[scenario]\npolicy = 7\n");
  EXPECT_EQ(Cli({"simulate", (dir_ / "bad.ini").string()}), kExitBadInput);
}

TEST_F(CliTest, StoreServeAndInspectWal) {
  fs::path wal = dir_ / "wal";
  ASSERT_EQ(Cli({"store-serve", "--bind", "127.0.0.1:0", "--wal", wal.string(), "--duration-ms", "50"}), kExitOk);
  ASSERT_EQ(Cli({"store-inspect", "--wal", wal.string()}), kExitOk) << err_.str();
  EXPECT_NE(out_.str().find("records 0"), std::string::npos) << out_.str();
}

TEST_F(CliTest, UsageErrors) {
  EXPECT_EQ(Cli({}), kExitBadInput);
  EXPECT_EQ(Cli({"frobnicate"}), kExitBadInput);
  EXPECT_EQ(Cli({"--help"}), kExitOk);
}

}  // namespace
}  // namespace edupipe::cli
