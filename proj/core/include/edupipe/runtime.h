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

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "edupipe/demand.h"
#include "edupipe/manager.h"
#include "edupipe/pipeline/classify.h"
#include "edupipe/pipeline/executors.h"
#include "edupipe/pipeline/sample.h"
#include "edupipe/tiers.h"

namespace edupipe {

enum class JobMode { kTrain, kRecognize };

std::string_view ToString(JobMode m);
JobMode ParseJobMode(std::string_view s);

// A pipeline module picked by name or MARF id, plus its parameters.
struct ModuleChoice {
  std::string name;
  Params params;

  bool operator==(const ModuleChoice&) const = default;
};

struct JobInput {
  std::string label;
  // File bytes, or the spec text for generated formats.
  Bytes data;

  bool operator==(const JobInput&) const = default;
};

struct JobSpec {
  JobMode mode = JobMode::kRecognize;
  AudioFormat loader = AudioFormat::kWav;
  ModuleChoice preprocessor{"raw", {}};
  ModuleChoice extractor{"fft", {}};
  ModuleChoice classifier{"euclidean", {}};
  std::optional<SubjectId> subject_id;
  std::vector<JobInput> inputs;
  // Train extends it (empty when absent); Recognize classifies against it.
  std::optional<TrainingSet> training_set;

  bool operator==(const JobSpec&) const = default;
};

// Four plans (SL, P, FE, TC). Throws kInvalidSpec for a Train job without
// a subject, a Recognize job with one, unknown or unimplemented modules,
// and the neural-network classifier, which the staged runtime does not
// host.
std::vector<StagePlan> PlanJob(const JobSpec& spec);

// Tag identifying the feature extractor and its parameters.
std::string ExtractorTag(const JobSpec& spec);

struct StageCounts {
  std::uint64_t generated = 0;
  std::uint64_t cache_hit = 0;
  std::uint64_t executed = 0;

  bool operator==(const StageCounts&) const = default;
};

struct InputReport {
  std::string label;
  bool ok = false;
  std::string error_code;
  std::string error;
  // Recognize: results sorted ascending.
  std::vector<Result> results;
  std::optional<SubjectId> top;
  std::optional<SubjectId> second;
  // Signature of the last stage demand.
  std::optional<Signature> final_signature;
};

// Ledger counts come from the driver's view: a demand counts as executed
// when this job enqueued it and as a cache hit when the store already held
// or was computing it.
struct JobReport {
  JobMode mode = JobMode::kRecognize;
  std::vector<StagePlan> plans;
  std::vector<InputReport> inputs;
  std::optional<TrainingSet> training_set;
  std::array<StageCounts, 4> ledger{};

  bool partial() const;
};

// Deterministic JSON (sorted keys, no timings).
std::string ReportToJson(const JobReport& r);
std::string ReportToText(const JobReport& r);
// Hex SHA-256 of ReportToJson().
std::string ReportDigest(const JobReport& r);

// Non-blocking job state machine. Each Step() puts whatever demands have
// become ready through a live DGT of their stage and collects finished
// values. Train demands are put strictly in input order, each extending
// the training set produced by the one before.
class JobDriver {
 public:
  JobDriver(JobSpec spec, Manager* manager, StoreEndpoint* store,
            std::shared_ptr<TrainingSetCache> training_sets);

  // Returns true once every input has finished or failed.
  bool Step(TimestampMs now);
  bool done() const;
  // Incremented on every state change; used for stall detection.
  std::uint64_t progress() const { return progress_; }
  JobReport Report() const;

 private:
  struct InputState {
    std::size_t stage = 0;
    bool awaiting = false;
    bool finished = false;
    Signature signature;
    Bytes upstream_stored;
    Signature upstream_signature;
    InputReport report;
  };

  DemandGenerator* PickGenerator(Stage stage) const;
  bool TryGenerate(std::size_t index, InputState& st);
  void Accept(std::size_t index, InputState& st, Bytes stored);
  void AdvanceTrainCursor();

  JobSpec spec_;
  std::vector<StagePlan> plans_;
  std::string tag_;
  Manager* manager_;
  StoreEndpoint* store_;
  std::shared_ptr<TrainingSetCache> training_sets_;
  std::vector<InputState> inputs_;
  std::array<StageCounts, 4> ledger_{};
  TrainingSet current_;
  std::string current_hash_;
  std::size_t train_cursor_ = 0;
  std::uint64_t progress_ = 0;
};

// One subject's synthetic recording: a sine mixture spec with its label.
struct SyntheticRecording {
  SubjectId subject = 0;
  std::string label;
  std::string spec;
};

struct SyntheticCorpus {
  std::vector<SyntheticRecording> train;
  std::vector<SyntheticRecording> held_out;
};

// Subjects 1..n with distinct two-tone mixtures; every recording gets its
// own noise seed and a small amplitude jitter.
SyntheticCorpus MakeSyntheticCorpus(std::size_t subjects, std::size_t train_per_subject,
                                    std::size_t held_out_per_subject, std::uint64_t seed,
                                    double noise = 0.02, int rate_hz = 8000, double seconds = 0.5);

}  // namespace edupipe
