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

#include "edupipe/runtime.h"

#include <cmath>
#include <random>
#include <sstream>

#include <boost/algorithm/string.hpp>
#include <json.hpp>

#include "edupipe/pipeline/marf.h"

namespace edupipe {

using json = nlohmann::json;

std::string_view ToString(JobMode m) { return m == JobMode::kTrain ? "train" : "recognize"; }

JobMode ParseJobMode(std::string_view s) {
  std::string lower = boost::algorithm::to_lower_copy(std::string(s));
  if (lower == "train") return JobMode::kTrain;
  if (lower == "recognize") return JobMode::kRecognize;
  Fail(ErrorCode::kInvalidSpec, "mode must be train or recognize, got '" + std::string(s) + "'");
}

namespace {

const MarfModule& Resolve(ModuleKind kind, const std::string& name) {
  try {
    const MarfModule& m = FindMarfModule(kind, name);
    if (!m.implemented) {
      Fail(ErrorCode::kInvalidSpec, std::string(m.constant) + " (" + std::to_string(m.id) +
                                        ") is declared but not implemented");
    }
    return m;
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kInvalidSpec) throw;
    Fail(ErrorCode::kInvalidSpec, e.what());
  }
}

StagePlan MakePlan(Stage stage, std::string op, Params params) {
  StagePlan p;
  p.stage = stage;
  p.operation = std::move(op);
  p.params = std::move(params);
  p.pool = {p.operation};
  p.Validate();
  return p;
}

std::string ParamsText(const Params& params) {
  std::string out;
  for (const auto& [k, v] : params) {
    if (!out.empty()) out += ',';
    out += k + "=" + ScalarToString(v);
  }
  return out;
}

}  // namespace

std::string ExtractorTag(const JobSpec& spec) {
  const MarfModule& fe = Resolve(ModuleKind::kFeatureExtraction, spec.extractor.name);
  return std::string(fe.operation) + "{" + ParamsText(spec.extractor.params) + "}";
}

std::vector<StagePlan> PlanJob(const JobSpec& spec) {
  if (spec.mode == JobMode::kTrain && !spec.subject_id) {
    Fail(ErrorCode::kInvalidSpec, "a train job needs a subject id");
  }
  if (spec.mode == JobMode::kRecognize && spec.subject_id) {
    Fail(ErrorCode::kInvalidSpec, "a recognize job must not name a subject id");
  }
  switch (spec.loader) {
    case AudioFormat::kWav:
    case AudioFormat::kSine:
    case AudioFormat::kText:
    case AudioFormat::kRaw:
      break;
    default:
      Fail(ErrorCode::kInvalidSpec, std::string(ToString(spec.loader)) + " loading is not implemented");
  }

  std::vector<StagePlan> plans;
  plans.push_back(MakePlan(Stage::kSL, "load_" + std::string(ToString(spec.loader)), {}));

  const MarfModule& pre = Resolve(ModuleKind::kPreprocessing, spec.preprocessor.name);
  Params pre_params = spec.preprocessor.params;
  if (!pre.filter.empty()) pre_params["kind"] = std::string(pre.filter);
  plans.push_back(MakePlan(Stage::kP, std::string(pre.operation), std::move(pre_params)));

  const MarfModule& fe = Resolve(ModuleKind::kFeatureExtraction, spec.extractor.name);
  plans.push_back(MakePlan(Stage::kFE, std::string(fe.operation), spec.extractor.params));

  const MarfModule& cls = Resolve(ModuleKind::kClassification, spec.classifier.name);
  if (cls.id == 500) {
    Fail(ErrorCode::kInvalidSpec, "the neural-network classifier is a library call, not a pipeline stage");
  }
  Params tc = spec.classifier.params;
  tc["tag"] = ExtractorTag(spec);
  tc["mode"] = std::string(ToString(spec.mode));
  if (spec.mode == JobMode::kTrain) {
    tc["subject"] = static_cast<std::int64_t>(*spec.subject_id);
    plans.push_back(MakePlan(Stage::kTC, "train", std::move(tc)));
  } else {
    tc["metric"] = std::string(cls.operation);
    plans.push_back(MakePlan(Stage::kTC, "classify", std::move(tc)));
  }
  return plans;
}

bool JobReport::partial() const {
  for (const auto& in : inputs) {
    if (!in.ok) return true;
  }
  return false;
}

namespace {

json ParamsJson(const Params& params) {
  json j = json::object();
  for (const auto& [k, v] : params) {
    std::visit([&](const auto& x) { j[k] = x; }, v);
  }
  return j;
}

}  // namespace

std::string ReportToJson(const JobReport& r) {
  json j;
  j["mode"] = ToString(r.mode);
  json plans = json::array();
  for (const auto& p : r.plans) {
    plans.push_back({{"stage", ToString(p.stage)}, {"operation", p.operation}, {"params", ParamsJson(p.params)}});
  }
  j["plans"] = plans;
  json inputs = json::array();
  for (const auto& in : r.inputs) {
    json ji;
    ji["label"] = in.label;
    ji["status"] = in.ok ? "ok" : "failed";
    if (!in.ok) {
      ji["error_code"] = in.error_code;
      ji["error"] = in.error;
    }
    if (in.top) ji["top"] = *in.top;
    if (in.second) ji["second"] = *in.second;
    if (in.final_signature) ji["signature"] = in.final_signature->Hex();
    json results = json::array();
    for (const auto& res : in.results) results.push_back({{"id", res.id}, {"outcome", res.outcome}});
    ji["results"] = results;
    inputs.push_back(ji);
  }
  j["inputs"] = inputs;
  if (r.training_set) {
    json ts;
    ts["tag"] = r.training_set->extractor_tag();
    ts["hash"] = r.training_set->ContentHash();
    json subjects = json::array();
    for (const auto& [id, e] : r.training_set->entries()) {
      subjects.push_back({{"id", id}, {"count", e.count}});
    }
    ts["subjects"] = subjects;
    j["training_set"] = ts;
  }
  json ledger;
  for (Stage s : kAllStages) {
    const auto& c = r.ledger[static_cast<std::size_t>(s)];
    ledger[std::string(ToString(s))] = {
        {"generated", c.generated}, {"cache_hit", c.cache_hit}, {"executed", c.executed}};
  }
  j["ledger"] = ledger;
  return j.dump(2) + "\n";
}

std::string ReportToText(const JobReport& r) {
  std::ostringstream out;
  out << "mode " << ToString(r.mode) << "\n";
  for (const auto& p : r.plans) {
    out << "plan " << ToString(p.stage) << " " << p.operation;
    if (!p.params.empty()) out << " " << ParamsText(p.params);
    out << "\n";
  }
  for (const auto& in : r.inputs) {
    out << "input " << in.label << " ";
    if (!in.ok) {
      out << "FAILED " << in.error_code << " " << in.error << "\n";
      continue;
    }
    if (in.top) {
      out << "top " << *in.top;
      if (in.second) out << " second " << *in.second;
    } else {
      out << "ok";
    }
    out << "\n";
    for (const auto& res : in.results) {
      char buf[64];
      std::snprintf(buf, sizeof buf, "%.17g", res.outcome);
      out << "  subject " << res.id << " outcome " << buf << "\n";
    }
  }
  if (r.training_set) {
    out << "training_set " << r.training_set->extractor_tag() << " " << r.training_set->ContentHash() << "\n";
    for (const auto& [id, e] : r.training_set->entries()) {
      out << "  subject " << id << " count " << e.count << "\n";
    }
  }
  for (Stage s : kAllStages) {
    const auto& c = r.ledger[static_cast<std::size_t>(s)];
    out << "ledger " << ToString(s) << " generated " << c.generated << " cache_hit " << c.cache_hit
        << " executed " << c.executed << "\n";
  }
  return out.str();
}

std::string ReportDigest(const JobReport& r) { return ToHex(Sha256(AsBytes(ReportToJson(r)))); }

JobDriver::JobDriver(JobSpec spec, Manager* manager, StoreEndpoint* store,
                     std::shared_ptr<TrainingSetCache> training_sets)
    : spec_(std::move(spec)),
      plans_(PlanJob(spec_)),
      tag_(ExtractorTag(spec_)),
      manager_(manager),
      store_(store),
      training_sets_(std::move(training_sets)) {
  if (spec_.inputs.empty()) Fail(ErrorCode::kInvalidSpec, "job has no inputs");
  current_ = spec_.training_set.value_or(TrainingSet(tag_));
  if (current_.extractor_tag() != tag_) {
    Fail(ErrorCode::kInvalidSpec, "training set was built with " + current_.extractor_tag() +
                                      ", job extracts " + tag_);
  }
  if (spec_.mode == JobMode::kRecognize && current_.empty()) {
    Fail(ErrorCode::kInvalidSpec, "recognize needs a nonempty training set");
  }
  if (!current_.empty()) current_hash_ = training_sets_->Put(current_);
  inputs_.resize(spec_.inputs.size());
  for (std::size_t i = 0; i < inputs_.size(); ++i) inputs_[i].report.label = spec_.inputs[i].label;
}

DemandGenerator* JobDriver::PickGenerator(Stage stage) const {
  for (const TierId& id : manager_->TiersFor(TierKind::kDGT, stage)) {
    auto* g = dynamic_cast<DemandGenerator*>(manager_->FindTier(id));
    if (g != nullptr && !g->crashed()) return g;
  }
  return nullptr;
}

void JobDriver::AdvanceTrainCursor() {
  while (train_cursor_ < inputs_.size() && inputs_[train_cursor_].finished) ++train_cursor_;
}

bool JobDriver::TryGenerate(std::size_t index, InputState& st) {
  const StagePlan& base_plan = plans_[st.stage];
  StagePlan plan = base_plan;
  if (base_plan.stage == Stage::kTC) {
    if (spec_.mode == JobMode::kTrain) {
      if (index != train_cursor_) return false;
      plan.params["base"] = current_hash_;
    } else {
      plan.params["ts_hash"] = current_hash_;
    }
  }
  DemandGenerator* gen = PickGenerator(base_plan.stage);
  if (gen == nullptr) return false;
  Bytes payload = st.stage == 0
                      ? MakeStagePayload(Signature{}, spec_.inputs[index].data)
                      : MakeStagePayload(st.upstream_signature, st.upstream_stored);
  DemandGenerator::Generated g;
  try {
    g = gen->Generate(plan, payload);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kStoreUnreachable) return false;
    throw;
  }
  auto& counts = ledger_[st.stage];
  ++counts.generated;
  if (g.status == PutStatus::kEnqueued) {
    ++counts.executed;
  } else {
    ++counts.cache_hit;
  }
  st.signature = g.signature;
  st.awaiting = true;
  ++progress_;
  if (g.result) Accept(index, st, std::move(*g.result));
  return true;
}

void JobDriver::Accept(std::size_t index, InputState& st, Bytes stored) {
  (void)index;
  st.awaiting = false;
  ++progress_;
  StageOutcome outcome = DecodeStageOutcome(stored);
  if (!outcome.ok) {
    st.finished = true;
    st.report.ok = false;
    st.report.error_code = std::string(ErrorCodeName(outcome.error));
    st.report.error = outcome.message;
    st.report.final_signature = st.signature;
    AdvanceTrainCursor();
    return;
  }
  if (st.stage + 1 < plans_.size()) {
    st.upstream_signature = st.signature;
    st.upstream_stored = std::move(stored);
    ++st.stage;
    return;
  }
  st.finished = true;
  st.report.ok = true;
  st.report.final_signature = st.signature;
  if (spec_.mode == JobMode::kTrain) {
    current_ = TrainingSet::Decode(outcome.body);
    current_hash_ = training_sets_->Put(current_);
  } else {
    ResultSet rs = ResultSet::Decode(outcome.body);
    st.report.results = rs.Sorted();
    st.report.top = rs.MinimumId();
    if (rs.size() >= 2) st.report.second = rs.SecondMinimumId();
  }
  st.upstream_stored.clear();
  AdvanceTrainCursor();
}

bool JobDriver::Step(TimestampMs /*now*/) {
  for (std::size_t i = 0; i < inputs_.size(); ++i) {
    InputState& st = inputs_[i];
    // Loop so a cache hit can carry an input through several stages at once.
    while (!st.finished) {
      if (!st.awaiting) {
        if (!TryGenerate(i, st)) break;
        continue;
      }
      std::optional<Bytes> value;
      try {
        value = store_->Lookup(st.signature);
        if (!value && store_->Locate(st.signature) == SignatureLocation::kUnknown) {
          // The store lost the demand (crash without its pending queue);
          // put it again without counting it twice.
          if (DemandGenerator* gen = PickGenerator(plans_[st.stage].stage)) {
            StagePlan plan = plans_[st.stage];
            if (plan.stage == Stage::kTC) {
              plan.params[spec_.mode == JobMode::kTrain ? "base" : "ts_hash"] = current_hash_;
            }
            Bytes payload = st.stage == 0
                                ? MakeStagePayload(Signature{}, spec_.inputs[i].data)
                                : MakeStagePayload(st.upstream_signature, st.upstream_stored);
            auto g = gen->Generate(plan, payload);
            if (g.result) value = std::move(g.result);
          }
        }
      } catch (const Error& e) {
        if (e.code() != ErrorCode::kStoreUnreachable) throw;
      }
      if (!value) break;
      Accept(i, st, std::move(*value));
    }
  }
  return done();
}

bool JobDriver::done() const {
  for (const auto& st : inputs_) {
    if (!st.finished) return false;
  }
  return true;
}

JobReport JobDriver::Report() const {
  JobReport r;
  r.mode = spec_.mode;
  r.plans = plans_;
  r.ledger = ledger_;
  for (const auto& st : inputs_) r.inputs.push_back(st.report);
  if (spec_.mode == JobMode::kTrain) r.training_set = current_;
  return r;
}

SyntheticCorpus MakeSyntheticCorpus(std::size_t subjects, std::size_t train_per_subject,
                                    std::size_t held_out_per_subject, std::uint64_t seed,
                                    double noise, int rate_hz, double seconds) {
  SyntheticCorpus corpus;
  std::mt19937_64 rng(seed);
  auto unit = [&rng] { return static_cast<double>(rng() >> 11) * 0x1.0p-53; };
  for (std::size_t s = 1; s <= subjects; ++s) {
    // Tones on distinct FFT feature groups for every subject.
    const double f1 = 250.0 + 310.0 * static_cast<double>(s - 1);
    const double f2 = 1.7 * f1 + 95.0;
    auto make = [&](std::size_t k, bool held_out) {
      SyntheticRecording rec;
      rec.subject = static_cast<SubjectId>(s);
      rec.label = std::to_string(s) + "/" + (held_out ? "test" : "train") + std::to_string(k);
      double amp = 0.4 + 0.1 * unit();
      std::uint64_t noise_seed = rng();
      char buf[256];
      std::snprintf(buf, sizeof buf, "freq=%.3f+%.3f,amp=%.6f,dur=%.6g,rate=%d,noise=%.6g,seed=%llu", f1,
                    f2, amp, seconds, rate_hz, noise, static_cast<unsigned long long>(noise_seed));
      rec.spec = buf;
      return rec;
    };
    for (std::size_t k = 0; k < train_per_subject; ++k) corpus.train.push_back(make(k, false));
    for (std::size_t k = 0; k < held_out_per_subject; ++k) corpus.held_out.push_back(make(k, true));
  }
  return corpus;
}

}  // namespace edupipe
