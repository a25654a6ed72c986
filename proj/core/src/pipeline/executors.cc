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

#include "edupipe/pipeline/executors.h"

#include "edupipe/pipeline/features.h"
#include "edupipe/pipeline/marf.h"
#include "edupipe/pipeline/preprocessing.h"
#include "edupipe/pipeline/sample.h"

namespace edupipe {

Bytes MakeStagePayload(const Signature& upstream, ByteView stored) {
  Bytes out(upstream.view().begin(), upstream.view().end());
  PutBytes(out, stored);
  return out;
}

StagePayload SplitStagePayload(ByteView payload) {
  if (payload.size() < Signature::kSize) Fail(ErrorCode::kMalformedRecord, "stage payload shorter than a signature");
  return {Signature::FromBytes(payload.first(Signature::kSize)), payload.subspan(Signature::kSize)};
}

std::string TrainingSetCache::Put(TrainingSet ts) {
  std::string hash = ts.ContentHash();
  std::lock_guard<std::mutex> l(mu_);
  sets_.try_emplace(hash, std::move(ts));
  return hash;
}

std::optional<TrainingSet> TrainingSetCache::Get(const std::string& hash) const {
  std::lock_guard<std::mutex> l(mu_);
  auto it = sets_.find(hash);
  if (it == sets_.end()) return std::nullopt;
  return it->second;
}

double ParamDouble(const Params& p, std::string_view key, double fallback) {
  auto it = p.find(key);
  if (it == p.end()) return fallback;
  if (auto* d = std::get_if<double>(&it->second)) return *d;
  if (auto* i = std::get_if<std::int64_t>(&it->second)) return static_cast<double>(*i);
  Fail(ErrorCode::kBadParameter, "parameter '" + std::string(key) + "' must be numeric");
}

std::int64_t ParamInt(const Params& p, std::string_view key, std::int64_t fallback) {
  auto it = p.find(key);
  if (it == p.end()) return fallback;
  if (auto* i = std::get_if<std::int64_t>(&it->second)) return *i;
  Fail(ErrorCode::kBadParameter, "parameter '" + std::string(key) + "' must be an integer");
}

std::string ParamString(const Params& p, std::string_view key, std::string fallback) {
  auto it = p.find(key);
  if (it == p.end()) return fallback;
  if (auto* s = std::get_if<std::string>(&it->second)) return *s;
  Fail(ErrorCode::kBadParameter, "parameter '" + std::string(key) + "' must be a string");
}

namespace {

// Body of the upstream stage's stored outcome.
ByteView UpstreamBody(const Demand& d) {
  auto payload = SplitStagePayload(d.payload());
  StageOutcome outcome = DecodeStageOutcome(payload.stored);
  if (!outcome.ok) Fail(outcome.error, "upstream stage failed: " + outcome.message);
  // DecodeStageOutcome copies; the body sits after the status byte.
  return payload.stored.subspan(1);
}

Sample UpstreamSample(const Demand& d) { return DecodeSample(UpstreamBody(d)); }

std::size_t ParamSize(const Params& p, std::string_view key, std::int64_t fallback) {
  std::int64_t v = ParamInt(p, key, fallback);
  if (v <= 0) Fail(ErrorCode::kBadParameter, "parameter '" + std::string(key) + "' must be positive");
  return static_cast<std::size_t>(v);
}

void RegisterLoaders(ExecutorRegistry& r) {
  for (AudioFormat f : {AudioFormat::kWav, AudioFormat::kSine, AudioFormat::kText,
                        AudioFormat::kRaw, AudioFormat::kMp3, AudioFormat::kUlaw,
                        AudioFormat::kMidi}) {
    r.Register(Stage::kSL, "load_" + std::string(ToString(f)), [f](const Demand& d) {
      auto payload = SplitStagePayload(d.payload());
      Sample s = LoadSample(f, payload.stored);
      if (auto rate = ParamInt(d.params(), "rate", 0); rate > 0 && f != AudioFormat::kWav &&
                                                       f != AudioFormat::kSine) {
        s.rate_hz = static_cast<int>(rate);
      }
      return EncodeSample(s);
    });
  }
}

void RegisterPreprocessing(ExecutorRegistry& r) {
  r.Register(Stage::kP, "raw", [](const Demand& d) { return EncodeSample(UpstreamSample(d)); });
  r.Register(Stage::kP, "normalize", [](const Demand& d) {
    return EncodeSample(Normalize(UpstreamSample(d)));
  });
  r.Register(Stage::kP, "remove_silence", [](const Demand& d) {
    return EncodeSample(RemoveSilence(UpstreamSample(d), ParamDouble(d.params(), "threshold",
                                                                     kDefaultSilenceThreshold)));
  });
  r.Register(Stage::kP, "endpoint", [](const Demand& d) {
    return EncodeSample(Endpoint(UpstreamSample(d), ParamDouble(d.params(), "threshold",
                                                                kDefaultSilenceThreshold)));
  });
  r.Register(Stage::kP, "fft_filter", [](const Demand& d) {
    Sample s = UpstreamSample(d);
    FilterSpec spec;
    spec.kind = ParseFilterKind(ParamString(d.params(), "kind", "low_pass"));
    spec.low = ParamDouble(d.params(), "low", s.rate_hz / 4.0);
    spec.high = ParamDouble(d.params(), "high", 0.0);
    spec.boost_gain = ParamDouble(d.params(), "gain", 2.0);
    return EncodeSample(FftFilter(s, spec));
  });
  r.Register(Stage::kP, "remove_noise", [](const Demand& d) {
    Sample s = UpstreamSample(d);
    std::optional<double> cutoff;
    if (d.params().contains("cutoff")) cutoff = ParamDouble(d.params(), "cutoff", 0.0);
    return EncodeSample(RemoveNoise(s, cutoff));
  });
}

void RegisterFeatureExtraction(ExecutorRegistry& r) {
  r.Register(Stage::kFE, "extract_fft", [](const Demand& d) {
    FftFeatureConfig c;
    c.length = ParamSize(d.params(), "length", static_cast<std::int64_t>(c.length));
    c.window = ParamSize(d.params(), "window", static_cast<std::int64_t>(c.window));
    c.hop = ParamSize(d.params(), "hop", static_cast<std::int64_t>(c.window / 2));
    c.bins = ParamSize(d.params(), "bins", static_cast<std::int64_t>(c.window / 2));
    return EncodeFeatures(ExtractFftFeatures(UpstreamSample(d), c));
  });
  r.Register(Stage::kFE, "extract_lpc", [](const Demand& d) {
    return EncodeFeatures(ExtractLpcFeatures(UpstreamSample(d), ParamSize(d.params(), "order", 20)));
  });
  r.Register(Stage::kFE, "extract_minmax", [](const Demand& d) {
    return EncodeFeatures(ExtractMinMaxFeatures(UpstreamSample(d), ParamSize(d.params(), "length", 128)));
  });
}

void RegisterClassification(ExecutorRegistry& r, std::shared_ptr<TrainingSetCache> cache) {
  r.Register(Stage::kTC, "train", [cache](const Demand& d) {
    FeatureVector fv = DecodeFeatures(UpstreamBody(d));
    std::string base = ParamString(d.params(), "base", "");
    TrainingSet ts(ParamString(d.params(), "tag", ""));
    if (!base.empty()) {
      auto found = cache->Get(base);
      // Not a property of the inputs: leave the claim to the lease.
      if (!found) Fail(ErrorCode::kExecutorFailure, "training set " + base + " not available here");
      ts = std::move(*found);
    }
    std::int64_t subject = ParamInt(d.params(), "subject", -1);
    if (subject < 0 || subject > 0xFFFFFFFFll) Fail(ErrorCode::kBadParameter, "train needs a subject id");
    ts.Train(static_cast<SubjectId>(subject), fv);
    Bytes encoded = ts.Encode();
    cache->Put(std::move(ts));
    return encoded;
  });
  r.Register(Stage::kTC, "classify", [cache](const Demand& d) {
    FeatureVector fv = DecodeFeatures(UpstreamBody(d));
    std::string hash = ParamString(d.params(), "ts_hash", "");
    auto ts = cache->Get(hash);
    if (!ts) Fail(ErrorCode::kExecutorFailure, "training set " + hash + " not available here");
    std::string tag = ParamString(d.params(), "tag", ts->extractor_tag());
    if (tag != ts->extractor_tag()) {
      Fail(ErrorCode::kBadParameter, "features from " + tag + " against a " + ts->extractor_tag() + " training set");
    }
    MetricParams mp;
    mp.minkowski_p = ParamDouble(d.params(), "minkowski_p", mp.minkowski_p);
    mp.hamming_tau = ParamDouble(d.params(), "hamming_tau", mp.hamming_tau);
    mp.diff_tau = ParamDouble(d.params(), "diff_tau", mp.diff_tau);
    Metric metric = ParseMetric(ParamString(d.params(), "metric", "euclidean"));
    return Classify(*ts, fv, metric, mp).Encode();
  });
}

void RegisterDeclaredGaps(ExecutorRegistry& r) {
  for (const MarfModule& m : MarfModules()) {
    if (m.implemented || m.kind == ModuleKind::kClassification) continue;
    std::string op(m.operation);
    if (r.Has(op)) continue;
    Stage stage = m.kind == ModuleKind::kPreprocessing ? Stage::kP : Stage::kFE;
    r.Register(stage, op, [name = std::string(m.constant)](const Demand&) -> Bytes {
      Fail(ErrorCode::kUnsupportedMethod, name + " is declared but not implemented");
    });
  }
}

}  // namespace

void RegisterPipelineExecutors(ExecutorRegistry& registry,
                               std::shared_ptr<TrainingSetCache> training_sets) {
  RegisterLoaders(registry);
  RegisterPreprocessing(registry);
  RegisterFeatureExtraction(registry);
  RegisterClassification(registry, std::move(training_sets));
  RegisterDeclaredGaps(registry);
}

}  // namespace edupipe
