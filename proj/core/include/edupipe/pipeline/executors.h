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
#include <memory>
#include <mutex>
#include <optional>
#include <string>

#include "edupipe/demand.h"
#include "edupipe/pipeline/classify.h"
#include "edupipe/tiers.h"

namespace edupipe {

// Stage payload: the upstream demand's 32-byte signature followed by the
// upstream warehouse bytes (the loader stage uses a zero signature and the
// raw input instead).
Bytes MakeStagePayload(const Signature& upstream, ByteView stored);

struct StagePayload {
  Signature upstream;
  ByteView stored;
};

// Throws kMalformedRecord if the payload is shorter than a signature.
StagePayload SplitStagePayload(ByteView payload);

// Training sets by content hash, shared by the classification executors.
class TrainingSetCache {
 public:
  // Returns the content hash.
  std::string Put(TrainingSet ts);
  std::optional<TrainingSet> Get(const std::string& hash) const;

 private:
  mutable std::mutex mu_;
  std::map<std::string, TrainingSet, std::less<>> sets_;
};

// Registers every pipeline operation:
//   SL  load_wav load_sine load_text load_raw (load_mp3/ulaw/midi reject)
//   P   normalize remove_silence endpoint fft_filter remove_noise raw
//   FE  extract_fft extract_lpc extract_minmax (f0/segmentation/cepstral
//       and the other declared extractors reject)
//   TC  train classify
// `train` takes params subject, base (hash of the set to extend, empty for
// a fresh set) and tag, and returns the encoded new set. `classify` takes
// metric and ts_hash and returns an encoded ResultSet.
void RegisterPipelineExecutors(ExecutorRegistry& registry,
                               std::shared_ptr<TrainingSetCache> training_sets);

// Parameter accessors with defaults; ints widen to double. Throw
// kBadParameter on a type mismatch.
double ParamDouble(const Params& p, std::string_view key, double fallback);
std::int64_t ParamInt(const Params& p, std::string_view key, std::int64_t fallback);
std::string ParamString(const Params& p, std::string_view key, std::string fallback);

}  // namespace edupipe
