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

#include "edupipe/broadcast.h"

namespace edupipe {

BroadcastOutcome BroadcastBeforeCompute(const Signature& sig, std::span<ResultPeer* const> peers,
                                        const Clock& clock, DurationMs timeout) {
  const TimestampMs deadline = clock.NowMs() + timeout;
  for (ResultPeer* peer : peers) {
    if (peer == nullptr) continue;
    if (clock.NowMs() > deadline) break;
    try {
      if (auto r = peer->QueryResult(sig)) return Adopted{std::move(*r)};
    } catch (const std::exception&) {
      // An unreachable peer is the same as a silent one.
    }
  }
  return ComputeLocally{};
}

}  // namespace edupipe
