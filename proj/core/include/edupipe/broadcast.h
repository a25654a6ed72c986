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

#include <optional>
#include <span>
#include <variant>

#include "edupipe/clock.h"
#include "edupipe/demand.h"

namespace edupipe {

// A delegate that may already hold a computed result.
class ResultPeer {
 public:
  virtual ~ResultPeer() = default;
  // nullopt when the peer does not hold `sig` or does not answer.
  virtual std::optional<Bytes> QueryResult(const Signature& sig) = 0;
};

struct Adopted {
  Bytes result;
};
struct ComputeLocally {};

using BroadcastOutcome = std::variant<Adopted, ComputeLocally>;

// Asks each peer in order for `sig` until one answers or `timeout` elapses
// on `clock`. A peer that throws counts as not answering.
BroadcastOutcome BroadcastBeforeCompute(const Signature& sig, std::span<ResultPeer* const> peers,
                                        const Clock& clock, DurationMs timeout);

}  // namespace edupipe
