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

#include <atomic>
#include <chrono>

#include "edupipe/common.h"

namespace edupipe {

// Injected time source. Live mode uses WallClock; the simulator drives a
// VirtualClock so every timestamp is a function of the tick count.
class Clock {
 public:
  virtual ~Clock() = default;
  virtual TimestampMs NowMs() const = 0;
};

class WallClock final : public Clock {
 public:
  WallClock() : epoch_(std::chrono::steady_clock::now()) {}

  TimestampMs NowMs() const override {
    return std::chrono::duration_cast<std::chrono::milliseconds>(
               std::chrono::steady_clock::now() - epoch_)
        .count();
  }

 private:
  std::chrono::steady_clock::time_point epoch_;
};

class VirtualClock final : public Clock {
 public:
  explicit VirtualClock(TimestampMs start = 0) : now_(start) {}

  TimestampMs NowMs() const override { return now_.load(std::memory_order_relaxed); }
  void Advance(DurationMs delta) { now_.fetch_add(delta, std::memory_order_relaxed); }
  void Set(TimestampMs t) { now_.store(t, std::memory_order_relaxed); }

 private:
  std::atomic<TimestampMs> now_;
};

}  // namespace edupipe
