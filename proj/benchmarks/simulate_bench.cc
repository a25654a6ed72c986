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

#include <benchmark/benchmark.h>

#include "edupipe/simharness.h"

namespace edupipe {
namespace {

Scenario Toy(std::size_t nodes, bool wal) {
  Scenario sc;
  sc.policy = RecoveryPolicy::kIfCrashThenRestart;
  sc.topology = TopologySpec::Uniform(nodes);
  sc.wal = wal;
  return sc;
}

void BM_SimulateToy(benchmark::State& state) {
  Scenario sc = Toy(static_cast<std::size_t>(state.range(0)), state.range(1) != 0);
  for (auto _ : state) benchmark::DoNotOptimize(Simulate(sc).report_digest);
}
BENCHMARK(BM_SimulateToy)->Args({1, 0})->Args({1, 1})->Args({2, 0})->Unit(benchmark::kMillisecond);

void BM_KillAndHeal(benchmark::State& state) {
  Scenario sc = Toy(2, false);
  sc.events = {{8, EventAction::kKillTier, "node-0/DWT/1"}};
  for (auto _ : state) benchmark::DoNotOptimize(Simulate(sc).report_digest);
}
BENCHMARK(BM_KillAndHeal)->Unit(benchmark::kMillisecond);

}  // namespace
}  // namespace edupipe

BENCHMARK_MAIN();
