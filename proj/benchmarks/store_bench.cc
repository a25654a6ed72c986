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

#include "edupipe/store.h"

namespace edupipe {
namespace {

std::vector<Demand> MakeDemands(std::size_t n) {
  DemandIdGenerator ids(1);
  std::vector<Demand> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    out.push_back(Demand::Create(ids.Next(), DemandType::kProcedural, "P", "normalize",
                                 {{"i", static_cast<std::int64_t>(i)}}, {}));
  }
  return out;
}

void BM_PutClaimStore(benchmark::State& state) {
  auto demands = MakeDemands(static_cast<std::size_t>(state.range(0)));
  const OperationPool pool{"normalize"};
  const Bytes result{1, 2, 3, 4};
  for (auto _ : state) {
    DemandStore store;
    store.SetAuditEveryOperation(state.range(1) != 0);
    for (const auto& d : demands) store.PutDemand(d);
    while (auto d = store.ClaimPending("w", pool, 0)) store.StoreResult(d->signature(), result, "w", 0);
    benchmark::DoNotOptimize(store.warehouse_size());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_PutClaimStore)->Args({1000, 0})->Args({1000, 1})->Args({10000, 0});

void BM_WarmLookup(benchmark::State& state) {
  auto demands = MakeDemands(10000);
  DemandStore store;
  for (const auto& d : demands) store.InstallResult(d.signature(), Bytes{1});
  std::size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(store.PutDemand(demands[i++ % demands.size()]));
  }
}
BENCHMARK(BM_WarmLookup);

void BM_Signature(benchmark::State& state) {
  Params params{{"a", std::int64_t{1}}, {"b", 2.5}, {"c", std::string("x")}};
  Bytes payload(static_cast<std::size_t>(state.range(0)), 0x5a);
  for (auto _ : state) {
    benchmark::DoNotOptimize(ComputeSignature("FE", "extract_fft", params, payload));
  }
  state.SetBytesProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Signature)->Arg(64)->Arg(64 * 1024);

}  // namespace
}  // namespace edupipe

BENCHMARK_MAIN();
