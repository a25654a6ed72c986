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

#include <span>
#include <string_view>

namespace edupipe {

enum class ModuleKind { kPreprocessing, kFeatureExtraction, kClassification };

std::string_view ToString(ModuleKind k);

// One entry of the MARF numeric method enumeration.
struct MarfModule {
  int id;
  std::string_view constant;
  // Short name accepted on the command line and in config files.
  std::string_view alias;
  ModuleKind kind;
  // Executor operation, and the filter kind for fft_filter entries.
  std::string_view operation;
  std::string_view filter;
  bool implemented;
};

std::span<const MarfModule> MarfModules();

// Accepts the numeric id ("104"), the constant ("LOW_PASS_FFT_FILTER") or
// the alias ("low_pass"), case-insensitively. 504 resolves to Chebyshev.
// Throws kUnsupportedMethod for unknown names.
const MarfModule& FindMarfModule(ModuleKind kind, std::string_view name_or_id);

}  // namespace edupipe
