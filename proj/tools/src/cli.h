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

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "edupipe/runtime.h"
#include "edupipe/tiers.h"

namespace edupipe::cli {

// Exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitPipelineError = 1;
inline constexpr int kExitBadInput = 2;
inline constexpr int kExitAssertionFailed = 3;

// Environment variable naming the default config file.
inline constexpr char kConfigEnv[] = "EDU_PIPE_CONFIG";

// Built-in settings: mode, loader, preproc, fe, metric, policy, store, wal,
// seed, nodes, workers, timeout_ms.
Configuration DefaultConfig();

// defaults <- config file (when given) <- flags.
Configuration MergeConfig(const Configuration& defaults, const std::optional<std::string>& config_file,
                          const Configuration& flags);

// "name" or "name:key=value,key=value". Values that parse as integers or
// reals become numbers.
ModuleChoice ParseModuleChoice(std::string_view text);

// Parses args (without the program name) and runs the subcommand.
int Run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace edupipe::cli
