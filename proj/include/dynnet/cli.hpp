// Copyright (c) 2026 The dynnet Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace dynnet::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInput = 2;
inline constexpr int kExitInfeasible = 3;
inline constexpr int kExitScenario = 4;

/**
 * Applies one `key=value` override to a config object. Dotted keys walk
 * nested objects; a key missing at the top level is looked up under each
 * of `sections` in turn. The value is parsed as JSON (bare words become
 * strings) and must match the type of the value it replaces.
 */
void apply_override(nlohmann::json& config, const std::string& assignment,
                    const std::vector<std::string>& sections = {});

/// Entry point of the `dynnet` tool. Returns the process exit code.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run(int argc, char** argv);

}  // namespace dynnet::cli
