// Copyright 2026 The gtic Authors. All Rights Reserved.
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

#ifndef GTIC_CLI_HPP_
#define GTIC_CLI_HPP_

#include <string>
#include <vector>

namespace gtic {

// Full command-line surface; returns the process exit code. Rejections
// print a diagnostic to stderr and return nonzero.
int run_cli(std::vector<std::string> args);

// "lo:hi:step" -> inclusive grid; step > 0, lo <= hi.
std::vector<double> parse_n_grid(const std::string& spec);

}  // namespace gtic

#endif  // GTIC_CLI_HPP_
