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

#ifndef GTIC_ERROR_HPP_
#define GTIC_ERROR_HPP_

#include <sstream>
#include <stdexcept>
#include <string>

namespace gtic {

// Every rejected precondition and malformed input surfaces as gtic::Error.
// The CLI catches it at the top level, prints the message and exits nonzero.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

namespace detail {
inline void format_into(std::ostringstream&) {}
template <typename A, typename... Rest>
void format_into(std::ostringstream& os, const A& a, const Rest&... rest) {
  os << a;
  format_into(os, rest...);
}
}  // namespace detail

template <typename... Args>
[[noreturn]] void fail(const Args&... args) {
  std::ostringstream os;
  detail::format_into(os, args...);
  throw Error(os.str());
}

}  // namespace gtic

#define GTIC_REQUIRE(cond, ...)        \
  do {                                 \
    if (!(cond)) ::gtic::fail(__VA_ARGS__); \
  } while (0)

#endif  // GTIC_ERROR_HPP_
