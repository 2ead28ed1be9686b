// Copyright 2026 The tokalign Authors
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

#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>

namespace tokalign {

/// Broad failure classes. The numeric values double as CLI exit codes.
enum class ErrorKind : int {
    Usage = 1,      // bad arguments, invalid configuration
    Data = 2,       // unreadable file, malformed format, violated data precondition
    Numerical = 3,  // divergence, non-finite values
};

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

namespace detail {
template <class... Args>
std::string concat(Args&&... args) {
    std::ostringstream os;
    (os << ... << std::forward<Args>(args));
    return os.str();
}
}  // namespace detail

template <class... Args>
[[noreturn]] void fail_usage(Args&&... args) {
    throw Error(ErrorKind::Usage, detail::concat(std::forward<Args>(args)...));
}

template <class... Args>
[[noreturn]] void fail_data(Args&&... args) {
    throw Error(ErrorKind::Data, detail::concat(std::forward<Args>(args)...));
}

template <class... Args>
[[noreturn]] void fail_numerical(Args&&... args) {
    throw Error(ErrorKind::Numerical, detail::concat(std::forward<Args>(args)...));
}

}  // namespace tokalign
