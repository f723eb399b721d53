// Copyright 2026 The ppcf Authors
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

#include <stdexcept>
#include <string>
#include <string_view>

namespace ppcf {

// Exit codes of the command line tool map one-to-one onto these kinds.
enum class ErrorKind : int {
  kUsage = 1,
  kData = 2,
  kBackend = 3,
  kNumeric = 4,
};

std::string_view ErrorKindName(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }
  int exit_code() const noexcept { return static_cast<int>(kind_); }

 private:
  ErrorKind kind_;
};

[[noreturn]] void ThrowUsage(const std::string& message);
[[noreturn]] void ThrowData(const std::string& message);
[[noreturn]] void ThrowBackend(const std::string& message);
[[noreturn]] void ThrowNumeric(const std::string& message);

}  // namespace ppcf
