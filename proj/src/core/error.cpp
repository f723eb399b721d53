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

#include "ppcf/core/error.hpp"

namespace ppcf {

std::string_view ErrorKindName(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kUsage:
      return "usage";
    case ErrorKind::kData:
      return "data";
    case ErrorKind::kBackend:
      return "backend";
    case ErrorKind::kNumeric:
      return "numeric";
  }
  return "unknown";
}

void ThrowUsage(const std::string& message) {
  throw Error(ErrorKind::kUsage, message);
}
void ThrowData(const std::string& message) {
  throw Error(ErrorKind::kData, message);
}
void ThrowBackend(const std::string& message) {
  throw Error(ErrorKind::kBackend, message);
}
void ThrowNumeric(const std::string& message) {
  throw Error(ErrorKind::kNumeric, message);
}

}  // namespace ppcf
