//
// Copyright 2026 The dpquery Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//

#ifndef DPQUERY_QUERY_CLASS_H_
#define DPQUERY_QUERY_CLASS_H_

#include <cstdint>
#include <optional>
#include <string_view>

namespace dpquery {

enum class DomainClass { kKnown, kUnknown };
enum class SensitivityClass { kRestricted, kUnrestricted };

// Which of the four mechanisms a query runs under, with the parameters that
// decide its noise and its cost.
struct QueryClass {
  DomainClass domain = DomainClass::kUnknown;
  SensitivityClass sensitivity = SensitivityClass::kUnrestricted;
  int64_t max_changed = 0;  // restricted sensitivity; 0 when unrestricted
  int64_t tau = 1;
  int64_t k = 1;
  std::optional<int64_t> domain_size;  // set iff domain == kKnown

  friend bool operator==(const QueryClass&, const QueryClass&) = default;
};

inline std::string_view ToString(DomainClass d) {
  return d == DomainClass::kKnown ? "known" : "unknown";
}

inline std::string_view ToString(SensitivityClass s) {
  return s == SensitivityClass::kRestricted ? "restricted" : "unrestricted";
}

}  // namespace dpquery

#endif  // DPQUERY_QUERY_CLASS_H_
