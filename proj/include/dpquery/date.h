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

#ifndef DPQUERY_DATE_H_
#define DPQUERY_DATE_H_

#include <chrono>
#include <compare>
#include <string>
#include <string_view>

#include "absl/status/statusor.h"

namespace dpquery {

// Calendar date of a dataset snapshot or event, UTC.
class Date {
 public:
  constexpr Date() = default;
  constexpr explicit Date(std::chrono::sys_days days) : days_(days) {}
  constexpr Date(int year, unsigned month, unsigned day)
      : days_(std::chrono::year{year} / std::chrono::month{month} /
              std::chrono::day{day}) {}

  // Parses strict ISO "YYYY-MM-DD".
  static absl::StatusOr<Date> Parse(std::string_view text);

  std::string ToString() const;
  constexpr std::chrono::sys_days days() const { return days_; }
  constexpr Date AddDays(int n) const {
    return Date(days_ + std::chrono::days{n});
  }

  friend constexpr auto operator<=>(const Date&, const Date&) = default;

 private:
  std::chrono::sys_days days_{};
};

// Wall-clock instant with millisecond resolution, as stored in the budget
// journal.
using Timestamp = std::chrono::sys_time<std::chrono::milliseconds>;

}  // namespace dpquery

#endif  // DPQUERY_DATE_H_
