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

// Event record files.
//
// NDJSON: one flat object per line. "member_id", "item" and "event_date"
// (YYYY-MM-DD) are required; every other key is a dimension. All values are
// strings. Blank lines are skipped.
//
// CSV: RFC 4180 quoting, a header row naming the same fields.

#ifndef DPQUERY_RECORD_IO_H_
#define DPQUERY_RECORD_IO_H_

#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "absl/status/statusor.h"
#include "dpquery/store.h"

namespace dpquery {

absl::StatusOr<std::vector<EventRecord>> ParseNdjsonRecords(
    std::string_view text);
absl::StatusOr<std::vector<EventRecord>> ParseCsvRecords(std::string_view text);

// Picks the format by extension: ".csv" is CSV, anything else NDJSON.
absl::StatusOr<std::vector<EventRecord>> ReadRecordFile(
    const std::filesystem::path& path);

// One line per record, keys sorted.
std::string FormatNdjsonRecords(std::span<const EventRecord> records);

}  // namespace dpquery

#endif  // DPQUERY_RECORD_IO_H_
