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

#include "dpquery/record_io.h"

#include <fstream>
#include <optional>
#include <sstream>

#include "absl/strings/str_cat.h"
#include "nlohmann/json.hpp"

namespace dpquery {
namespace {

constexpr std::string_view kMemberField = "member_id";
constexpr std::string_view kDateField = "event_date";

absl::Status LineError(size_t line, std::string_view why) {
  return absl::InvalidArgumentError(
      absl::StrCat("line ", line, ": ", std::string(why)));
}

// Builds a record from field/value pairs; `line` is for messages.
absl::StatusOr<EventRecord> MakeRecord(
    std::vector<std::pair<std::string, std::string>> fields, size_t line) {
  EventRecord r;
  bool have_member = false, have_item = false, have_date = false;
  for (auto& [key, value] : fields) {
    if (key == kMemberField) {
      r.member_id = std::move(value);
      have_member = true;
    } else if (key == kItemColumn) {
      r.item = std::move(value);
      have_item = true;
    } else if (key == kDateField) {
      absl::StatusOr<Date> d = Date::Parse(value);
      if (!d.ok()) return LineError(line, std::string(d.status().message()));
      r.event_date = *d;
      have_date = true;
    } else if (!r.dimensions.emplace(key, std::move(value)).second) {
      return LineError(line, absl::StrCat("duplicate field '", key, "'"));
    }
  }
  if (!have_member || !have_item || !have_date) {
    return LineError(line, "member_id, item and event_date are required");
  }
  return r;
}

// Splits one CSV record starting at `pos`; advances `pos` past its line end.
absl::StatusOr<std::vector<std::string>> NextCsvRow(std::string_view text,
                                                    size_t& pos, size_t line) {
  std::vector<std::string> row;
  std::string field;
  bool quoted = false, was_quoted = false;
  while (pos < text.size()) {
    const char c = text[pos++];
    if (quoted) {
      if (c == '"') {
        if (pos < text.size() && text[pos] == '"') {
          field.push_back('"');
          ++pos;
        } else {
          quoted = false;
        }
      } else {
        field.push_back(c);
      }
      continue;
    }
    if (c == '"') {
      if (!field.empty() || was_quoted) {
        return LineError(line, "quote inside an unquoted field");
      }
      quoted = was_quoted = true;
    } else if (c == ',') {
      row.push_back(std::move(field));
      field.clear();
      was_quoted = false;
    } else if (c == '\n' || c == '\r') {
      if (c == '\r' && pos < text.size() && text[pos] == '\n') ++pos;
      break;
    } else {
      field.push_back(c);
    }
  }
  if (quoted) return LineError(line, "unterminated quoted field");
  row.push_back(std::move(field));
  return row;
}

}  // namespace

absl::StatusOr<std::vector<EventRecord>> ParseNdjsonRecords(
    std::string_view text) {
  std::vector<EventRecord> out;
  size_t line_no = 0;
  size_t pos = 0;
  while (pos < text.size()) {
    size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    const std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
    const nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object()) {
      return LineError(line_no, "not a JSON object");
    }
    std::vector<std::pair<std::string, std::string>> fields;
    for (const auto& [key, value] : j.items()) {
      if (!value.is_string()) {
        return LineError(line_no,
                         absl::StrCat("field '", key, "' is not a string"));
      }
      fields.emplace_back(key, value.get<std::string>());
    }
    absl::StatusOr<EventRecord> r = MakeRecord(std::move(fields), line_no);
    if (!r.ok()) return r.status();
    out.push_back(std::move(*r));
  }
  return out;
}

absl::StatusOr<std::vector<EventRecord>> ParseCsvRecords(
    std::string_view text) {
  std::vector<EventRecord> out;
  size_t pos = 0;
  size_t line_no = 1;
  absl::StatusOr<std::vector<std::string>> header = NextCsvRow(text, pos, 1);
  if (!header.ok()) return header.status();
  while (pos < text.size()) {
    ++line_no;
    const size_t start = pos;
    absl::StatusOr<std::vector<std::string>> row =
        NextCsvRow(text, pos, line_no);
    if (!row.ok()) return row.status();
    if (row->size() == 1 && (*row)[0].empty() &&
        text.substr(start, pos - start).find('"') == std::string_view::npos) {
      continue;  // blank line
    }
    if (row->size() != header->size()) {
      return LineError(line_no, absl::StrCat("expected ", header->size(),
                                             " fields, got ", row->size()));
    }
    std::vector<std::pair<std::string, std::string>> fields;
    for (size_t i = 0; i < row->size(); ++i) {
      fields.emplace_back((*header)[i], std::move((*row)[i]));
    }
    absl::StatusOr<EventRecord> r = MakeRecord(std::move(fields), line_no);
    if (!r.ok()) return r.status();
    out.push_back(std::move(*r));
  }
  return out;
}

absl::StatusOr<std::vector<EventRecord>> ReadRecordFile(
    const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    return absl::NotFoundError(
        absl::StrCat("cannot read records from ", path.string()));
  }
  std::stringstream buf;
  buf << in.rdbuf();
  const std::string text = buf.str();
  absl::StatusOr<std::vector<EventRecord>> records =
      path.extension() == ".csv" ? ParseCsvRecords(text)
                                 : ParseNdjsonRecords(text);
  if (!records.ok()) {
    return absl::Status(records.status().code(),
                        absl::StrCat(path.string(), ": ",
                                     std::string(records.status().message())));
  }
  return records;
}

std::string FormatNdjsonRecords(std::span<const EventRecord> records) {
  std::string out;
  for (const EventRecord& r : records) {
    // nlohmann::json objects keep keys sorted.
    nlohmann::json j = nlohmann::json::object();
    for (const auto& [k, v] : r.dimensions) j[k] = v;
    j[std::string(kMemberField)] = r.member_id;
    j[std::string(kItemColumn)] = r.item;
    j[std::string(kDateField)] = r.event_date.ToString();
    out += j.dump();
    out.push_back('\n');
  }
  return out;
}

}  // namespace dpquery
