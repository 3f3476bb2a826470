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

#include "dpquery/store.h"

#include <algorithm>
#include <set>

#include "absl/container/flat_hash_set.h"
#include "absl/strings/str_cat.h"
#include "absl/strings/str_join.h"

namespace dpquery {
namespace {

constexpr size_t kMaxReportedRows = 10;

uint32_t Encode(absl::flat_hash_map<std::string, uint32_t>& codes,
                std::vector<std::string>& dictionary, const std::string& v) {
  auto [it, inserted] =
      codes.try_emplace(v, static_cast<uint32_t>(dictionary.size()));
  if (inserted) dictionary.push_back(v);
  return it->second;
}

}  // namespace

absl::StatusOr<ColumnMeta> ColumnMeta::Create(
    std::string name, std::optional<std::vector<std::string>> domain,
    std::optional<int64_t> restricted_delta, int64_t tau) {
  if (name.empty()) return absl::InvalidArgumentError("column name is empty");
  if (domain.has_value()) {
    if (domain->empty()) {
      return absl::InvalidArgumentError(
          absl::StrCat("column '", name, "': declared domain is empty"));
    }
    std::set<std::string_view> seen;
    for (const std::string& v : *domain) {
      if (!seen.insert(v).second) {
        return absl::InvalidArgumentError(absl::StrCat(
            "column '", name, "': duplicate domain value '", v, "'"));
      }
    }
  }
  if (restricted_delta.has_value() && *restricted_delta < 1) {
    return absl::InvalidArgumentError(absl::StrCat(
        "column '", name, "': restricted sensitivity must be >= 1"));
  }
  if (tau < 1) {
    return absl::InvalidArgumentError(
        absl::StrCat("column '", name, "': tau must be >= 1"));
  }
  ColumnMeta meta;
  meta.name_ = std::move(name);
  meta.domain_ = std::move(domain);
  meta.restricted_delta_ = restricted_delta;
  meta.tau_ = tau;
  return meta;
}

ColumnMeta ColumnMeta::Undeclared(std::string name) {
  ColumnMeta meta;
  meta.name_ = std::move(name);
  return meta;
}

Filter& Filter::Equals(std::string column, std::string value) {
  predicates_.push_back({std::move(column), {std::move(value)}});
  return *this;
}

Filter& Filter::In(std::string column, std::vector<std::string> values) {
  predicates_.push_back({std::move(column), std::move(values)});
  return *this;
}

Filter Filter::Normalized() const {
  std::map<std::string, std::set<std::string>> merged;
  for (const Predicate& p : predicates_) {
    std::set<std::string> values(p.values.begin(), p.values.end());
    auto [it, inserted] = merged.try_emplace(p.column, values);
    if (!inserted) {
      std::set<std::string> both;
      std::set_intersection(it->second.begin(), it->second.end(),
                            values.begin(), values.end(),
                            std::inserter(both, both.end()));
      it->second = std::move(both);
    }
  }
  Filter out;
  for (auto& [column, values] : merged) {
    out.predicates_.push_back(
        {column, std::vector<std::string>(values.begin(), values.end())});
  }
  return out;
}

absl::Status TableSchema::Validate() const {
  if (name.empty()) return absl::InvalidArgumentError("table name is empty");
  std::set<std::string_view> seen{kItemColumn};
  for (const std::string& d : dimensions) {
    if (d.empty() || d == "member_id" || d == "event_date" ||
        !seen.insert(d).second) {
      return absl::InvalidArgumentError(
          absl::StrCat("table '", name, "': bad or duplicate dimension '", d,
                       "'"));
    }
  }
  std::set<std::string_view> declared;
  for (const ColumnMeta& meta : columns) {
    if (!HasColumn(meta.name())) {
      return absl::InvalidArgumentError(absl::StrCat(
          "table '", name, "': metadata for unknown column '", meta.name(),
          "'"));
    }
    if (!declared.insert(meta.name()).second) {
      return absl::InvalidArgumentError(absl::StrCat(
          "table '", name, "': column '", meta.name(), "' declared twice"));
    }
  }
  return absl::OkStatus();
}

bool TableSchema::HasColumn(std::string_view column) const {
  return column == kItemColumn ||
         std::find(dimensions.begin(), dimensions.end(), column) !=
             dimensions.end();
}

const ColumnMeta* TableSchema::FindMeta(std::string_view column) const {
  for (const ColumnMeta& meta : columns) {
    if (meta.name() == column) return &meta;
  }
  return nullptr;
}

absl::StatusOr<std::shared_ptr<const Table>> Table::Ingest(
    TableSchema schema, std::span<const EventRecord> records,
    const IngestOptions& options) {
  if (absl::Status s = schema.Validate(); !s.ok()) return s;
  if (options.retention_days < 1) {
    return absl::InvalidArgumentError("retention window must be >= 1 day");
  }

  std::vector<std::string> problems;
  size_t bad_rows = 0;
  for (size_t row = 0; row < records.size(); ++row) {
    const EventRecord& r = records[row];
    std::string why;
    if (r.member_id.empty()) {
      why = "empty member_id";
    } else if (r.dimensions.size() != schema.dimensions.size()) {
      why = absl::StrCat("expected ", schema.dimensions.size(),
                         " dimensions, got ", r.dimensions.size());
    } else {
      for (const std::string& d : schema.dimensions) {
        if (!r.dimensions.contains(d)) {
          why = absl::StrCat("missing dimension '", d, "'");
          break;
        }
      }
    }
    if (!why.empty()) {
      if (++bad_rows <= kMaxReportedRows) {
        problems.push_back(absl::StrCat("row ", row, ": ", why));
      }
    }
  }
  if (bad_rows > 0) {
    return absl::InvalidArgumentError(
        absl::StrCat("table '", schema.name, "': ", bad_rows,
                     " record(s) do not match the schema; ",
                     absl::StrJoin(problems, "; "),
                     bad_rows > kMaxReportedRows ? "; ..." : ""));
  }

  auto table = std::shared_ptr<Table>(new Table());
  table->snapshot_date_ = options.snapshot_date;
  const Date oldest_kept = options.snapshot_date.AddDays(1 - options.retention_days);

  table->columns_.resize(1 + schema.dimensions.size());
  table->columns_[0].name = std::string(kItemColumn);
  for (size_t i = 0; i < schema.dimensions.size(); ++i) {
    table->columns_[i + 1].name = schema.dimensions[i];
  }

  absl::flat_hash_map<std::string, uint32_t> member_codes;
  std::vector<std::string> member_ids;
  for (const EventRecord& r : records) {
    if (r.event_date < oldest_kept || r.event_date > options.snapshot_date) {
      ++table->report_.rejected_retention;
      continue;
    }
    table->members_.push_back(Encode(member_codes, member_ids, r.member_id));
    Column& item = table->columns_[0];
    item.codes.push_back(Encode(item.codes_by_value, item.dictionary, r.item));
    for (size_t i = 0; i < schema.dimensions.size(); ++i) {
      Column& c = table->columns_[i + 1];
      const std::string& v = r.dimensions.find(schema.dimensions[i])->second;
      c.codes.push_back(Encode(c.codes_by_value, c.dictionary, v));
    }
  }
  table->report_.accepted = table->members_.size();
  table->num_members_ = member_ids.size();

  // Unfiltered count indices.
  for (Column& c : table->columns_) {
    c.raw_counts.assign(c.dictionary.size(), 0);
    c.distinct_counts.assign(c.dictionary.size(), 0);
    std::vector<uint64_t> pairs;
    pairs.reserve(c.codes.size());
    for (size_t row = 0; row < c.codes.size(); ++row) {
      ++c.raw_counts[c.codes[row]];
      pairs.push_back((uint64_t{c.codes[row]} << 32) | table->members_[row]);
    }
    std::sort(pairs.begin(), pairs.end());
    pairs.erase(std::unique(pairs.begin(), pairs.end()), pairs.end());
    for (uint64_t p : pairs) ++c.distinct_counts[p >> 32];
  }

  table->schema_ = std::move(schema);
  return std::shared_ptr<const Table>(std::move(table));
}

absl::StatusOr<const Table::Column*> Table::FindColumn(
    std::string_view name) const {
  for (const Column& c : columns_) {
    if (c.name == name) return &c;
  }
  return absl::NotFoundError(
      absl::StrCat("table '", schema_.name, "' has no column '", std::string(name), "'"));
}

absl::StatusOr<std::vector<int64_t>> Table::CountByCode(
    const Column& group, const Filter& filter, Aggregation aggregation) const {
  if (filter.empty()) {
    return aggregation == Aggregation::kDistinct ? group.distinct_counts
                                                 : group.raw_counts;
  }
  // Per predicate, a membership bitmap over that column's dictionary codes.
  std::vector<std::pair<const Column*, std::vector<bool>>> tests;
  for (const Predicate& p : filter.predicates()) {
    absl::StatusOr<const Column*> column = FindColumn(p.column);
    if (!column.ok()) return column.status();
    std::vector<bool> allowed((*column)->dictionary.size(), false);
    for (const std::string& v : p.values) {
      auto it = (*column)->codes_by_value.find(v);
      if (it != (*column)->codes_by_value.end()) allowed[it->second] = true;
    }
    tests.emplace_back(*column, std::move(allowed));
  }
  auto passes = [&](size_t row) {
    for (const auto& [column, allowed] : tests) {
      if (!allowed[column->codes[row]]) return false;
    }
    return true;
  };

  std::vector<int64_t> counts(group.dictionary.size(), 0);
  if (aggregation == Aggregation::kRaw) {
    for (size_t row = 0; row < members_.size(); ++row) {
      if (passes(row)) ++counts[group.codes[row]];
    }
    return counts;
  }
  std::vector<uint64_t> pairs;
  for (size_t row = 0; row < members_.size(); ++row) {
    if (passes(row)) {
      pairs.push_back((uint64_t{group.codes[row]} << 32) | members_[row]);
    }
  }
  std::sort(pairs.begin(), pairs.end());
  pairs.erase(std::unique(pairs.begin(), pairs.end()), pairs.end());
  for (uint64_t p : pairs) ++counts[p >> 32];
  return counts;
}

absl::StatusOr<HistogramSlice> Table::TopCounts(std::string_view group_by,
                                                const Filter& filter,
                                                size_t limit,
                                                Aggregation aggregation) const {
  if (limit == 0) return absl::InvalidArgumentError("limit must be >= 1");
  absl::StatusOr<const Column*> group = FindColumn(group_by);
  if (!group.ok()) return group.status();
  absl::StatusOr<std::vector<int64_t>> counts =
      CountByCode(**group, filter, aggregation);
  if (!counts.ok()) return counts.status();

  std::vector<uint32_t> present;
  for (uint32_t code = 0; code < counts->size(); ++code) {
    if ((*counts)[code] > 0) present.push_back(code);
  }
  const auto& dictionary = (*group)->dictionary;
  auto before = [&](uint32_t a, uint32_t b) {
    if ((*counts)[a] != (*counts)[b]) return (*counts)[a] > (*counts)[b];
    return dictionary[a] < dictionary[b];
  };
  const size_t n = std::min(limit, present.size());
  std::partial_sort(present.begin(), present.begin() + n, present.end(),
                    before);

  HistogramSlice slice;
  slice.truncated_at = limit;
  slice.aggregation = aggregation;
  slice.entries.reserve(n);
  for (size_t i = 0; i < n; ++i) {
    slice.entries.push_back({dictionary[present[i]], (*counts)[present[i]]});
  }
  return slice;
}

absl::StatusOr<std::optional<size_t>> Table::DomainSize(
    std::string_view column) const {
  absl::StatusOr<ColumnMeta> meta = Meta(column);
  if (!meta.ok()) return meta.status();
  if (!meta->known_domain()) return std::optional<size_t>();
  return std::optional<size_t>(meta->domain()->size());
}

absl::StatusOr<std::vector<HistogramEntry>> Table::DomainCounts(
    std::string_view group_by, const Filter& filter,
    Aggregation aggregation) const {
  absl::StatusOr<ColumnMeta> meta = Meta(group_by);
  if (!meta.ok()) return meta.status();
  if (!meta->known_domain()) {
    return absl::FailedPreconditionError(
        absl::StrCat("column '", std::string(group_by), "' has no declared domain"));
  }
  absl::StatusOr<const Column*> group = FindColumn(group_by);
  if (!group.ok()) return group.status();
  absl::StatusOr<std::vector<int64_t>> counts =
      CountByCode(**group, filter, aggregation);
  if (!counts.ok()) return counts.status();

  std::vector<HistogramEntry> out;
  out.reserve(meta->domain()->size());
  for (const std::string& value : *meta->domain()) {
    auto it = (*group)->codes_by_value.find(value);
    out.push_back(
        {value, it == (*group)->codes_by_value.end() ? 0 : (*counts)[it->second]});
  }
  return out;
}

absl::StatusOr<ColumnMeta> Table::Meta(std::string_view column) const {
  if (!schema_.HasColumn(column)) {
    return absl::NotFoundError(absl::StrCat("table '", schema_.name,
                                            "' has no column '", std::string(column), "'"));
  }
  if (const ColumnMeta* meta = schema_.FindMeta(column)) return *meta;
  return ColumnMeta::Undeclared(std::string(column));
}

absl::Status Catalog::Add(std::shared_ptr<const Table> table) {
  auto key = std::make_pair(table->schema().name, table->snapshot_date());
  if (!tables_.emplace(key, std::move(table)).second) {
    return absl::AlreadyExistsError(absl::StrCat(
        "snapshot ", key.first, "@", key.second.ToString(), " already loaded"));
  }
  return absl::OkStatus();
}

absl::StatusOr<std::shared_ptr<const Table>> Catalog::Get(
    std::string_view name, Date snapshot_date) const {
  auto it = tables_.find(std::make_pair(std::string(name), snapshot_date));
  if (it == tables_.end()) {
    return absl::NotFoundError(absl::StrCat("no snapshot of table '", std::string(name),
                                            "' for ",
                                            snapshot_date.ToString()));
  }
  return it->second;
}

std::vector<std::pair<std::string, Date>> Catalog::List() const {
  std::vector<std::pair<std::string, Date>> out;
  for (const auto& [key, table] : tables_) out.push_back(key);
  return out;
}

}  // namespace dpquery
