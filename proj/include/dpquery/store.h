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

// In-process columnar event store answering exact group-by count queries.
//
// A Table is an immutable snapshot of one day's data. Every column is
// dictionary encoded; per-column raw and distinct-member counts are indexed at
// ingest so unfiltered group-bys never scan rows.

#ifndef DPQUERY_STORE_H_
#define DPQUERY_STORE_H_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "absl/container/flat_hash_map.h"
#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "dpquery/date.h"

namespace dpquery {

// Built-in column holding the engaged element (article id etc.).
inline constexpr std::string_view kItemColumn = "item";

enum class Aggregation { kDistinct, kRaw };

struct EventRecord {
  std::string member_id;
  std::map<std::string, std::string, std::less<>> dimensions;
  std::string item;
  Date event_date;
};

struct HistogramEntry {
  std::string element;
  int64_t count = 0;

  friend bool operator==(const HistogramEntry&, const HistogramEntry&) = default;
};

// Top of a group-by, sorted by count descending then element ascending.
struct HistogramSlice {
  std::vector<HistogramEntry> entries;
  size_t truncated_at = 0;
  Aggregation aggregation = Aggregation::kDistinct;

  // Count at 1-based `rank`. Ranks past the real entries are 0.
  int64_t RankCount(size_t rank) const {
    return rank >= 1 && rank <= entries.size() ? entries[rank - 1].count : 0;
  }
};

class ColumnMeta {
 public:
  // InvalidArgument when the domain has duplicates or is empty, when a
  // restricted sensitivity is below 1, or when tau < 1.
  static absl::StatusOr<ColumnMeta> Create(
      std::string name, std::optional<std::vector<std::string>> domain,
      std::optional<int64_t> restricted_delta, int64_t tau = 1);

  // Metadata for a column nothing was declared about: unknown domain,
  // unrestricted sensitivity, tau = 1.
  static ColumnMeta Undeclared(std::string name);

  const std::string& name() const { return name_; }
  bool known_domain() const { return domain_.has_value(); }
  const std::optional<std::vector<std::string>>& domain() const {
    return domain_;
  }
  bool restricted() const { return restricted_delta_.has_value(); }
  std::optional<int64_t> restricted_delta() const { return restricted_delta_; }
  int64_t tau() const { return tau_; }

 private:
  ColumnMeta() = default;

  std::string name_;
  std::optional<std::vector<std::string>> domain_;
  std::optional<int64_t> restricted_delta_;
  int64_t tau_ = 1;
};

// column IN values
struct Predicate {
  std::string column;
  std::vector<std::string> values;

  friend bool operator==(const Predicate&, const Predicate&) = default;
};

// Conjunction of set-membership predicates.
class Filter {
 public:
  Filter() = default;

  Filter& Equals(std::string column, std::string value);
  Filter& In(std::string column, std::vector<std::string> values);

  // One predicate per column, sorted by column, values sorted and unique.
  // Repeated predicates on one column are intersected, so `a = x` and
  // `a IN {x}` normalize identically.
  Filter Normalized() const;

  const std::vector<Predicate>& predicates() const { return predicates_; }
  bool empty() const { return predicates_.empty(); }

  friend bool operator==(const Filter&, const Filter&) = default;

 private:
  std::vector<Predicate> predicates_;
};

struct TableSchema {
  std::string name;
  // Dimension columns every record carries, besides member_id, item and
  // event_date.
  std::vector<std::string> dimensions;
  // Declared metadata. Columns absent here use ColumnMeta::Undeclared.
  std::vector<ColumnMeta> columns;

  absl::Status Validate() const;
  bool HasColumn(std::string_view column) const;
  const ColumnMeta* FindMeta(std::string_view column) const;
};

struct IngestOptions {
  Date snapshot_date;
  // Events are kept iff snapshot_date - retention_days < event_date <=
  // snapshot_date.
  int retention_days = 30;
};

struct IngestReport {
  size_t accepted = 0;
  size_t rejected_retention = 0;
};

class Table {
 public:
  // InvalidArgument listing offending rows when any record misses a schema
  // dimension, carries an unknown one, or has an empty member id. Records
  // outside the retention window are dropped and counted in report().
  static absl::StatusOr<std::shared_ptr<const Table>> Ingest(
      TableSchema schema, std::span<const EventRecord> records,
      const IngestOptions& options);

  // Exact counts of `group_by` over rows passing `filter`, at most `limit`
  // entries. NotFound for an unknown column, InvalidArgument for limit 0.
  absl::StatusOr<HistogramSlice> TopCounts(std::string_view group_by,
                                           const Filter& filter, size_t limit,
                                           Aggregation aggregation) const;

  // Declared domain cardinality, or nullopt for an unknown domain.
  absl::StatusOr<std::optional<size_t>> DomainSize(
      std::string_view column) const;

  // Counts for every declared domain value of `group_by`, in declared order,
  // zero-filled. Values seen in the data but outside the domain are ignored.
  // FailedPrecondition when the column has no declared domain.
  absl::StatusOr<std::vector<HistogramEntry>> DomainCounts(
      std::string_view group_by, const Filter& filter,
      Aggregation aggregation) const;

  // Declared metadata or the undeclared default. NotFound for unknown columns.
  absl::StatusOr<ColumnMeta> Meta(std::string_view column) const;

  const TableSchema& schema() const { return schema_; }
  const IngestReport& report() const { return report_; }
  Date snapshot_date() const { return snapshot_date_; }
  size_t num_rows() const { return members_.size(); }

 private:
  struct Column {
    std::string name;
    std::vector<std::string> dictionary;
    absl::flat_hash_map<std::string, uint32_t> codes_by_value;
    std::vector<uint32_t> codes;
    std::vector<int64_t> raw_counts;
    std::vector<int64_t> distinct_counts;
  };

  Table() = default;

  absl::StatusOr<const Column*> FindColumn(std::string_view name) const;
  absl::StatusOr<std::vector<int64_t>> CountByCode(const Column& group,
                                                   const Filter& filter,
                                                   Aggregation aggregation) const;

  TableSchema schema_;
  IngestReport report_;
  Date snapshot_date_;
  std::vector<Column> columns_;
  std::vector<uint32_t> members_;
  size_t num_members_ = 0;
};

// Snapshots by (table name, snapshot date). Filled before it is shared;
// lookups are read-only afterwards.
class Catalog {
 public:
  absl::Status Add(std::shared_ptr<const Table> table);
  absl::StatusOr<std::shared_ptr<const Table>> Get(std::string_view name,
                                                   Date snapshot_date) const;
  std::vector<std::pair<std::string, Date>> List() const;

 private:
  std::map<std::pair<std::string, Date>, std::shared_ptr<const Table>> tables_;
};

}  // namespace dpquery

#endif  // DPQUERY_STORE_H_
