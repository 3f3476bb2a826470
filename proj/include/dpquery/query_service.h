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

// End-to-end private query execution:
//
//   classify -> reserve worst-case cost -> fetch counts -> mechanism
//            -> settle realized cost -> respond
//
// A query is charged iff it produced a private result.

#ifndef DPQUERY_QUERY_SERVICE_H_
#define DPQUERY_QUERY_SERVICE_H_

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "absl/status/statusor.h"
#include "dpquery/budget.h"
#include "dpquery/date.h"
#include "dpquery/mechanisms.h"
#include "dpquery/query_class.h"
#include "dpquery/store.h"

namespace dpquery {

struct QuerySpec {
  std::string analyst_id;
  std::string table;
  std::string group_by;
  Filter filter;
  int64_t k = 1;
  Date as_of_date;
};

struct ReleasedEntry {
  std::string element;
  // Noisy count rounded to the nearest integer, floored at 0.
  int64_t count = 0;
  double noisy_count = 0;

  friend bool operator==(const ReleasedEntry&, const ReleasedEntry&) = default;
};

enum class MechanismKind {
  kLaplaceKnownDomain,
  kExponentialKnownDomain,
  kLaplaceUnknownDomain,
  kGumbelUnknownDomain,
};

std::string_view ToString(MechanismKind kind);
MechanismKind MechanismFor(const QueryClass& query);

struct QueryResponse {
  std::vector<ReleasedEntry> entries;
  // Fewer than k entries because the noisy threshold cut the list short.
  bool truncated = false;
  Cost cost_charged;
  Cost budget_remaining;
  // The noisy threshold, when the mechanism releases it.
  std::optional<double> threshold;
  QueryClass query_class;
  MechanismKind mechanism = MechanismKind::kGumbelUnknownDomain;
  uint64_t ledger_sequence = 0;
};

struct Rejection {
  DenialReason reason;
  std::string message;
  Cost expected;
  Cost remaining;
  uint64_t ledger_sequence = 0;
};

using ExecuteResult = std::variant<QueryResponse, Rejection>;

struct ServiceOptions {
  PrivacyParams privacy;
  FetchLimitRule fetch_limit;
  // Raw bytes of the noise key.
  std::string secret;
};

class QueryService {
 public:
  // `ledger` must outlive the service.
  QueryService(std::shared_ptr<const Catalog> catalog, BudgetLedger* ledger,
               ServiceOptions options);

  // Reads the group-by column's metadata. Columns without metadata are
  // unknown-domain, unrestricted, tau = 1. For known-domain unrestricted
  // queries k is capped at the domain size.
  absl::StatusOr<QueryClass> Classify(const QuerySpec& query) const;

  // The text the noise seed is derived from. Independent of the analyst.
  absl::StatusOr<std::string> CanonicalQuery(const QuerySpec& query) const;

  // Errors (bad table, column, k or privacy settings) charge nothing.
  // Budget denials come back as a Rejection.
  absl::StatusOr<ExecuteResult> Execute(const QuerySpec& query) const;

  const ServiceOptions& options() const { return options_; }
  BudgetLedger& ledger() const { return *ledger_; }
  const Catalog& catalog() const { return *catalog_; }

 private:
  absl::StatusOr<DPResult> Run(const Table& table, const QuerySpec& query,
                               const QueryClass& query_class,
                               const NoiseSource& noise) const;

  std::shared_ptr<const Catalog> catalog_;
  BudgetLedger* ledger_;
  ServiceOptions options_;
};

// Canonical serialization of a classified query: one `key=value` line per
// field, keys sorted, each line ending in '\n'. Exposed for documentation
// tests.
std::string CanonicalQueryText(const QuerySpec& query,
                               const QueryClass& query_class);

}  // namespace dpquery

#endif  // DPQUERY_QUERY_SERVICE_H_
