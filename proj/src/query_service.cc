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

#include "dpquery/query_service.h"

#include <algorithm>
#include <cmath>
#include <utility>

#include "absl/strings/str_cat.h"
#include "dpquery/noise.h"

namespace dpquery {
namespace {

// Percent-escapes the bytes that delimit the canonical form, plus controls.
std::string Escape(std::string_view s) {
  static constexpr char kHex[] = "0123456789ABCDEF";
  std::string out;
  out.reserve(s.size());
  for (const char c : s) {
    const auto u = static_cast<unsigned char>(c);
    if (u < 0x20 || u == 0x7F || c == '%' || c == '=' || c == ',' ||
        c == ';' || c == '[' || c == ']') {
      out.push_back('%');
      out.push_back(kHex[u >> 4]);
      out.push_back(kHex[u & 0xF]);
    } else {
      out.push_back(c);
    }
  }
  return out;
}

int64_t DisplayCount(double noisy) {
  if (!(noisy > 0)) return 0;
  return std::llround(noisy);
}

std::vector<ReleasedEntry> ToReleased(const std::vector<NoisyEntry>& entries) {
  std::vector<ReleasedEntry> out;
  out.reserve(entries.size());
  for (const NoisyEntry& e : entries) {
    out.push_back({e.element, DisplayCount(e.noisy_count), e.noisy_count});
  }
  return out;
}

Aggregation AggregationFor(const QueryClass& query) {
  return query.tau == 1 ? Aggregation::kDistinct : Aggregation::kRaw;
}

}  // namespace

std::string_view ToString(MechanismKind kind) {
  switch (kind) {
    case MechanismKind::kLaplaceKnownDomain:
      return "laplace_known_domain";
    case MechanismKind::kExponentialKnownDomain:
      return "exponential_known_domain";
    case MechanismKind::kLaplaceUnknownDomain:
      return "laplace_unknown_domain";
    case MechanismKind::kGumbelUnknownDomain:
      return "gumbel_unknown_domain";
  }
  return "unknown";
}

MechanismKind MechanismFor(const QueryClass& query) {
  const bool known = query.domain == DomainClass::kKnown;
  if (query.sensitivity == SensitivityClass::kRestricted) {
    return known ? MechanismKind::kLaplaceKnownDomain
                 : MechanismKind::kLaplaceUnknownDomain;
  }
  return known ? MechanismKind::kExponentialKnownDomain
               : MechanismKind::kGumbelUnknownDomain;
}

std::string CanonicalQueryText(const QuerySpec& query,
                               const QueryClass& query_class) {
  std::string filter;
  const Filter normalized = query.filter.Normalized();
  for (const Predicate& p : normalized.predicates()) {
    if (!filter.empty()) filter.push_back(';');
    absl::StrAppend(&filter, Escape(p.column), "=[");
    for (size_t i = 0; i < p.values.size(); ++i) {
      if (i > 0) filter.push_back(',');
      filter += Escape(p.values[i]);
    }
    filter.push_back(']');
  }
  const bool restricted =
      query_class.sensitivity == SensitivityClass::kRestricted;
  // Keys in byte order.
  return absl::StrCat(
      "delta=", restricted ? absl::StrCat(query_class.max_changed) : "none",
      "\n", "filter=", filter, "\n", "group_by=", Escape(query.group_by), "\n",
      "k=", query.k, "\n", "sensitivity=",
      std::string(ToString(query_class.sensitivity)), "\n",
      "table=", Escape(query.table), "\n", "tau=", query_class.tau, "\n");
}

QueryService::QueryService(std::shared_ptr<const Catalog> catalog,
                           BudgetLedger* ledger, ServiceOptions options)
    : catalog_(std::move(catalog)),
      ledger_(ledger),
      options_(std::move(options)) {}

absl::StatusOr<QueryClass> QueryService::Classify(
    const QuerySpec& query) const {
  if (query.k < 1) {
    return absl::InvalidArgumentError(
        absl::StrCat("k must be >= 1, got ", query.k));
  }
  absl::StatusOr<std::shared_ptr<const Table>> table =
      catalog_->Get(query.table, query.as_of_date);
  if (!table.ok()) return table.status();
  absl::StatusOr<ColumnMeta> meta = (*table)->Meta(query.group_by);
  if (!meta.ok()) return meta.status();
  for (const Predicate& p : query.filter.predicates()) {
    if (!(*table)->schema().HasColumn(p.column)) {
      return absl::NotFoundError(
          absl::StrCat("filter on unknown column '", p.column, "'"));
    }
  }

  QueryClass out;
  out.tau = meta->tau();
  out.k = query.k;
  if (meta->restricted()) {
    out.sensitivity = SensitivityClass::kRestricted;
    out.max_changed = *meta->restricted_delta();
  } else {
    out.sensitivity = SensitivityClass::kUnrestricted;
  }
  if (meta->known_domain()) {
    out.domain = DomainClass::kKnown;
    out.domain_size = static_cast<int64_t>(meta->domain()->size());
    if (out.sensitivity == SensitivityClass::kUnrestricted) {
      out.k = std::min(out.k, *out.domain_size);
    }
  } else {
    out.domain = DomainClass::kUnknown;
  }
  return out;
}

absl::StatusOr<std::string> QueryService::CanonicalQuery(
    const QuerySpec& query) const {
  absl::StatusOr<QueryClass> query_class = Classify(query);
  if (!query_class.ok()) return query_class.status();
  return CanonicalQueryText(query, *query_class);
}

absl::StatusOr<DPResult> QueryService::Run(const Table& table,
                                           const QuerySpec& query,
                                           const QueryClass& query_class,
                                           const NoiseSource& noise) const {
  const Aggregation aggregation = AggregationFor(query_class);
  const PrivacyParams& params = options_.privacy;

  if (query_class.domain == DomainClass::kKnown) {
    absl::StatusOr<std::vector<HistogramEntry>> counts =
        table.DomainCounts(query.group_by, query.filter, aggregation);
    if (!counts.ok()) return counts.status();
    if (query_class.sensitivity == SensitivityClass::kUnrestricted) {
      return ExponentialKnownDomain(*counts, query_class.k, query_class.tau,
                                    params, noise);
    }
    absl::StatusOr<std::vector<NoisyEntry>> noisy =
        LaplaceKnownDomain(*counts, query_class.tau, params, noise);
    if (!noisy.ok()) return noisy.status();
    DPResult result;
    result.entries = std::move(*noisy);
    std::stable_sort(result.entries.begin(), result.entries.end(),
                     [](const NoisyEntry& a, const NoisyEntry& b) {
                       return a.noisy_count > b.noisy_count;
                     });
    if (result.entries.size() > static_cast<size_t>(query.k)) {
      result.entries.resize(static_cast<size_t>(query.k));
    }
    return result;
  }

  const int64_t d_bar =
      FetchLimit(query_class.k, std::nullopt, options_.fetch_limit);
  absl::StatusOr<HistogramSlice> slice = table.TopCounts(
      query.group_by, query.filter, static_cast<size_t>(d_bar) + 1,
      aggregation);
  if (!slice.ok()) return slice.status();
  if (query_class.sensitivity == SensitivityClass::kUnrestricted) {
    return GumbelUnknownDomain(*slice, query_class.k, d_bar, query_class.tau,
                               params, noise);
  }
  absl::StatusOr<DPResult> result = LaplaceUnknownDomain(
      *slice, query_class.max_changed, d_bar, query_class.tau, params, noise);
  if (!result.ok()) return result;
  if (result->entries.size() > static_cast<size_t>(query.k)) {
    result->entries.resize(static_cast<size_t>(query.k));
  }
  return result;
}

absl::StatusOr<ExecuteResult> QueryService::Execute(
    const QuerySpec& query) const {
  absl::StatusOr<QueryClass> query_class = Classify(query);
  if (!query_class.ok()) return query_class.status();
  absl::StatusOr<Cost> expected = ExpectedCost(*query_class);
  if (!expected.ok()) return expected.status();
  absl::StatusOr<std::shared_ptr<const Table>> table =
      catalog_->Get(query.table, query.as_of_date);
  if (!table.ok()) return table.status();
  absl::StatusOr<Seed> seed = DeriveSeed(
      {options_.secret, CanonicalQueryText(query, *query_class),
       query.as_of_date});
  if (!seed.ok()) return seed.status();

  std::variant<Reservation, Denial> admission =
      ledger_->Reserve(query.analyst_id, *expected);
  if (const Denial* denial = std::get_if<Denial>(&admission)) {
    const bool exhausted = denial->reason == DenialReason::kBudgetExhausted;
    return Rejection{
        denial->reason,
        exhausted ? "budget exhausted for this period"
                  : absl::StrCat("query needs (", expected->info, ", ",
                                 expected->calls, ") but (",
                                 denial->remaining.info, ", ",
                                 denial->remaining.calls, ") remains"),
        *expected, denial->remaining, denial->sequence};
  }
  Reservation& reservation = std::get<Reservation>(admission);

  // Any error below drops the reservation unsettled: nothing is charged.
  const KeyedNoise noise(*seed);
  absl::StatusOr<DPResult> result = Run(**table, query, *query_class, noise);
  if (!result.ok()) return result.status();

  absl::StatusOr<Settlement> settled =
      reservation.Settle(ActualCost(*result, *query_class));
  if (!settled.ok()) return settled.status();

  QueryResponse response;
  response.entries = ToReleased(result->entries);
  response.query_class = *query_class;
  response.mechanism = MechanismFor(*query_class);
  response.cost_charged = settled->charged;
  response.budget_remaining = settled->record.remaining();
  response.ledger_sequence = settled->sequence;
  response.threshold = result->bot_value;
  response.truncated = result->entries.size() < static_cast<size_t>(query.k) &&
                       (response.mechanism == MechanismKind::kGumbelUnknownDomain
                            ? result->terminated_by_bot
                            : response.mechanism ==
                                  MechanismKind::kLaplaceUnknownDomain);
  return response;
}

}  // namespace dpquery
