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

#include "dpquery/wire.h"

#include <cctype>

#include "absl/strings/str_cat.h"
#include "nlohmann/json.hpp"

namespace dpquery {
namespace {

using nlohmann::json;

json CostJson(const Cost& c) { return {{"info", c.info}, {"calls", c.calls}}; }

std::string StatusCodeName(absl::StatusCode code) {
  // "NOT_FOUND" -> "not_found"
  std::string name = absl::StatusCodeToString(code);
  for (char& ch : name) ch = static_cast<char>(std::tolower(ch));
  return name;
}

std::string Dump(const json& j) {
  return j.dump(-1, ' ', false, json::error_handler_t::replace);
}

}  // namespace

absl::StatusOr<QuerySpec> ParseQueryRequest(std::string_view line) {
  const json j = json::parse(line, nullptr, false);
  if (j.is_discarded() || !j.is_object()) {
    return absl::InvalidArgumentError("request is not a JSON object");
  }
  try {
    QuerySpec q;
    q.analyst_id = j.at("analyst_id").get<std::string>();
    q.table = j.at("table").get<std::string>();
    q.group_by = j.at("group_by").get<std::string>();
    q.k = j.at("k").get<int64_t>();
    absl::StatusOr<Date> date = Date::Parse(j.at("as_of_date").get<std::string>());
    if (!date.ok()) return date.status();
    q.as_of_date = *date;
    if (j.contains("filter")) {
      for (const auto& [column, values] : j["filter"].items()) {
        if (values.is_string()) {
          q.filter.Equals(column, values.get<std::string>());
        } else {
          q.filter.In(column, values.get<std::vector<std::string>>());
        }
      }
    }
    if (q.analyst_id.empty()) {
      return absl::InvalidArgumentError("analyst_id must be non-empty");
    }
    return q;
  } catch (const json::exception& e) {
    return absl::InvalidArgumentError(absl::StrCat("bad request: ", e.what()));
  }
}

std::string EncodeQueryRequest(const QuerySpec& query) {
  json filter = json::object();
  const Filter normalized = query.filter.Normalized();
  for (const Predicate& p : normalized.predicates()) {
    filter[p.column] = p.values;
  }
  return Dump({{"op", "query"},
               {"analyst_id", query.analyst_id},
               {"table", query.table},
               {"group_by", query.group_by},
               {"filter", filter},
               {"k", query.k},
               {"as_of_date", query.as_of_date.ToString()}});
}

std::string EncodeExecuteResult(const ExecuteResult& result) {
  if (const Rejection* r = std::get_if<Rejection>(&result)) {
    return Dump({{"ok", false},
                 {"error", std::string(ToString(r->reason))},
                 {"message", r->message},
                 {"expected", CostJson(r->expected)},
                 {"remaining", CostJson(r->remaining)},
                 {"ledger_seq", r->ledger_sequence}});
  }
  const QueryResponse& q = std::get<QueryResponse>(result);
  json entries = json::array();
  for (const ReleasedEntry& e : q.entries) {
    entries.push_back(
        {{"element", e.element}, {"count", e.count}, {"noisy_count", e.noisy_count}});
  }
  const QueryClass& c = q.query_class;
  json cls = {{"domain", std::string(ToString(c.domain))},
              {"sensitivity", std::string(ToString(c.sensitivity))},
              {"tau", c.tau},
              {"k", c.k}};
  if (c.sensitivity == SensitivityClass::kRestricted) cls["delta"] = c.max_changed;
  if (c.domain_size.has_value()) cls["domain_size"] = *c.domain_size;
  json out = {{"entries", entries},
              {"truncated", q.truncated},
              {"cost_charged", CostJson(q.cost_charged)},
              {"budget_remaining", CostJson(q.budget_remaining)},
              {"mechanism", std::string(ToString(q.mechanism))},
              {"class", cls},
              {"ledger_seq", q.ledger_sequence}};
  if (q.threshold.has_value()) out["threshold"] = *q.threshold;
  return Dump({{"ok", true}, {"result", out}});
}

std::string EncodeBudget(const BudgetRecord& r) {
  return Dump({{"ok", true},
               {"budget",
                {{"analyst_id", r.analyst_id},
                 {"max_info", r.max_info},
                 {"max_calls", r.max_calls},
                 {"used_info", r.used_info},
                 {"used_calls", r.used_calls},
                 {"remaining", CostJson(r.remaining())},
                 {"period", r.period.ToString()},
                 {"last_reset_millis", r.last_reset.time_since_epoch().count()}}}});
}

std::string EncodeError(const absl::Status& status) {
  return Dump({{"ok", false},
               {"error", StatusCodeName(status.code())},
               {"message", std::string(status.message())}});
}

std::string EncodeProtocolError(std::string_view message) {
  return Dump({{"ok", false},
               {"error", "protocol_error"},
               {"message", std::string(message)}});
}

std::string HandleRequestLine(const QueryService& service,
                              std::string_view line) {
  const json j = json::parse(line, nullptr, false);
  if (j.is_discarded() || !j.is_object()) {
    return EncodeProtocolError("request is not a JSON object");
  }
  const auto op = j.find("op");
  if (op == j.end() || !op->is_string()) {
    return EncodeProtocolError("missing \"op\"");
  }
  if (*op == "query") {
    absl::StatusOr<QuerySpec> query = ParseQueryRequest(line);
    if (!query.ok()) return EncodeProtocolError(std::string(query.status().message()));
    absl::StatusOr<ExecuteResult> result = service.Execute(*query);
    if (!result.ok()) return EncodeError(result.status());
    return EncodeExecuteResult(*result);
  }
  if (*op == "budget") {
    const auto id = j.find("analyst_id");
    if (id == j.end() || !id->is_string() || id->get<std::string>().empty()) {
      return EncodeProtocolError("budget needs a non-empty analyst_id");
    }
    return EncodeBudget(service.ledger().GetBudget(id->get<std::string>()));
  }
  return EncodeProtocolError(
      absl::StrCat("unknown op '", op->get<std::string>(), "'"));
}

}  // namespace dpquery
