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

// JSON encoding of requests and responses. One request or response is one
// line of compact JSON; see docs/protocol.md.

#ifndef DPQUERY_WIRE_H_
#define DPQUERY_WIRE_H_

#include <string>
#include <string_view>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "dpquery/budget.h"
#include "dpquery/query_service.h"

namespace dpquery {

// {"op": "query", "analyst_id", "table", "group_by", "k", "as_of_date",
//  "filter": {column: [values]}}. InvalidArgument on any malformed field.
absl::StatusOr<QuerySpec> ParseQueryRequest(std::string_view line);

std::string EncodeQueryRequest(const QuerySpec& query);

// {"ok": true, "result": {...}} or {"ok": false, "error": reason, ...}.
std::string EncodeExecuteResult(const ExecuteResult& result);
std::string EncodeBudget(const BudgetRecord& record);
// {"ok": false, "error": code, "message": ...}; the code names the status
// code in snake case, e.g. "not_found".
std::string EncodeError(const absl::Status& status);
std::string EncodeProtocolError(std::string_view message);

// Serves one request line; the reply never contains a newline.
std::string HandleRequestLine(const QueryService& service, std::string_view line);

}  // namespace dpquery

#endif  // DPQUERY_WIRE_H_
