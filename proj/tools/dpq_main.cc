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

// dpq: command-line front end.
//
//   dpq ingest     --config C --table T --date D [--out FILE]
//   dpq query      --config C --analyst A --table T --group-by G --k K
//                  --date D [--filter col=v1,v2 ...]
//   dpq serve      --config C [--host H] [--port P]
//   dpq accountant compose|overall|solve ...
//   dpq calibrate  [--eps-per ...] [--json]
//   dpq budget     show|list|reset --config C [--analyst A]
//
// Exit status: 0 success, 1 error, 2 query rejected by the budget.

#include <signal.h>

#include <fstream>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "absl/status/status.h"
#include "absl/strings/str_cat.h"
#include "absl/strings/str_split.h"
#include "dpquery/budget.h"
#include "dpquery/calibration.h"
#include "dpquery/composition.h"
#include "dpquery/config.h"
#include "dpquery/query_service.h"
#include "dpquery/record_io.h"
#include "dpquery/server.h"
#include "dpquery/wire.h"
#include "nlohmann/json.hpp"

namespace dpquery {
namespace {

constexpr int kExitError = 1;
constexpr int kExitRejected = 2;

int Fail(const absl::Status& status) {
  std::cerr << "dpq: " << status << "\n";
  return kExitError;
}

absl::StatusOr<std::unique_ptr<BudgetLedger>> OpenLedger(
    const ServiceConfig& config) {
  return BudgetLedger::Open(config.ledger);
}

int RunIngest(const std::string& config_path, const std::string& table,
              const std::string& date_text, const std::string& out) {
  absl::StatusOr<ServiceConfig> config = LoadConfig(config_path);
  if (!config.ok()) return Fail(config.status());
  absl::StatusOr<Date> date = Date::Parse(date_text);
  if (!date.ok()) return Fail(date.status());
  absl::StatusOr<std::shared_ptr<const Table>> snapshot =
      LoadSnapshot(*config, table, *date);
  if (!snapshot.ok()) return Fail(snapshot.status());
  if (!out.empty()) {
    // Re-read the retained rows so the written snapshot is exactly what the
    // service would serve.
    std::vector<EventRecord> records;
    for (const TableSource& t : config->tables) {
      if (t.schema.name != table) continue;
      for (const SnapshotSource& s : t.snapshots) {
        if (s.date != *date) continue;
        for (const auto& f : s.files) {
          absl::StatusOr<std::vector<EventRecord>> part = ReadRecordFile(f);
          if (!part.ok()) return Fail(part.status());
          for (EventRecord& r : *part) {
            if (r.event_date <= *date &&
                r.event_date > date->AddDays(-config->retention_days)) {
              records.push_back(std::move(r));
            }
          }
        }
      }
    }
    std::ofstream file(out, std::ios::binary | std::ios::trunc);
    file << FormatNdjsonRecords(records);
    if (!file) return Fail(absl::InternalError(absl::StrCat("cannot write ", out)));
  }
  const IngestReport& report = (*snapshot)->report();
  std::cout << nlohmann::json{{"table", table},
                              {"date", date->ToString()},
                              {"accepted", report.accepted},
                              {"rejected_retention", report.rejected_retention}}
                   .dump()
            << "\n";
  return 0;
}

absl::StatusOr<Filter> ParseFilters(const std::vector<std::string>& specs) {
  Filter filter;
  for (const std::string& spec : specs) {
    const size_t eq = spec.find('=');
    if (eq == std::string::npos || eq == 0) {
      return absl::InvalidArgumentError(
          absl::StrCat("filter must look like column=v1,v2: '", spec, "'"));
    }
    std::vector<std::string> values =
        absl::StrSplit(spec.substr(eq + 1), ',');
    filter.In(spec.substr(0, eq), std::move(values));
  }
  return filter;
}

int RunQuery(const std::string& config_path, QuerySpec query,
             const std::string& date_text,
             const std::vector<std::string>& filters) {
  absl::StatusOr<ServiceConfig> config = LoadConfig(config_path);
  if (!config.ok()) return Fail(config.status());
  absl::StatusOr<Date> date = Date::Parse(date_text);
  if (!date.ok()) return Fail(date.status());
  query.as_of_date = *date;
  absl::StatusOr<Filter> filter = ParseFilters(filters);
  if (!filter.ok()) return Fail(filter.status());
  query.filter = *filter;

  absl::StatusOr<std::shared_ptr<const Table>> table =
      LoadSnapshot(*config, query.table, *date);
  if (!table.ok()) return Fail(table.status());
  auto catalog = std::make_shared<Catalog>();
  if (absl::Status s = catalog->Add(*table); !s.ok()) return Fail(s);
  absl::StatusOr<std::unique_ptr<BudgetLedger>> ledger = OpenLedger(*config);
  if (!ledger.ok()) return Fail(ledger.status());

  const QueryService service(catalog, ledger->get(), MakeServiceOptions(*config));
  absl::StatusOr<ExecuteResult> result = service.Execute(query);
  if (!result.ok()) return Fail(result.status());
  std::cout << EncodeExecuteResult(*result) << "\n";
  return std::holds_alternative<Rejection>(*result) ? kExitRejected : 0;
}

int RunServe(const std::string& config_path, const std::string& host_flag,
             int port_flag) {
  // Block the stop signals before any thread starts so sigwait sees them.
  sigset_t stop_signals;
  sigemptyset(&stop_signals);
  sigaddset(&stop_signals, SIGINT);
  sigaddset(&stop_signals, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &stop_signals, nullptr);

  absl::StatusOr<ServiceConfig> config = LoadConfig(config_path);
  if (!config.ok()) return Fail(config.status());
  absl::StatusOr<std::shared_ptr<const Catalog>> catalog = LoadCatalog(*config);
  if (!catalog.ok()) return Fail(catalog.status());
  absl::StatusOr<std::unique_ptr<BudgetLedger>> ledger = OpenLedger(*config);
  if (!ledger.ok()) return Fail(ledger.status());
  const QueryService service(*catalog, ledger->get(),
                             MakeServiceOptions(*config));
  const std::string host = host_flag.empty() ? config->listen_host : host_flag;
  const uint16_t port = port_flag >= 0 ? static_cast<uint16_t>(port_flag)
                                       : config->listen_port;
  absl::StatusOr<std::unique_ptr<Server>> server =
      Server::Start(&service, host, port);
  if (!server.ok()) return Fail(server.status());
  std::cout << "listening on " << host << ":" << (*server)->port() << std::endl;

  int signal = 0;
  sigwait(&stop_signals, &signal);
  absl::Status stopped = (*server)->Stop();
  if (!stopped.ok()) return Fail(stopped);
  if (absl::Status s = (*ledger)->Checkpoint(); !s.ok()) return Fail(s);
  return 0;
}

int RunBudget(const std::string& action, const std::string& config_path,
              const std::string& analyst) {
  absl::StatusOr<ServiceConfig> config = LoadConfig(config_path);
  if (!config.ok()) return Fail(config.status());
  absl::StatusOr<std::unique_ptr<BudgetLedger>> ledger = OpenLedger(*config);
  if (!ledger.ok()) return Fail(ledger.status());
  if (action == "list") {
    for (const BudgetRecord& r : (*ledger)->List()) {
      std::cout << EncodeBudget(r) << "\n";
    }
    return 0;
  }
  if (analyst.empty()) {
    return Fail(absl::InvalidArgumentError("--analyst is required"));
  }
  if (action == "reset") {
    if (absl::Status s = (*ledger)->Reset(analyst); !s.ok()) return Fail(s);
  }
  std::cout << EncodeBudget((*ledger)->GetBudget(analyst)) << "\n";
  return 0;
}

void PrintJson(const nlohmann::json& j) { std::cout << j.dump() << "\n"; }

}  // namespace
}  // namespace dpquery

int main(int argc, char** argv) {
  using namespace dpquery;
  CLI::App app{"Differentially private top-k analytics"};
  app.require_subcommand(1);

  std::string config_path, table, date, out, analyst, group_by;
  int64_t k = 1;
  std::vector<std::string> filters;

  CLI::App* ingest = app.add_subcommand("ingest", "Load a snapshot and report");
  ingest->add_option("--config", config_path, "Config file")->required();
  ingest->add_option("--table", table)->required();
  ingest->add_option("--date", date, "Snapshot date, YYYY-MM-DD")->required();
  ingest->add_option("--out", out, "Write the retained rows as NDJSON");

  CLI::App* query = app.add_subcommand("query", "Run one private query");
  query->add_option("--config", config_path)->required();
  query->add_option("--analyst", analyst)->required();
  query->add_option("--table", table)->required();
  query->add_option("--group-by", group_by)->required();
  query->add_option("--k", k)->required();
  query->add_option("--date", date, "Snapshot date, YYYY-MM-DD")->required();
  query->add_option("--filter", filters, "column=v1,v2 (repeatable)");

  std::string host;
  int port = -1;
  CLI::App* serve = app.add_subcommand("serve", "Serve NDJSON over TCP");
  serve->add_option("--config", config_path)->required();
  serve->add_option("--host", host);
  serve->add_option("--port", port);

  CLI::App* accountant =
      app.add_subcommand("accountant", "Composition what-ifs");
  accountant->require_subcommand(1);
  double eps = 0, delta = 0, delta_prime = 0, eps_max = 0, delta_star = 0;
  int64_t t = 1, k_star = 3000, ell_star = 30;
  CLI::App* compose = accountant->add_subcommand(
      "compose", "Overall epsilon of t eps-BR mechanisms");
  compose->add_option("--eps", eps)->required();
  compose->add_option("--t", t)->required();
  compose->add_option("--delta-prime", delta_prime)->required();
  CLI::App* overall = accountant->add_subcommand(
      "overall", "Overall guarantee of per-query parameters and budgets");
  overall->add_option("--eps-per", eps)->required();
  overall->add_option("--delta", delta)->required();
  overall->add_option("--delta-prime", delta_prime)->required();
  overall->add_option("--k-star", k_star)->capture_default_str();
  overall->add_option("--ell-star", ell_star)->capture_default_str();
  CLI::App* solve = accountant->add_subcommand(
      "solve", "Per-query parameters meeting an overall target");
  solve->add_option("--eps-max", eps_max)->required();
  solve->add_option("--delta-star", delta_star)->required();
  solve->add_option("--k-star", k_star)->capture_default_str();
  solve->add_option("--ell-star", ell_star)->capture_default_str();

  CalibrationInputs calib;
  bool as_json = false;
  CLI::App* calibrate =
      app.add_subcommand("calibrate", "Attack probabilities and budgets");
  calibrate->add_option("--eps-per", calib.eps_per)->capture_default_str();
  calibrate->add_option("--delta", calib.delta)->capture_default_str();
  calibrate->add_option("--k-star", calib.k_star)->capture_default_str();
  calibrate->add_option("--ell-star", calib.ell_star)->capture_default_str();
  calibrate->add_option("--delta-prime", calib.delta_prime)
      ->capture_default_str();
  calibrate->add_option("--days", calib.n_days)->capture_default_str();
  calibrate->add_option("--d-bar", calib.d_bar)->capture_default_str();
  calibrate->add_flag("--json", as_json, "Print JSON instead of a table");

  CLI::App* budget = app.add_subcommand("budget", "Inspect or reset budgets");
  budget->require_subcommand(1);
  for (const char* action : {"show", "list", "reset"}) {
    CLI::App* sub = budget->add_subcommand(action);
    sub->add_option("--config", config_path)->required();
    if (std::string(action) != "list") {
      sub->add_option("--analyst", analyst)->required();
    }
  }

  CLI11_PARSE(app, argc, argv);

  if (*ingest) return RunIngest(config_path, table, date, out);
  if (*query) {
    QuerySpec spec;
    spec.analyst_id = analyst;
    spec.table = table;
    spec.group_by = group_by;
    spec.k = k;
    return RunQuery(config_path, std::move(spec), date, filters);
  }
  if (*serve) return RunServe(config_path, host, port);
  if (*compose) {
    absl::StatusOr<double> e = BoundedRangeComposition(eps, t, delta_prime);
    if (!e.ok()) return Fail(e.status());
    PrintJson({{"eps", eps}, {"t", t}, {"delta_prime", delta_prime}, {"eps_max", *e}});
    return 0;
  }
  if (*overall) {
    absl::StatusOr<OverallGuarantee> g =
        ComputeOverallGuarantee({eps, delta, delta_prime}, k_star, ell_star);
    if (!g.ok()) return Fail(g.status());
    PrintJson({{"eps_max", g->eps_max}, {"delta_star", g->delta_star}});
    return 0;
  }
  if (*solve) {
    absl::StatusOr<PerQueryParams> p =
        SolvePerQueryParams({eps_max, delta_star, k_star, ell_star});
    if (!p.ok()) return Fail(p.status());
    PrintJson({{"eps_per", p->eps_per},
               {"delta", p->delta},
               {"delta_prime", p->delta_prime}});
    return 0;
  }
  if (*calibrate) {
    absl::StatusOr<AttackReport> report = FullReport(calib);
    if (!report.ok()) return Fail(report.status());
    std::cout << (as_json ? FormatReportJson(*report) + "\n"
                          : FormatReportTable(*report));
    return 0;
  }
  for (CLI::App* sub : budget->get_subcommands()) {
    return RunBudget(sub->get_name(), config_path, analyst);
  }
  return kExitError;
}
