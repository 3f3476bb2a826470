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

#include "dpquery/config.h"

#include <cstdlib>
#include <fstream>
#include <limits>
#include <sstream>

#include "absl/strings/str_cat.h"
#include "dpquery/noise.h"
#include "dpquery/record_io.h"
#include "nlohmann/json.hpp"

namespace dpquery {
namespace {

using nlohmann::json;

absl::Status ConfigError(std::string_view why) {
  return absl::InvalidArgumentError(absl::StrCat("config: ", std::string(why)));
}

std::filesystem::path Resolve(const std::filesystem::path& base,
                              const std::string& p) {
  const std::filesystem::path path(p);
  return path.is_absolute() ? path : base / path;
}

std::string Trim(std::string s) {
  const size_t b = s.find_first_not_of(" \t\r\n");
  const size_t e = s.find_last_not_of(" \t\r\n");
  return b == std::string::npos ? "" : s.substr(b, e - b + 1);
}

absl::StatusOr<std::string> ReadSecret(const json& j,
                                       const std::filesystem::path& base) {
  const int sources = j.contains("secret_key_hex") + j.contains("secret_key_env") +
                      j.contains("secret_key_file");
  if (sources != 1) {
    return ConfigError(
        "set exactly one of secret_key_hex, secret_key_env, secret_key_file");
  }
  std::string hex;
  if (j.contains("secret_key_hex")) {
    hex = j["secret_key_hex"].get<std::string>();
  } else if (j.contains("secret_key_env")) {
    const std::string var = j["secret_key_env"].get<std::string>();
    const char* value = std::getenv(var.c_str());
    if (value == nullptr) {
      return ConfigError(absl::StrCat("environment variable ", var, " is unset"));
    }
    hex = value;
  } else {
    const std::filesystem::path p =
        Resolve(base, j["secret_key_file"].get<std::string>());
    std::ifstream in(p);
    if (!in) return ConfigError(absl::StrCat("cannot read ", p.string()));
    std::stringstream buf;
    buf << in.rdbuf();
    hex = buf.str();
  }
  absl::StatusOr<std::string> secret = HexDecode(Trim(hex));
  if (!secret.ok()) {
    return ConfigError(absl::StrCat("secret key: ",
                                    std::string(secret.status().message())));
  }
  if (secret->size() < kMinSecretBytes) {
    return ConfigError(absl::StrCat("secret key must be at least ",
                                    kMinSecretBytes, " bytes"));
  }
  return secret;
}

Cost ReadCost(const json& j, Cost fallback) {
  return Cost{j.value("info", fallback.info), j.value("calls", fallback.calls)};
}

absl::StatusOr<ColumnMeta> ReadColumn(const json& j) {
  std::optional<std::vector<std::string>> domain;
  if (j.contains("domain")) domain = j["domain"].get<std::vector<std::string>>();
  std::optional<int64_t> delta;
  if (j.contains("sensitivity")) {
    const json& s = j["sensitivity"];
    if (s.is_string()) {
      if (s.get<std::string>() != "unrestricted") {
        return ConfigError("sensitivity must be \"unrestricted\" or "
                           "{\"restricted\": delta}");
      }
    } else {
      delta = s.at("restricted").get<int64_t>();
    }
  }
  return ColumnMeta::Create(j.at("name").get<std::string>(), std::move(domain),
                            delta, j.value("tau", int64_t{1}));
}

absl::StatusOr<ServiceConfig> Parse(const json& j,
                                    const std::filesystem::path& base) {
  ServiceConfig c;
  absl::StatusOr<std::string> secret = ReadSecret(j, base);
  if (!secret.ok()) return secret.status();
  c.secret = std::move(*secret);

  const json budgets = j.value("budgets", json::object());
  c.ledger.default_max = ReadCost(budgets, c.ledger.default_max);
  if (budgets.contains("period")) {
    absl::StatusOr<RefreshPeriod> period =
        RefreshPeriod::Parse(budgets["period"].get<std::string>());
    if (!period.ok()) return period.status();
    c.ledger.period = *period;
  }
  if (budgets.contains("overrides")) {
    for (const auto& [id, o] : budgets["overrides"].items()) {
      c.ledger.overrides[id] = ReadCost(o, c.ledger.default_max);
    }
  }
  if (j.contains("journal_dir")) {
    c.ledger.directory = Resolve(base, j["journal_dir"].get<std::string>());
  }

  if (!j.contains("privacy")) return ConfigError("missing privacy section");
  const json& p = j["privacy"];
  if (p.contains("eps_per")) {
    c.privacy.eps_per = p.at("eps_per").get<double>();
    c.privacy.delta = p.at("delta").get<double>();
    if (!(c.privacy.eps_per > 0) || !(c.privacy.delta > 0 && c.privacy.delta < 1)) {
      return ConfigError("need eps_per > 0 and 0 < delta < 1");
    }
  } else if (p.contains("eps_max")) {
    SystemPrivacyBudget system{p.at("eps_max").get<double>(),
                               p.at("delta_star").get<double>(),
                               c.ledger.default_max.info,
                               c.ledger.default_max.calls};
    absl::StatusOr<PerQueryParams> solved = SolvePerQueryParams(system);
    if (!solved.ok()) return solved.status();
    c.privacy = {solved->eps_per, solved->delta};
    c.system = system;
  } else {
    return ConfigError("privacy needs {eps_per, delta} or {eps_max, delta_star}");
  }

  if (j.contains("fetch_limit")) {
    c.fetch_limit.multiplier =
        j["fetch_limit"].value("multiplier", c.fetch_limit.multiplier);
    c.fetch_limit.floor = j["fetch_limit"].value("floor", c.fetch_limit.floor);
    if (c.fetch_limit.multiplier < 1 || c.fetch_limit.floor < 1) {
      return ConfigError("fetch_limit multiplier and floor must be >= 1");
    }
  }
  c.retention_days = j.value("retention_days", c.retention_days);
  if (c.retention_days < 1) return ConfigError("retention_days must be >= 1");

  for (const json& t : j.value("tables", json::array())) {
    TableSource source;
    source.schema.name = t.at("name").get<std::string>();
    source.schema.dimensions =
        t.value("dimensions", std::vector<std::string>{});
    for (const json& col : t.value("columns", json::array())) {
      absl::StatusOr<ColumnMeta> meta = ReadColumn(col);
      if (!meta.ok()) return meta.status();
      source.schema.columns.push_back(std::move(*meta));
    }
    if (absl::Status s = source.schema.Validate(); !s.ok()) return s;
    for (const json& snap : t.value("snapshots", json::array())) {
      absl::StatusOr<Date> date = Date::Parse(snap.at("date").get<std::string>());
      if (!date.ok()) return date.status();
      SnapshotSource s{*date, {}};
      for (const json& f : snap.at("files")) {
        s.files.push_back(Resolve(base, f.get<std::string>()));
      }
      source.snapshots.push_back(std::move(s));
    }
    c.tables.push_back(std::move(source));
  }

  if (j.contains("listen")) {
    c.listen_host = j["listen"].value("host", c.listen_host);
    const int port = j["listen"].value("port", 0);
    if (port < 0 || port > std::numeric_limits<uint16_t>::max()) {
      return ConfigError("listen.port out of range");
    }
    c.listen_port = static_cast<uint16_t>(port);
  }
  return c;
}

}  // namespace

absl::StatusOr<ServiceConfig> ParseConfig(
    std::string_view json_text, const std::filesystem::path& base_dir) {
  const json j = json::parse(json_text, nullptr, false);
  if (j.is_discarded() || !j.is_object()) {
    return ConfigError("not a JSON object");
  }
  try {
    return Parse(j, base_dir);
  } catch (const json::exception& e) {
    return ConfigError(e.what());
  }
}

absl::StatusOr<ServiceConfig> LoadConfig(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) return absl::NotFoundError(absl::StrCat("cannot read ", path.string()));
  std::stringstream buf;
  buf << in.rdbuf();
  return ParseConfig(buf.str(), path.parent_path());
}

absl::StatusOr<std::shared_ptr<const Table>> LoadSnapshot(
    const ServiceConfig& config, std::string_view table, Date date) {
  for (const TableSource& t : config.tables) {
    if (t.schema.name != table) continue;
    for (const SnapshotSource& s : t.snapshots) {
      if (s.date != date) continue;
      std::vector<EventRecord> records;
      for (const std::filesystem::path& f : s.files) {
        absl::StatusOr<std::vector<EventRecord>> part = ReadRecordFile(f);
        if (!part.ok()) return part.status();
        records.insert(records.end(), std::make_move_iterator(part->begin()),
                       std::make_move_iterator(part->end()));
      }
      return Table::Ingest(t.schema, records,
                           IngestOptions{date, config.retention_days});
    }
  }
  return absl::NotFoundError(absl::StrCat("no configured snapshot of '",
                                          std::string(table), "' for ",
                                          date.ToString()));
}

absl::StatusOr<std::shared_ptr<const Catalog>> LoadCatalog(
    const ServiceConfig& config) {
  auto catalog = std::make_shared<Catalog>();
  for (const TableSource& t : config.tables) {
    for (const SnapshotSource& s : t.snapshots) {
      absl::StatusOr<std::shared_ptr<const Table>> table =
          LoadSnapshot(config, t.schema.name, s.date);
      if (!table.ok()) return table.status();
      if (absl::Status st = catalog->Add(*table); !st.ok()) return st;
    }
  }
  return catalog;
}

ServiceOptions MakeServiceOptions(const ServiceConfig& config) {
  return ServiceOptions{config.privacy, config.fetch_limit, config.secret};
}

}  // namespace dpquery
