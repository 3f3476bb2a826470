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

// Service configuration file (JSON). The schema is documented in
// docs/config.md.

#ifndef DPQUERY_CONFIG_H_
#define DPQUERY_CONFIG_H_

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "absl/status/statusor.h"
#include "dpquery/budget.h"
#include "dpquery/composition.h"
#include "dpquery/date.h"
#include "dpquery/mechanisms.h"
#include "dpquery/query_service.h"
#include "dpquery/store.h"

namespace dpquery {

inline constexpr size_t kMinSecretBytes = 32;

struct SnapshotSource {
  Date date;
  std::vector<std::filesystem::path> files;
};

struct TableSource {
  TableSchema schema;
  std::vector<SnapshotSource> snapshots;
};

struct ServiceConfig {
  // Raw key bytes, at least kMinSecretBytes long.
  std::string secret;
  PrivacyParams privacy;
  // Present when privacy was configured as an overall (eps_max, delta_star)
  // target and eps_per, delta were solved from it.
  std::optional<SystemPrivacyBudget> system;
  LedgerOptions ledger;
  FetchLimitRule fetch_limit;
  int retention_days = 30;
  std::vector<TableSource> tables;
  std::string listen_host = "127.0.0.1";
  uint16_t listen_port = 0;
};

// Relative paths resolve against `base_dir`. The secret may come from
// "secret_key_hex", the environment variable named by "secret_key_env", or
// the file named by "secret_key_file"; exactly one must be set.
absl::StatusOr<ServiceConfig> ParseConfig(std::string_view json_text,
                                          const std::filesystem::path& base_dir);

absl::StatusOr<ServiceConfig> LoadConfig(const std::filesystem::path& path);

// Ingests every configured snapshot.
absl::StatusOr<std::shared_ptr<const Catalog>> LoadCatalog(
    const ServiceConfig& config);

// Ingests one snapshot of one table.
absl::StatusOr<std::shared_ptr<const Table>> LoadSnapshot(
    const ServiceConfig& config, std::string_view table, Date date);

ServiceOptions MakeServiceOptions(const ServiceConfig& config);

}  // namespace dpquery

#endif  // DPQUERY_CONFIG_H_
