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

#include "gmock/gmock.h"
#include "gtest/gtest.h"
#include "nlohmann/json.hpp"
#include "testing/test_util.h"

namespace dpquery {
namespace {

using ::dpquery::testing::TempDir;
using ::nlohmann::json;
using ::testing::HasSubstr;

constexpr char kKeyHex[] =
    "000102030405060708090a0b0c0d0e0f101112131415161718191a1b1c1d1e1f";

json Minimal() {
  return {{"secret_key_hex", kKeyHex},
          {"privacy", {{"eps_per", 0.15}, {"delta", 1e-10}}}};
}

absl::StatusOr<ServiceConfig> Parse(const json& j,
                                    const std::filesystem::path& base = "/base") {
  return ParseConfig(j.dump(), base);
}

TEST(ConfigTest, MinimalUsesDefaults) {
  absl::StatusOr<ServiceConfig> c = Parse(Minimal());
  ASSERT_TRUE(c.ok()) << c.status();
  EXPECT_EQ(HexEncode(std::span<const uint8_t>(
                reinterpret_cast<const uint8_t*>(c->secret.data()), c->secret.size())),
            kKeyHex);
  EXPECT_EQ(c->privacy.eps_per, 0.15);
  EXPECT_EQ(c->privacy.delta, 1e-10);
  EXPECT_FALSE(c->system.has_value());
  EXPECT_EQ(c->ledger.default_max, (Cost{3000, 30}));
  EXPECT_TRUE(c->ledger.period.monthly());
  EXPECT_FALSE(c->ledger.directory.has_value());
  EXPECT_EQ(c->fetch_limit.multiplier, 10);
  EXPECT_EQ(c->fetch_limit.floor, 1000);
  EXPECT_EQ(c->retention_days, 30);
  EXPECT_EQ(c->listen_host, "127.0.0.1");
  EXPECT_EQ(c->listen_port, 0);
}

TEST(ConfigTest, FullConfig) {
  json j = Minimal();
  j["budgets"] = {{"info", 500},
                  {"calls", 5},
                  {"period", "7d"},
                  {"overrides", {{"vip", {{"info", 900}}}}}};
  j["journal_dir"] = "ledger";
  j["fetch_limit"] = {{"multiplier", 20}, {"floor", 100}};
  j["retention_days"] = 10;
  j["listen"] = {{"host", "0.0.0.0"}, {"port", 7070}};
  j["tables"] = json::array(
      {{{"name", "shares"},
        {"dimensions", {"country", "seniority"}},
        {"columns",
         json::array({{{"name", "seniority"},
                       {"domain", {"junior", "senior"}},
                       {"sensitivity", {{"restricted", 1}}}},
                      {{"name", "item"}, {"sensitivity", "unrestricted"}, {"tau", 1}}})},
        {"snapshots",
         json::array({{{"date", "2024-03-31"}, {"files", {"a.ndjson", "/abs/b.csv"}}}})}}});
  absl::StatusOr<ServiceConfig> c = Parse(j);
  ASSERT_TRUE(c.ok()) << c.status();
  EXPECT_EQ(c->ledger.default_max, (Cost{500, 5}));
  EXPECT_EQ(c->ledger.period, RefreshPeriod::Every(std::chrono::days(7)));
  EXPECT_EQ(c->ledger.overrides.at("vip"), (Cost{900, 5}));
  EXPECT_EQ(*c->ledger.directory, std::filesystem::path("/base/ledger"));
  EXPECT_EQ(c->fetch_limit.multiplier, 20);
  EXPECT_EQ(c->fetch_limit.floor, 100);
  EXPECT_EQ(c->retention_days, 10);
  EXPECT_EQ(c->listen_host, "0.0.0.0");
  EXPECT_EQ(c->listen_port, 7070);
  ASSERT_EQ(c->tables.size(), 1u);
  const TableSource& t = c->tables[0];
  EXPECT_EQ(t.schema.name, "shares");
  ASSERT_NE(t.schema.FindMeta("seniority"), nullptr);
  EXPECT_EQ(t.schema.FindMeta("seniority")->restricted_delta(), 1);
  EXPECT_TRUE(t.schema.FindMeta("seniority")->known_domain());
  EXPECT_FALSE(t.schema.FindMeta("item")->restricted());
  ASSERT_EQ(t.snapshots.size(), 1u);
  EXPECT_EQ(t.snapshots[0].date, Date(2024, 3, 31));
  EXPECT_EQ(t.snapshots[0].files[0], std::filesystem::path("/base/a.ndjson"));
  EXPECT_EQ(t.snapshots[0].files[1], std::filesystem::path("/abs/b.csv"));
}

TEST(ConfigTest, SolvesPerQueryParamsFromOverallTarget) {
  json j = Minimal();
  j["privacy"] = {{"eps_max", 34.9}, {"delta_star", 7e-9}};
  absl::StatusOr<ServiceConfig> c = Parse(j);
  ASSERT_TRUE(c.ok()) << c.status();
  ASSERT_TRUE(c->system.has_value());
  EXPECT_EQ(c->system->k_star, 3000);
  EXPECT_EQ(c->system->ell_star, 30);
  EXPECT_NEAR(c->privacy.eps_per, 0.15, 0.005);
  EXPECT_DOUBLE_EQ(c->privacy.delta, 7e-9 / 120);
}

TEST(ConfigTest, SecretSources) {
  const auto dir = TempDir("secret");
  std::ofstream(dir / "key.hex") << kKeyHex << "\n";
  json from_file = Minimal();
  from_file.erase("secret_key_hex");
  from_file["secret_key_file"] = "key.hex";
  EXPECT_TRUE(Parse(from_file, dir).ok());

  ::setenv("DPQUERY_TEST_KEY", kKeyHex, 1);
  json from_env = Minimal();
  from_env.erase("secret_key_hex");
  from_env["secret_key_env"] = "DPQUERY_TEST_KEY";
  EXPECT_TRUE(Parse(from_env).ok());
  from_env["secret_key_env"] = "DPQUERY_TEST_KEY_UNSET";
  EXPECT_THAT(std::string(Parse(from_env).status().message()), HasSubstr("unset"));

  json both = Minimal();
  both["secret_key_env"] = "DPQUERY_TEST_KEY";
  EXPECT_THAT(std::string(Parse(both).status().message()), HasSubstr("exactly one"));

  json short_key = Minimal();
  short_key["secret_key_hex"] = "00112233";
  EXPECT_THAT(std::string(Parse(short_key).status().message()),
              HasSubstr("at least 32 bytes"));
}

TEST(ConfigTest, Errors) {
  EXPECT_FALSE(ParseConfig("[", "/").ok());
  json no_privacy = Minimal();
  no_privacy.erase("privacy");
  EXPECT_FALSE(Parse(no_privacy).ok());
  json bad_period = Minimal();
  bad_period["budgets"] = {{"period", "fortnightly"}};
  EXPECT_FALSE(Parse(bad_period).ok());
  json bad_port = Minimal();
  bad_port["listen"] = {{"port", 70000}};
  EXPECT_FALSE(Parse(bad_port).ok());
  json bad_type = Minimal();
  bad_type["retention_days"] = "thirty";
  EXPECT_EQ(Parse(bad_type).status().code(), absl::StatusCode::kInvalidArgument);
  json bad_sensitivity = Minimal();
  bad_sensitivity["tables"] = json::array(
      {{{"name", "t"}, {"columns", json::array({{{"name", "item"}, {"sensitivity", "loose"}}})}}});
  EXPECT_FALSE(Parse(bad_sensitivity).ok());
}

TEST(ConfigTest, LoadsSnapshotsFromFiles) {
  const auto dir = TempDir("catalog");
  std::ofstream(dir / "day1.ndjson")
      << "{\"member_id\":\"m1\",\"item\":\"a\",\"event_date\":\"2024-03-31\","
         "\"country\":\"in\"}\n";
  std::ofstream(dir / "day1.csv")
      << "member_id,item,event_date,country\nm2,a,2024-03-30,us\nm3,b,2024-01-01,us\n";
  json j = Minimal();
  j["tables"] = json::array(
      {{{"name", "shares"},
        {"dimensions", {"country"}},
        {"snapshots",
         json::array({{{"date", "2024-03-31"}, {"files", {"day1.ndjson", "day1.csv"}}}})}}});
  std::ofstream(dir / "config.json") << j.dump();
  absl::StatusOr<ServiceConfig> c = LoadConfig(dir / "config.json");
  ASSERT_TRUE(c.ok()) << c.status();
  absl::StatusOr<std::shared_ptr<const Catalog>> catalog = LoadCatalog(*c);
  ASSERT_TRUE(catalog.ok()) << catalog.status();
  auto table = (*catalog)->Get("shares", Date(2024, 3, 31));
  ASSERT_TRUE(table.ok());
  EXPECT_EQ((*table)->report().accepted, 2u);
  EXPECT_EQ((*table)->report().rejected_retention, 1u);
  EXPECT_EQ(LoadSnapshot(*c, "shares", Date(2024, 4, 1)).status().code(),
            absl::StatusCode::kNotFound);
  const ServiceOptions options = MakeServiceOptions(*c);
  EXPECT_EQ(options.secret, c->secret);
  EXPECT_EQ(options.privacy.eps_per, 0.15);
}

}  // namespace
}  // namespace dpquery
