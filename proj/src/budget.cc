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

#include "dpquery/budget.h"

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>

#include "absl/strings/numbers.h"
#include "absl/strings/str_cat.h"
#include "nlohmann/json.hpp"

namespace dpquery {
namespace {

using std::chrono::milliseconds;

constexpr int kSnapshotVersion = 1;
constexpr char kSnapshotName[] = "snapshot.json";
constexpr char kLockName[] = "LOCK";
constexpr size_t kMaxIdLength = std::numeric_limits<uint16_t>::max();

std::string JournalName(uint64_t generation) {
  return absl::StrCat("journal-", generation, ".log");
}

Timestamp MonthStart(Timestamp t) {
  const std::chrono::year_month_day ymd{std::chrono::floor<std::chrono::days>(t)};
  return Timestamp(std::chrono::sys_days(ymd.year() / ymd.month() / 1));
}

absl::Status ErrnoStatus(std::string_view what, const std::filesystem::path& p) {
  return absl::InternalError(
      absl::StrCat(std::string(what), " ", p.string(), ": ", std::strerror(errno)));
}

// Makes a rename in `dir` durable.
absl::Status SyncDirectory(const std::filesystem::path& dir) {
  const int fd = ::open(dir.c_str(), O_RDONLY | O_DIRECTORY | O_CLOEXEC);
  if (fd < 0) return ErrnoStatus("cannot open directory", dir);
  const bool synced = ::fsync(fd) == 0;
  ::close(fd);
  if (!synced) return ErrnoStatus("directory fsync failed", dir);
  return absl::OkStatus();
}

void PutLe(std::string& out, uint64_t v, int bytes) {
  for (int i = 0; i < bytes; ++i) out.push_back(static_cast<char>(v >> (8 * i)));
}

uint64_t GetLe(const char* p, int bytes) {
  uint64_t v = 0;
  for (int i = 0; i < bytes; ++i) {
    v |= static_cast<uint64_t>(static_cast<unsigned char>(p[i])) << (8 * i);
  }
  return v;
}

struct JournalRecord {
  std::string analyst_id;
  Cost cost;
  Timestamp time;
};

// Reads every complete record. A short or inconsistent tail (a write cut off
// by a crash) ends the log.
absl::StatusOr<std::vector<JournalRecord>> ReadJournal(
    const std::filesystem::path& path) {
  std::vector<JournalRecord> out;
  std::ifstream in(path, std::ios::binary);
  if (!in) return out;
  const std::string data((std::istreambuf_iterator<char>(in)),
                         std::istreambuf_iterator<char>());
  size_t pos = 0;
  while (data.size() - pos >= 4) {
    const uint64_t len = GetLe(data.data() + pos, 4);
    if (len < 2 + 24 || data.size() - pos - 4 < len) break;
    const char* p = data.data() + pos + 4;
    const uint64_t id_len = GetLe(p, 2);
    if (2 + id_len + 24 != len) break;
    JournalRecord r;
    r.analyst_id.assign(p + 2, id_len);
    p += 2 + id_len;
    r.cost.info = static_cast<int64_t>(GetLe(p, 8));
    r.cost.calls = static_cast<int64_t>(GetLe(p + 8, 8));
    r.time = Timestamp(milliseconds(static_cast<int64_t>(GetLe(p + 16, 8))));
    out.push_back(std::move(r));
    pos += 4 + len;
  }
  return out;
}

}  // namespace

// Append-only log of settled charges:
//   u32le payload_len | u16le id_len | id | i64le info | i64le calls |
//   i64le unix_millis
class BudgetLedger::Journal {
 public:
  static absl::StatusOr<std::unique_ptr<Journal>> Open(
      const std::filesystem::path& path) {
    const int fd = ::open(path.c_str(), O_WRONLY | O_CREAT | O_APPEND | O_CLOEXEC,
                          0644);
    if (fd < 0) return ErrnoStatus("cannot open journal", path);
    return std::unique_ptr<Journal>(new Journal(fd, path));
  }

  ~Journal() {
    ::fsync(fd_);
    ::close(fd_);
  }

  absl::Status Append(std::string_view analyst_id, const Cost& cost,
                      Timestamp time) {
    if (analyst_id.size() > kMaxIdLength) {
      return absl::InvalidArgumentError("analyst id too long for the journal");
    }
    std::string rec;
    rec.reserve(4 + 2 + analyst_id.size() + 24);
    PutLe(rec, 2 + analyst_id.size() + 24, 4);
    PutLe(rec, analyst_id.size(), 2);
    rec.append(analyst_id);
    PutLe(rec, static_cast<uint64_t>(cost.info), 8);
    PutLe(rec, static_cast<uint64_t>(cost.calls), 8);
    PutLe(rec, static_cast<uint64_t>(time.time_since_epoch().count()), 8);
    // O_APPEND makes each write land at the end; loop for partial writes.
    size_t done = 0;
    while (done < rec.size()) {
      const ssize_t n = ::write(fd_, rec.data() + done, rec.size() - done);
      if (n < 0) {
        if (errno == EINTR) continue;
        return ErrnoStatus("journal write failed", path_);
      }
      done += static_cast<size_t>(n);
    }
    return absl::OkStatus();
  }

  absl::Status Sync() {
    if (::fsync(fd_) != 0) return ErrnoStatus("journal fsync failed", path_);
    return absl::OkStatus();
  }

 private:
  Journal(int fd, std::filesystem::path path) : fd_(fd), path_(std::move(path)) {}

  int fd_;
  std::filesystem::path path_;
};

RefreshPeriod RefreshPeriod::Every(milliseconds length) {
  RefreshPeriod p;
  p.length_ = std::max(length, milliseconds(1));
  return p;
}

absl::StatusOr<RefreshPeriod> RefreshPeriod::Parse(std::string_view text) {
  if (text == "monthly") return Monthly();
  size_t digits = 0;
  while (digits < text.size() && text[digits] >= '0' && text[digits] <= '9') {
    ++digits;
  }
  int64_t n = 0;
  if (digits == 0 || !absl::SimpleAtoi(std::string(text.substr(0, digits)), &n) || n <= 0) {
    return absl::InvalidArgumentError(
        absl::StrCat("bad refresh period '", std::string(text), "'"));
  }
  const std::string_view unit = text.substr(digits);
  int64_t unit_ms = 0;
  if (unit == "d") {
    unit_ms = 86'400'000;
  } else if (unit == "h") {
    unit_ms = 3'600'000;
  } else if (unit == "m") {
    unit_ms = 60'000;
  } else if (unit == "s") {
    unit_ms = 1000;
  } else if (unit == "ms") {
    unit_ms = 1;
  } else {
    return absl::InvalidArgumentError(
        absl::StrCat("bad refresh period unit in '", std::string(text), "'"));
  }
  if (n > std::numeric_limits<int64_t>::max() / unit_ms) {
    return absl::InvalidArgumentError("refresh period too long");
  }
  return Every(milliseconds(n * unit_ms));
}

std::string RefreshPeriod::ToString() const {
  if (monthly()) return "monthly";
  const int64_t ms = length_.count();
  for (auto [unit, size] : {std::pair{"d", 86'400'000}, {"h", 3'600'000},
                            {"m", 60'000}, {"s", 1000}}) {
    if (ms % size == 0) return absl::StrCat(ms / size, unit);
  }
  return absl::StrCat(ms, "ms");
}

bool RefreshPeriod::Due(Timestamp last_reset, Timestamp now) const {
  if (monthly()) return MonthStart(now) > last_reset;
  return now - last_reset >= length_;
}

Timestamp RefreshPeriod::CurrentStart(Timestamp last_reset,
                                      Timestamp now) const {
  if (monthly()) return MonthStart(now);
  if (now < last_reset) return last_reset;
  return last_reset + ((now - last_reset) / length_) * length_;
}

Cost BudgetRecord::remaining() const {
  return Cost{std::max<int64_t>(0, max_info - used_info),
              std::max<int64_t>(0, max_calls - used_calls)};
}

absl::StatusOr<Cost> ExpectedCost(const QueryClass& query) {
  if (query.domain == DomainClass::kKnown && !query.domain_size.has_value()) {
    return absl::InvalidArgumentError("known-domain query without a domain");
  }
  if (query.sensitivity == SensitivityClass::kRestricted) {
    if (query.max_changed < 1) {
      return absl::InvalidArgumentError(
          "restricted-sensitivity query needs max_changed >= 1");
    }
    return query.domain == DomainClass::kKnown ? Cost{query.max_changed, 0}
                                               : Cost{query.max_changed, 1};
  }
  if (query.k < 1) return absl::InvalidArgumentError("k must be >= 1");
  return query.domain == DomainClass::kKnown ? Cost{2 * query.k, 0}
                                             : Cost{2 * query.k + 1, 1};
}

Cost ActualCost(const DPResult& result, const QueryClass& query) {
  if (query.sensitivity == SensitivityClass::kRestricted) {
    return query.domain == DomainClass::kKnown ? Cost{query.max_changed, 0}
                                               : Cost{1, 1};
  }
  if (query.domain == DomainClass::kKnown) return Cost{2 * query.k, 0};
  const int64_t n = static_cast<int64_t>(result.entries.size());
  return Cost{2 * n + 1 - (result.terminated_by_bot ? 1 : 0), 1};
}

std::string_view ToString(DenialReason reason) {
  switch (reason) {
    case DenialReason::kBudgetExhausted:
      return "budget_exhausted";
    case DenialReason::kInsufficientForQuery:
      return "insufficient_for_query";
  }
  return "unknown";
}

Reservation::Reservation(Reservation&& other) noexcept
    : ledger_(std::exchange(other.ledger_, nullptr)),
      analyst_id_(std::move(other.analyst_id_)),
      expected_(other.expected_) {}

Reservation& Reservation::operator=(Reservation&& other) noexcept {
  if (this != &other) {
    Release();
    ledger_ = std::exchange(other.ledger_, nullptr);
    analyst_id_ = std::move(other.analyst_id_);
    expected_ = other.expected_;
  }
  return *this;
}

Reservation::~Reservation() { Release(); }

absl::StatusOr<Settlement> Reservation::Settle(const Cost& actual) {
  if (ledger_ == nullptr) {
    return absl::FailedPreconditionError("reservation already closed");
  }
  absl::StatusOr<Settlement> s = ledger_->Settle(analyst_id_, expected_, actual);
  if (s.ok()) ledger_ = nullptr;
  return s;
}

void Reservation::Release() {
  if (ledger_ == nullptr) return;
  std::exchange(ledger_, nullptr)->Release(analyst_id_, expected_);
}

BudgetLedger::BudgetLedger(LedgerOptions options)
    : options_(std::move(options)) {
  if (!options_.clock) {
    options_.clock = [] {
      return std::chrono::time_point_cast<milliseconds>(
          std::chrono::system_clock::now());
    };
  }
}

absl::StatusOr<std::unique_ptr<BudgetLedger>> BudgetLedger::Open(
    LedgerOptions options) {
  auto check = [](const Cost& c) { return c.info >= 0 && c.calls >= 0; };
  if (!check(options.default_max)) {
    return absl::InvalidArgumentError("default budget must be non-negative");
  }
  for (const auto& [id, c] : options.overrides) {
    if (!check(c)) {
      return absl::InvalidArgumentError(
          absl::StrCat("budget override for '", id, "' is negative"));
    }
  }
  std::unique_ptr<BudgetLedger> ledger(new BudgetLedger(std::move(options)));
  if (ledger->options_.directory.has_value()) {
    absl::Status s = ledger->Recover();
    if (!s.ok()) return s;
  }
  return ledger;
}

BudgetLedger::~BudgetLedger() {
  if (journal_ != nullptr) {
    // Best effort; the journal alone is enough to recover.
    Checkpoint().IgnoreError();
    journal_.reset();
  }
  if (lock_fd_ >= 0) ::close(lock_fd_);
}

Timestamp BudgetLedger::Now() const { return options_.clock(); }

Cost BudgetLedger::MaxFor(std::string_view analyst_id) const {
  auto it = options_.overrides.find(analyst_id);
  return it == options_.overrides.end() ? options_.default_max : it->second;
}

BudgetLedger::Account& BudgetLedger::AccountFor(std::string_view analyst_id) {
  {
    std::shared_lock lock(accounts_mu_);
    auto it = accounts_.find(std::string(analyst_id));
    if (it != accounts_.end()) return *it->second;
  }
  std::unique_lock lock(accounts_mu_);
  auto [it, inserted] = accounts_.try_emplace(std::string(analyst_id));
  if (inserted) {
    auto account = std::make_unique<Account>();
    const Cost max = MaxFor(analyst_id);
    account->record.analyst_id = std::string(analyst_id);
    account->record.max_info = max.info;
    account->record.max_calls = max.calls;
    account->record.period = options_.period;
    const Timestamp now = Now();
    account->record.last_reset = options_.period.CurrentStart(now, now);
    it->second = std::move(account);
  }
  return *it->second;
}

void BudgetLedger::RefreshLocked(Account& account, Timestamp now) {
  BudgetRecord& r = account.record;
  if (!r.period.Due(r.last_reset, now)) return;
  r.last_reset = r.period.CurrentStart(r.last_reset, now);
  r.used_info = 0;
  r.used_calls = 0;
}

bool BudgetLedger::CheckBudget(std::string_view analyst_id, const Cost& cost) {
  Account& a = AccountFor(analyst_id);
  std::lock_guard lock(a.mu);
  RefreshLocked(a, Now());
  const BudgetRecord& r = a.record;
  return r.used_info + cost.info <= r.max_info &&
         r.used_calls + cost.calls <= r.max_calls;
}

absl::StatusOr<BudgetRecord> BudgetLedger::UpdateBudget(
    std::string_view analyst_id, const Cost& cost) {
  if (cost.info < 0 || cost.calls < 0) {
    return absl::InvalidArgumentError("cost must be non-negative");
  }
  Account& a = AccountFor(analyst_id);
  std::lock_guard lock(a.mu);
  const Timestamp now = Now();
  RefreshLocked(a, now);
  BudgetRecord& r = a.record;
  if (r.used_info + a.reserved.info + cost.info > r.max_info ||
      r.used_calls + a.reserved.calls + cost.calls > r.max_calls) {
    ++a.sequence;
    return absl::ResourceExhaustedError(absl::StrCat(
        "cost (", cost.info, ", ", cost.calls, ") exceeds remaining budget"));
  }
  if (journal_ != nullptr) {
    std::lock_guard jlock(journal_mu_);
    absl::Status s = journal_->Append(analyst_id, cost, now);
    if (!s.ok()) return s;
  }
  r.used_info += cost.info;
  r.used_calls += cost.calls;
  ++a.sequence;
  return r;
}

BudgetRecord BudgetLedger::GetBudget(std::string_view analyst_id) {
  Account& a = AccountFor(analyst_id);
  std::lock_guard lock(a.mu);
  RefreshLocked(a, Now());
  return a.record;
}

std::variant<Reservation, Denial> BudgetLedger::Reserve(
    std::string_view analyst_id, const Cost& expected) {
  Account& a = AccountFor(analyst_id);
  std::unique_lock lock(a.mu);
  for (;;) {
    RefreshLocked(a, Now());
    const BudgetRecord& r = a.record;
    const Cost remaining = r.remaining();
    std::optional<DenialReason> reason;
    if (expected.info > remaining.info || expected.calls > remaining.calls) {
      // Exhausted when a dimension the query needs has nothing left.
      const bool exhausted = (expected.info > 0 && remaining.info == 0) ||
                             (expected.calls > 0 && remaining.calls == 0);
      reason = exhausted ? DenialReason::kBudgetExhausted
                         : DenialReason::kInsufficientForQuery;
    }
    if (reason.has_value()) {
      return Denial{*reason, expected, remaining, ++a.sequence};
    }
    if (r.used_info + a.reserved.info + expected.info <= r.max_info &&
        r.used_calls + a.reserved.calls + expected.calls <= r.max_calls) {
      a.reserved.info += expected.info;
      a.reserved.calls += expected.calls;
      return Reservation(this, r.analyst_id, expected);
    }
    a.settled.wait(lock);
  }
}

absl::StatusOr<Settlement> BudgetLedger::Settle(const std::string& analyst_id,
                                                const Cost& expected,
                                                const Cost& actual) {
  if (actual.info < 0 || actual.calls < 0 || actual.info > expected.info ||
      actual.calls > expected.calls) {
    return absl::InvalidArgumentError(absl::StrCat(
        "actual cost (", actual.info, ", ", actual.calls,
        ") exceeds the reserved (", expected.info, ", ", expected.calls, ")"));
  }
  Account& a = AccountFor(analyst_id);
  std::lock_guard lock(a.mu);
  const Timestamp now = Now();
  RefreshLocked(a, now);
  if (journal_ != nullptr) {
    std::lock_guard jlock(journal_mu_);
    absl::Status s = journal_->Append(analyst_id, actual, now);
    if (!s.ok()) return s;
  }
  BudgetRecord& r = a.record;
  r.used_info += actual.info;
  r.used_calls += actual.calls;
  a.reserved.info -= expected.info;
  a.reserved.calls -= expected.calls;
  a.settled.notify_all();
  return Settlement{r, actual, ++a.sequence};
}

void BudgetLedger::Release(const std::string& analyst_id,
                           const Cost& expected) {
  Account& a = AccountFor(analyst_id);
  std::lock_guard lock(a.mu);
  a.reserved.info -= expected.info;
  a.reserved.calls -= expected.calls;
  a.settled.notify_all();
}

absl::Status BudgetLedger::Reset(std::string_view analyst_id) {
  {
    Account& a = AccountFor(analyst_id);
    std::lock_guard lock(a.mu);
    const Timestamp now = Now();
    a.record.used_info = 0;
    a.record.used_calls = 0;
    a.record.last_reset =
        a.record.period.monthly() ? a.record.period.CurrentStart(now, now) : now;
    ++a.sequence;
    a.settled.notify_all();
  }
  return Checkpoint();
}

std::vector<BudgetRecord> BudgetLedger::List() {
  std::vector<Account*> accounts;
  {
    std::shared_lock lock(accounts_mu_);
    for (auto& [id, a] : accounts_) accounts.push_back(a.get());
  }
  std::vector<BudgetRecord> out;
  const Timestamp now = Now();
  for (Account* a : accounts) {
    std::lock_guard lock(a->mu);
    RefreshLocked(*a, now);
    out.push_back(a->record);
  }
  std::sort(out.begin(), out.end(),
            [](const BudgetRecord& x, const BudgetRecord& y) {
              return x.analyst_id < y.analyst_id;
            });
  return out;
}

absl::Status BudgetLedger::Sync() {
  if (journal_ == nullptr) return absl::OkStatus();
  std::lock_guard jlock(journal_mu_);
  return journal_->Sync();
}

absl::Status BudgetLedger::Checkpoint() {
  if (!options_.directory.has_value()) return absl::OkStatus();
  std::lock_guard cp(checkpoint_mu_);
  std::shared_lock map_lock(accounts_mu_);
  // Settles lock account, then journal. Taking every account lock first keeps
  // that order and freezes the state being written.
  std::vector<std::unique_lock<std::mutex>> held;
  held.reserve(accounts_.size());
  for (auto& [id, a] : accounts_) held.emplace_back(a->mu);
  std::lock_guard jlock(journal_mu_);
  return WriteSnapshotLocked();
}

absl::Status BudgetLedger::WriteSnapshotLocked() {
  const std::filesystem::path& dir = *options_.directory;
  const uint64_t next = generation_ + 1;

  nlohmann::json analysts = nlohmann::json::object();
  for (const auto& [id, a] : accounts_) {
    analysts[id] = {
        {"used_info", a->record.used_info},
        {"used_calls", a->record.used_calls},
        {"last_reset_millis", a->record.last_reset.time_since_epoch().count()},
    };
  }
  const nlohmann::json doc = {{"version", kSnapshotVersion},
                              {"journal_generation", next},
                              {"analysts", analysts}};

  const std::filesystem::path tmp = dir / "snapshot.json.tmp";
  {
    const int fd =
        ::open(tmp.c_str(), O_WRONLY | O_CREAT | O_TRUNC | O_CLOEXEC, 0644);
    if (fd < 0) return ErrnoStatus("cannot write snapshot", tmp);
    const std::string text = doc.dump(2) + "\n";
    size_t done = 0;
    while (done < text.size()) {
      const ssize_t n = ::write(fd, text.data() + done, text.size() - done);
      if (n < 0 && errno == EINTR) continue;
      if (n < 0) {
        ::close(fd);
        return ErrnoStatus("snapshot write failed", tmp);
      }
      done += static_cast<size_t>(n);
    }
    const bool synced = ::fsync(fd) == 0;
    ::close(fd);
    if (!synced) return ErrnoStatus("snapshot fsync failed", tmp);
  }
  std::error_code ec;
  std::filesystem::rename(tmp, dir / kSnapshotName, ec);
  if (ec) {
    return absl::InternalError(
        absl::StrCat("cannot install snapshot: ", ec.message()));
  }
  if (absl::Status s = SyncDirectory(dir); !s.ok()) return s;

  absl::StatusOr<std::unique_ptr<Journal>> journal =
      Journal::Open(dir / JournalName(next));
  if (!journal.ok()) return journal.status();
  journal_ = std::move(*journal);
  std::filesystem::remove(dir / JournalName(generation_), ec);
  generation_ = next;
  return absl::OkStatus();
}

absl::Status BudgetLedger::Recover() {
  const std::filesystem::path& dir = *options_.directory;
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) {
    return absl::InternalError(absl::StrCat("cannot create ", dir.string(),
                                            ": ", ec.message()));
  }
  const std::filesystem::path lock_path = dir / kLockName;
  lock_fd_ = ::open(lock_path.c_str(), O_RDWR | O_CREAT | O_CLOEXEC, 0644);
  if (lock_fd_ < 0) return ErrnoStatus("cannot open", lock_path);
  if (::flock(lock_fd_, LOCK_EX | LOCK_NB) != 0) {
    return absl::FailedPreconditionError(absl::StrCat(
        "ledger directory ", dir.string(), " is in use by another process"));
  }

  auto fresh_account = [&](const std::string& id, Timestamp created) {
    auto account = std::make_unique<Account>();
    const Cost max = MaxFor(id);
    account->record.analyst_id = id;
    account->record.max_info = max.info;
    account->record.max_calls = max.calls;
    account->record.period = options_.period;
    account->record.last_reset = options_.period.CurrentStart(created, created);
    return account;
  };

  const std::filesystem::path snapshot = dir / kSnapshotName;
  if (std::filesystem::exists(snapshot)) {
    std::ifstream in(snapshot);
    nlohmann::json doc = nlohmann::json::parse(in, nullptr, false);
    if (doc.is_discarded() || !doc.is_object() ||
        doc.value("version", 0) != kSnapshotVersion ||
        !doc.contains("journal_generation") || !doc.contains("analysts")) {
      return absl::DataLossError(
          absl::StrCat("unreadable snapshot ", snapshot.string()));
    }
    try {
      generation_ = doc["journal_generation"].get<uint64_t>();
      for (const auto& [id, v] : doc["analysts"].items()) {
        auto account = fresh_account(id, Now());
        account->record.used_info = v.at("used_info").get<int64_t>();
        account->record.used_calls = v.at("used_calls").get<int64_t>();
        account->record.last_reset =
            Timestamp(milliseconds(v.at("last_reset_millis").get<int64_t>()));
        accounts_[id] = std::move(account);
      }
    } catch (const nlohmann::json::exception& e) {
      return absl::DataLossError(
          absl::StrCat("bad snapshot ", snapshot.string(), ": ", e.what()));
    }
  }

  absl::StatusOr<std::vector<JournalRecord>> records =
      ReadJournal(dir / JournalName(generation_));
  if (!records.ok()) return records.status();
  for (JournalRecord& rec : *records) {
    auto it = accounts_.find(rec.analyst_id);
    if (it == accounts_.end()) {
      it = accounts_.emplace(rec.analyst_id, fresh_account(rec.analyst_id, rec.time))
               .first;
    }
    Account& a = *it->second;
    RefreshLocked(a, rec.time);
    a.record.used_info += rec.cost.info;
    a.record.used_calls += rec.cost.calls;
  }

  // Journals of older generations are already folded into the snapshot.
  for (const auto& entry : std::filesystem::directory_iterator(dir, ec)) {
    const std::string name = entry.path().filename().string();
    uint64_t g = 0;
    if (name.starts_with("journal-") && name.ends_with(".log") &&
        absl::SimpleAtoi(name.substr(8, name.size() - 12), &g) &&
        g < generation_) {
      std::filesystem::remove(entry.path(), ec);
    }
  }

  absl::StatusOr<std::unique_ptr<Journal>> journal =
      Journal::Open(dir / JournalName(generation_));
  if (!journal.ok()) return journal.status();
  journal_ = std::move(*journal);
  return absl::OkStatus();
}

}  // namespace dpquery
