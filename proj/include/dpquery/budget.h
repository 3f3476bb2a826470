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

// Per-analyst privacy budget ledger.
//
// Each analyst holds an information budget (units of eps_per-BR mechanisms)
// and a call budget (unknown-domain queries). Usage refreshes lazily: the
// first access after a period has elapsed zeroes it.
//
// Admission is two-phase. Reserve() atomically sets aside the worst-case cost
// of a query; Reservation::Settle() charges what the released result actually
// cost and returns the rest. A reservation that is dropped unsettled charges
// nothing.
//
// With a directory configured, every settled charge is appended to a journal
// before Settle() returns, and a snapshot is written on Checkpoint() and on
// destruction. Opening the ledger again replays snapshot + journal. One
// process at a time may hold a ledger directory.

#ifndef DPQUERY_BUDGET_H_
#define DPQUERY_BUDGET_H_

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "absl/container/node_hash_map.h"
#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "dpquery/date.h"
#include "dpquery/mechanisms.h"
#include "dpquery/query_class.h"

namespace dpquery {

struct Cost {
  int64_t info = 0;
  int64_t calls = 0;

  friend bool operator==(const Cost&, const Cost&) = default;
};

class RefreshPeriod {
 public:
  // Calendar months, UTC. A refresh moves last_reset to the 1st of the
  // current month.
  static RefreshPeriod Monthly() { return RefreshPeriod(); }
  // Fixed length. A refresh moves last_reset forward by whole periods.
  static RefreshPeriod Every(std::chrono::milliseconds length);
  // "monthly", or a positive integer followed by d, h, m, s or ms.
  static absl::StatusOr<RefreshPeriod> Parse(std::string_view text);

  bool monthly() const { return length_.count() == 0; }
  std::string ToString() const;

  // now >= last_reset + one period.
  bool Due(Timestamp last_reset, Timestamp now) const;
  // Start of the period containing `now`.
  Timestamp CurrentStart(Timestamp last_reset, Timestamp now) const;

  friend bool operator==(const RefreshPeriod&, const RefreshPeriod&) = default;

 private:
  RefreshPeriod() = default;
  std::chrono::milliseconds length_{0};
};

struct BudgetRecord {
  std::string analyst_id;
  int64_t max_info = 0;
  int64_t max_calls = 0;
  int64_t used_info = 0;
  int64_t used_calls = 0;
  RefreshPeriod period = RefreshPeriod::Monthly();
  Timestamp last_reset{};

  Cost remaining() const;
};

// Worst-case cost used for admission:
//   known   + restricted    (delta, 0)
//   unknown + restricted    (delta, 1)   admission needs delta info units
//   known   + unrestricted  (2k, 0)
//   unknown + unrestricted  (2k + 1, 1)
// InvalidArgument when the class is inconsistent (k < 1, restricted without
// delta >= 1, known without a domain size).
absl::StatusOr<Cost> ExpectedCost(const QueryClass& query);

// Realized cost of a released result:
//   known   + restricted    (delta, 0)
//   unknown + restricted    (1, 1)
//   known   + unrestricted  (2k, 0)
//   unknown + unrestricted  (2|entries| + 1 - [terminated_by_bot], 1)
Cost ActualCost(const DPResult& result, const QueryClass& query);

struct LedgerOptions {
  Cost default_max{3000, 30};
  std::map<std::string, Cost, std::less<>> overrides;
  RefreshPeriod period = RefreshPeriod::Monthly();
  // Journal and snapshot location; in-memory only when unset.
  std::optional<std::filesystem::path> directory;
  // Defaults to the system clock.
  std::function<Timestamp()> clock;
};

enum class DenialReason {
  // A budget dimension the query needs is fully used.
  kBudgetExhausted,
  // Budget left, but less than the query's worst-case cost.
  kInsufficientForQuery,
};

std::string_view ToString(DenialReason reason);

struct Denial {
  DenialReason reason;
  Cost expected;
  Cost remaining;
  // Position of this decision in the analyst's ledger history.
  uint64_t sequence = 0;
};

struct Settlement {
  BudgetRecord record;
  Cost charged;
  uint64_t sequence = 0;
};

class BudgetLedger;

class Reservation {
 public:
  Reservation(Reservation&& other) noexcept;
  Reservation& operator=(Reservation&& other) noexcept;
  Reservation(const Reservation&) = delete;
  Reservation& operator=(const Reservation&) = delete;
  ~Reservation();

  // Charges `actual` (which must not exceed the reserved cost) and returns the
  // remainder of the reservation. InvalidArgument if actual exceeds expected,
  // FailedPrecondition if already settled or released. A journal write
  // failure is returned as-is and nothing is charged.
  absl::StatusOr<Settlement> Settle(const Cost& actual);

  // Returns the reservation without charging anything.
  void Release();

  const std::string& analyst_id() const { return analyst_id_; }
  const Cost& expected() const { return expected_; }

 private:
  friend class BudgetLedger;
  Reservation(BudgetLedger* ledger, std::string analyst_id, Cost expected)
      : ledger_(ledger), analyst_id_(std::move(analyst_id)), expected_(expected) {}

  BudgetLedger* ledger_ = nullptr;
  std::string analyst_id_;
  Cost expected_;
};

class BudgetLedger {
 public:
  static absl::StatusOr<std::unique_ptr<BudgetLedger>> Open(
      LedgerOptions options);
  ~BudgetLedger();

  BudgetLedger(const BudgetLedger&) = delete;
  BudgetLedger& operator=(const BudgetLedger&) = delete;

  // Whether settled usage plus `cost` fits both budgets. Applies a due
  // refresh; never changes usage otherwise.
  bool CheckBudget(std::string_view analyst_id, const Cost& cost);

  // Atomic check-and-deduct. ResourceExhausted when the cost does not fit
  // (counting in-flight reservations); nothing is deducted then.
  absl::StatusOr<BudgetRecord> UpdateBudget(std::string_view analyst_id,
                                            const Cost& cost);

  // Current record, after any due refresh. Unknown analysts get a fresh
  // record with the configured maximum.
  BudgetRecord GetBudget(std::string_view analyst_id);

  // Admission. Denies when settled usage plus `expected` does not fit. When it
  // would only fit once other in-flight reservations settle, waits for them,
  // so the outcome is the same as if those queries had run first.
  std::variant<Reservation, Denial> Reserve(std::string_view analyst_id,
                                            const Cost& expected);

  // Zeroes an analyst's usage and starts a new period now. Durable.
  absl::Status Reset(std::string_view analyst_id);

  std::vector<BudgetRecord> List();

  // Writes a snapshot of every account and starts an empty journal.
  absl::Status Checkpoint();

  // Flushes the journal to stable storage.
  absl::Status Sync();

 private:
  friend class Reservation;

  struct Account {
    std::mutex mu;
    std::condition_variable settled;
    BudgetRecord record;
    Cost reserved;
    uint64_t sequence = 0;
  };
  class Journal;

  explicit BudgetLedger(LedgerOptions options);

  Timestamp Now() const;
  Cost MaxFor(std::string_view analyst_id) const;
  Account& AccountFor(std::string_view analyst_id);
  void RefreshLocked(Account& account, Timestamp now);
  absl::Status Recover();
  absl::Status WriteSnapshotLocked();

  absl::StatusOr<Settlement> Settle(const std::string& analyst_id,
                                    const Cost& expected, const Cost& actual);
  void Release(const std::string& analyst_id, const Cost& expected);

  LedgerOptions options_;
  std::shared_mutex accounts_mu_;
  absl::node_hash_map<std::string, std::unique_ptr<Account>> accounts_;

  std::mutex checkpoint_mu_;
  std::mutex journal_mu_;
  std::unique_ptr<Journal> journal_;
  uint64_t generation_ = 0;
  int lock_fd_ = -1;
};

}  // namespace dpquery

#endif  // DPQUERY_BUDGET_H_
