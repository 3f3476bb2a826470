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

// Closed-form attack calculus used to pick eps_per, delta and the budgets.
//
// Counts carry Lap(2 / eps_per) noise. The calculators below quantify three
// attacks an analyst could mount within one budget period:
//   - averaging the same count over n daily snapshots,
//   - differencing two top-k lists to expose counts with tiny noise,
//   - a single member's element clearing the unknown-domain threshold.

#ifndef DPQUERY_CALIBRATION_H_
#define DPQUERY_CALIBRATION_H_

#include <cstdint>
#include <string>

#include "absl/status/statusor.h"
#include "dpquery/composition.h"

namespace dpquery {

// Standard normal CDF.
double NormalCdf(double x);

// Normal approximation to Pr[|mean of n Lap(2/eps) draws| < 1/2]:
// 2 Phi(eps sqrt(n) / (4 sqrt(2))) - 1.
absl::StatusOr<double> AveragingAttackProbability(double eps_per,
                                                  int64_t n_days);

// p = Pr[|Lap(2/eps)| < 1/2] = 1 - e^{-eps/4}.
absl::StatusOr<double> SmallNoiseProbability(double eps_per);

// Largest k whose expected differencing overlap p^2 k stays below one:
// floor(1 / p^2).
absl::StatusOr<int64_t> MaxDifferencingK(double p);

// Information budget covering two top-k queries with counts at k = max_k:
// 4 max_k + 2.
int64_t SuggestedInfoBudget(int64_t max_k);

// Expected number of elements with small noise in both of two top-k lists.
double ExpectedOverlap(int64_t k, double p);

// Hypergeometric probability of exactly s shared elements when two draws of
// m out of k are compared: C(m, s) C(k - m, m - s) / C(k, m). Evaluated in
// log space. InvalidArgument unless 0 <= s <= m <= k.
absl::StatusOr<double> HypergeometricPmf(int64_t k, int64_t m, int64_t s);

// m = floor(p k).
int64_t SmallNoiseDraws(int64_t k, double p);

struct BreachBounds {
  // Union bound over the d_bar counts of one query:
  // d_bar (1 - 1 / (1 + e^{-eps} delta / d_bar)).
  double per_query = 0;
  // Its relaxation delta e^{-eps}.
  double per_query_relaxed = 0;
  // Over ell_star unknown-domain queries: ell_star delta e^{-eps}.
  double all_queries = 0;
};

absl::StatusOr<BreachBounds> ThresholdBreachBound(double eps_per, double delta,
                                                  int64_t ell_star,
                                                  int64_t d_bar);

struct CalibrationInputs {
  double eps_per = 0.15;
  double delta = 1e-10;
  int64_t k_star = 3000;
  int64_t ell_star = 30;
  double delta_prime = 1e-9;
  int64_t n_days = 30;
  int64_t d_bar = 1000;
};

struct AttackReport {
  CalibrationInputs inputs;
  double averaging_prob = 0;
  double small_noise_p = 0;
  int64_t max_k = 0;
  int64_t suggested_info_budget = 0;
  double expected_overlap = 0;
  BreachBounds breach;
  OverallGuarantee overall;
};

absl::StatusOr<AttackReport> FullReport(const CalibrationInputs& inputs);

// Aligned two-column text table.
std::string FormatReportTable(const AttackReport& report);
// Compact JSON, keys sorted.
std::string FormatReportJson(const AttackReport& report);

}  // namespace dpquery

#endif  // DPQUERY_CALIBRATION_H_
