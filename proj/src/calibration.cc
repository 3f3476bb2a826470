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

#include "dpquery/calibration.h"

#include <cmath>
#include <cstdio>
#include <vector>

#include "absl/strings/str_cat.h"
#include "nlohmann/json.hpp"

namespace dpquery {
namespace {

absl::Status CheckEps(double eps) {
  if (!(eps > 0) || !std::isfinite(eps)) {
    return absl::InvalidArgumentError(
        absl::StrCat("eps_per must be positive and finite, got ", eps));
  }
  return absl::OkStatus();
}

double LogChoose(int64_t n, int64_t r) {
  return std::lgamma(static_cast<double>(n) + 1) -
         std::lgamma(static_cast<double>(r) + 1) -
         std::lgamma(static_cast<double>(n - r) + 1);
}

std::string Format(const char* fmt, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), fmt, v);
  return buf;
}

}  // namespace

double NormalCdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

absl::StatusOr<double> AveragingAttackProbability(double eps_per,
                                                  int64_t n_days) {
  if (absl::Status s = CheckEps(eps_per); !s.ok()) return s;
  if (n_days < 1) return absl::InvalidArgumentError("n_days must be >= 1");
  const double z =
      eps_per * std::sqrt(static_cast<double>(n_days)) / (4.0 * std::sqrt(2.0));
  // 2 Phi(z) - 1 = erf(z / sqrt 2), without the cancellation.
  return std::erf(z / std::sqrt(2.0));
}

absl::StatusOr<double> SmallNoiseProbability(double eps_per) {
  if (absl::Status s = CheckEps(eps_per); !s.ok()) return s;
  return -std::expm1(-eps_per / 4.0);
}

absl::StatusOr<int64_t> MaxDifferencingK(double p) {
  if (!(p > 0 && p <= 1)) {
    return absl::InvalidArgumentError(absl::StrCat("p must lie in (0, 1], got ", p));
  }
  return static_cast<int64_t>(std::floor(1.0 / (p * p)));
}

int64_t SuggestedInfoBudget(int64_t max_k) { return 4 * max_k + 2; }

double ExpectedOverlap(int64_t k, double p) {
  return p * p * static_cast<double>(k);
}

int64_t SmallNoiseDraws(int64_t k, double p) {
  return static_cast<int64_t>(std::floor(p * static_cast<double>(k)));
}

absl::StatusOr<double> HypergeometricPmf(int64_t k, int64_t m, int64_t s) {
  if (!(0 <= s && s <= m && m <= k)) {
    return absl::InvalidArgumentError(absl::StrCat(
        "need 0 <= s <= m <= k, got k=", k, " m=", m, " s=", s));
  }
  if (m - s > k - m) return 0.0;
  return std::exp(LogChoose(m, s) + LogChoose(k - m, m - s) - LogChoose(k, m));
}

absl::StatusOr<BreachBounds> ThresholdBreachBound(double eps_per, double delta,
                                                  int64_t ell_star,
                                                  int64_t d_bar) {
  if (absl::Status s = CheckEps(eps_per); !s.ok()) return s;
  if (!(delta >= 0 && delta < 1)) {
    return absl::InvalidArgumentError("delta must lie in [0, 1)");
  }
  if (ell_star < 1 || d_bar < 1) {
    return absl::InvalidArgumentError("ell_star and d_bar must be >= 1");
  }
  const double tail = std::exp(-eps_per) * delta;
  const double d = static_cast<double>(d_bar);
  const double x = tail / d;
  BreachBounds b;
  b.per_query = d * x / (1.0 + x);
  b.per_query_relaxed = tail;
  b.all_queries = static_cast<double>(ell_star) * tail;
  return b;
}

absl::StatusOr<AttackReport> FullReport(const CalibrationInputs& inputs) {
  AttackReport r;
  r.inputs = inputs;
  absl::StatusOr<double> averaging =
      AveragingAttackProbability(inputs.eps_per, inputs.n_days);
  if (!averaging.ok()) return averaging.status();
  r.averaging_prob = *averaging;
  absl::StatusOr<double> p = SmallNoiseProbability(inputs.eps_per);
  if (!p.ok()) return p.status();
  r.small_noise_p = *p;
  absl::StatusOr<int64_t> max_k = MaxDifferencingK(*p);
  if (!max_k.ok()) return max_k.status();
  r.max_k = *max_k;
  r.suggested_info_budget = SuggestedInfoBudget(*max_k);
  r.expected_overlap = ExpectedOverlap(*max_k, *p);
  absl::StatusOr<BreachBounds> breach = ThresholdBreachBound(
      inputs.eps_per, inputs.delta, inputs.ell_star, inputs.d_bar);
  if (!breach.ok()) return breach.status();
  r.breach = *breach;
  absl::StatusOr<OverallGuarantee> overall = ComputeOverallGuarantee(
      {inputs.eps_per, inputs.delta, inputs.delta_prime}, inputs.k_star,
      inputs.ell_star);
  if (!overall.ok()) return overall.status();
  r.overall = *overall;
  return r;
}

std::string FormatReportTable(const AttackReport& r) {
  const CalibrationInputs& in = r.inputs;
  const std::vector<std::pair<std::string, std::string>> rows = {
      {"eps_per", Format("%.6g", in.eps_per)},
      {"delta", Format("%.6g", in.delta)},
      {"information budget k*", absl::StrCat(in.k_star)},
      {"call budget l*", absl::StrCat(in.ell_star)},
      {"delta'", Format("%.6g", in.delta_prime)},
      {"averaging attack, n days", absl::StrCat(in.n_days)},
      {"averaging attack success", Format("%.6f", r.averaging_prob)},
      {"small-noise probability p", Format("%.6f", r.small_noise_p)},
      {"max differencing k", absl::StrCat(r.max_k)},
      {"suggested information budget", absl::StrCat(r.suggested_info_budget)},
      {"expected overlap at max k", Format("%.6f", r.expected_overlap)},
      {absl::StrCat("threshold breach, one query (d_bar=", in.d_bar, ")"),
       Format("%.6e", r.breach.per_query)},
      {"threshold breach, one query (relaxed)",
       Format("%.6e", r.breach.per_query_relaxed)},
      {"threshold breach, all queries", Format("%.6e", r.breach.all_queries)},
      {"overall epsilon", Format("%.6f", r.overall.eps_max)},
      {"overall delta", Format("%.6g", r.overall.delta_star)},
  };
  size_t width = 0;
  for (const auto& [k, v] : rows) width = std::max(width, k.size());
  std::string out;
  for (const auto& [k, v] : rows) {
    absl::StrAppend(&out, k, std::string(width - k.size() + 2, ' '), v, "\n");
  }
  return out;
}

std::string FormatReportJson(const AttackReport& r) {
  const CalibrationInputs& in = r.inputs;
  const nlohmann::json j = {
      {"inputs",
       {{"eps_per", in.eps_per},
        {"delta", in.delta},
        {"k_star", in.k_star},
        {"ell_star", in.ell_star},
        {"delta_prime", in.delta_prime},
        {"n_days", in.n_days},
        {"d_bar", in.d_bar}}},
      {"averaging_prob", r.averaging_prob},
      {"small_noise_p", r.small_noise_p},
      {"max_k", r.max_k},
      {"suggested_info_budget", r.suggested_info_budget},
      {"expected_overlap", r.expected_overlap},
      {"breach_bound",
       {{"per_query", r.breach.per_query},
        {"per_query_relaxed", r.breach.per_query_relaxed},
        {"all_queries", r.breach.all_queries}}},
      {"overall", {{"eps_max", r.overall.eps_max}, {"delta_star", r.overall.delta_star}}},
  };
  return j.dump();
}

}  // namespace dpquery
