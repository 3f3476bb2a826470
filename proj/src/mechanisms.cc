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

#include "dpquery/mechanisms.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <span>
#include <vector>

#include "absl/status/status.h"
#include "absl/strings/str_cat.h"

namespace dpquery {
namespace {

absl::Status CheckCommon(int64_t tau, const PrivacyParams& params) {
  if (!(params.eps_per > 0) || !std::isfinite(params.eps_per)) {
    return absl::InvalidArgumentError(
        absl::StrCat("eps_per must be positive and finite, got ",
                     params.eps_per));
  }
  if (tau < 1) {
    return absl::InvalidArgumentError(absl::StrCat("tau must be >= 1, got ", tau));
  }
  return absl::OkStatus();
}

// ln(1) .. ln(n), cached per thread; the threshold-rank search reuses them on
// every query.
std::span<const double> LogTable(int64_t n) {
  thread_local std::vector<double> table;
  while (static_cast<int64_t>(table.size()) < n) {
    table.push_back(std::log(static_cast<double>(table.size() + 1)));
  }
  return std::span<const double>(table.data(), static_cast<size_t>(n));
}

absl::Status CheckDelta(double delta) {
  if (!(delta > 0 && delta < 1)) {
    return absl::InvalidArgumentError(
        absl::StrCat("delta must lie in (0, 1), got ", delta));
  }
  return absl::OkStatus();
}

absl::Status CheckDomain(std::span<const HistogramEntry> histogram) {
  if (histogram.empty()) {
    return absl::FailedPreconditionError(
        "known-domain mechanism needs the full declared domain");
  }
  std::set<std::string_view> seen;
  for (const HistogramEntry& e : histogram) {
    if (e.count < 0) {
      return absl::InvalidArgumentError(
          absl::StrCat("negative count for '", e.element, "'"));
    }
    if (!seen.insert(e.element).second) {
      return absl::InvalidArgumentError(
          absl::StrCat("duplicate domain element '", e.element, "'"));
    }
  }
  return absl::OkStatus();
}

absl::Status CheckSorted(const HistogramSlice& slice) {
  for (size_t i = 1; i < slice.entries.size(); ++i) {
    if (slice.entries[i].count > slice.entries[i - 1].count) {
      return absl::InvalidArgumentError(
          "histogram slice is not sorted by count descending");
    }
  }
  if (!slice.entries.empty() && slice.entries.back().count < 0) {
    return absl::InvalidArgumentError("histogram slice has a negative count");
  }
  return absl::OkStatus();
}

// Descending by selection value; equal values fall back to element id so the
// order is total.
void SortBySelection(std::vector<NoisyEntry>& entries) {
  std::sort(entries.begin(), entries.end(),
            [](const NoisyEntry& a, const NoisyEntry& b) {
              if (a.selection_value != b.selection_value) {
                return a.selection_value > b.selection_value;
              }
              return a.element < b.element;
            });
}

}  // namespace

absl::StatusOr<std::vector<NoisyEntry>> LaplaceKnownDomain(
    std::span<const HistogramEntry> full_histogram, int64_t tau,
    const PrivacyParams& params, const NoiseSource& noise) {
  if (absl::Status s = CheckCommon(tau, params); !s.ok()) return s;
  if (absl::Status s = CheckDomain(full_histogram); !s.ok()) return s;
  const double scale = 2.0 * static_cast<double>(tau) / params.eps_per;
  std::vector<NoisyEntry> out;
  out.reserve(full_histogram.size());
  for (const HistogramEntry& e : full_histogram) {
    const double v = static_cast<double>(e.count) +
                     noise.Laplace(NoiseRole::kCount, e.element, scale);
    out.push_back({e.element, v, v});
  }
  return out;
}

absl::StatusOr<DPResult> ExponentialKnownDomain(
    std::span<const HistogramEntry> full_histogram, int64_t k, int64_t tau,
    const PrivacyParams& params, const NoiseSource& noise) {
  if (absl::Status s = CheckCommon(tau, params); !s.ok()) return s;
  if (absl::Status s = CheckDomain(full_histogram); !s.ok()) return s;
  if (k < 1 || static_cast<size_t>(k) > full_histogram.size()) {
    return absl::InvalidArgumentError(absl::StrCat(
        "k must lie in [1, d] = [1, ", full_histogram.size(), "], got ", k));
  }
  const double gumbel_scale = static_cast<double>(tau) / params.eps_per;
  const double count_scale = 2.0 * gumbel_scale;

  std::vector<NoisyEntry> noisy;
  noisy.reserve(full_histogram.size());
  for (const HistogramEntry& e : full_histogram) {
    noisy.push_back(
        {e.element, static_cast<double>(e.count),
         static_cast<double>(e.count) +
             noise.Gumbel(NoiseRole::kSelection, e.element, gumbel_scale)});
  }
  SortBySelection(noisy);
  noisy.resize(static_cast<size_t>(k));
  for (NoisyEntry& e : noisy) {
    e.noisy_count += noise.Laplace(NoiseRole::kCount, e.element, count_scale);
  }
  return DPResult{std::move(noisy), false, std::nullopt};
}

absl::StatusOr<double> SolveDeltaHat(double delta, double eps_per,
                                     int64_t max_changed) {
  if (absl::Status s = CheckDelta(delta); !s.ok()) return s;
  if (!(eps_per > 0) || !std::isfinite(eps_per)) {
    return absl::InvalidArgumentError("eps_per must be positive and finite");
  }
  if (max_changed < 1) {
    return absl::InvalidArgumentError("restricted sensitivity must be >= 1");
  }
  // Solve in y = ln(x):
  //   g(y) = ln(c) + y + ln(3 + ln(max_changed) - y) - ln(delta) = 0,
  // c = (e^{eps/2} + 1) / 4. g is increasing for y < 2 + ln(max_changed),
  // which contains (-inf, ln(delta)].
  const double log_c = std::log((std::exp(eps_per / 2.0) + 1.0) / 4.0);
  const double log_changed = std::log(static_cast<double>(max_changed));
  const double log_delta = std::log(delta);
  auto g = [&](double y) {
    return log_c + y + std::log(3.0 + log_changed - y) - log_delta;
  };
  auto dg = [&](double y) { return 1.0 - 1.0 / (3.0 + log_changed - y); };

  double hi = log_delta;
  double lo = log_delta - 1.0;
  for (int i = 0; g(lo) > 0; ++i) {
    if (i > 2000) return absl::InternalError("could not bracket delta-hat");
    lo -= 1.0;
  }
  if (!(g(hi) > 0)) return absl::InternalError("no delta-hat root in (0, delta]");

  double y = 0.5 * (lo + hi);
  for (int iter = 0; iter < 200; ++iter) {
    const double gy = g(y);
    if (gy == 0) break;
    if (gy > 0) {
      hi = y;
    } else {
      lo = y;
    }
    double next = y - gy / dg(y);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (std::abs(next - y) <= 1e-16 * std::abs(y)) {
      y = next;
      break;
    }
    y = next;
  }
  const double x = std::exp(y);
  const double rhs = x / 4.0 * (std::exp(eps_per / 2.0) + 1.0) *
                     (3.0 + std::log(static_cast<double>(max_changed) / x));
  if (!(x > 0 && x <= delta) || std::abs(rhs - delta) > 1e-12 * delta) {
    return absl::InternalError(
        absl::StrCat("delta-hat solve did not converge for delta=", delta,
                     " eps=", eps_per, " max_changed=", max_changed));
  }
  return x;
}

absl::StatusOr<DPResult> LaplaceUnknownDomain(const HistogramSlice& slice,
                                              int64_t max_changed,
                                              int64_t d_bar, int64_t tau,
                                              const PrivacyParams& params,
                                              const NoiseSource& noise) {
  if (absl::Status s = CheckCommon(tau, params); !s.ok()) return s;
  if (absl::Status s = CheckDelta(params.delta); !s.ok()) return s;
  if (absl::Status s = CheckSorted(slice); !s.ok()) return s;
  if (max_changed < 1 || d_bar < 1 || d_bar + 1 <= max_changed) {
    return absl::InvalidArgumentError(
        absl::StrCat("need d_bar + 1 > delta >= 1, got d_bar=", d_bar,
                     " delta=", max_changed));
  }
  absl::StatusOr<double> delta_hat =
      SolveDeltaHat(params.delta, params.eps_per, max_changed);
  if (!delta_hat.ok()) return delta_hat.status();

  const double t = static_cast<double>(tau);
  const double changed = static_cast<double>(max_changed);
  const double scale = 2.0 * t * changed / params.eps_per;
  const double threshold =
      static_cast<double>(slice.RankCount(static_cast<size_t>(d_bar) + 1)) +
      t * (1.0 + 2.0 * changed * std::log(changed / *delta_hat) / params.eps_per) +
      noise.Laplace(NoiseRole::kThreshold, kThresholdId, scale);

  DPResult result;
  const size_t n = std::min(slice.entries.size(), static_cast<size_t>(d_bar));
  for (size_t i = 0; i < n; ++i) {
    const HistogramEntry& e = slice.entries[i];
    const double v = static_cast<double>(e.count) +
                     noise.Laplace(NoiseRole::kSelection, e.element, scale);
    if (v > threshold) result.entries.push_back({e.element, v, v});
  }
  SortBySelection(result.entries);
  result.terminated_by_bot = true;
  result.bot_value = threshold;
  return result;
}

absl::StatusOr<DPResult> GumbelUnknownDomain(const HistogramSlice& slice,
                                             int64_t k, int64_t d_bar,
                                             int64_t tau,
                                             const PrivacyParams& params,
                                             const NoiseSource& noise) {
  if (absl::Status s = CheckCommon(tau, params); !s.ok()) return s;
  if (absl::Status s = CheckDelta(params.delta); !s.ok()) return s;
  if (absl::Status s = CheckSorted(slice); !s.ok()) return s;
  if (k < 1 || d_bar + 1 <= k) {
    return absl::InvalidArgumentError(absl::StrCat(
        "need d_bar + 1 > k >= 1, got d_bar=", d_bar, " k=", k));
  }
  const double t = static_cast<double>(tau);
  const double eps = params.eps_per;
  const double gumbel_scale = t / eps;
  const double log_delta = std::log(params.delta);

  // Threshold rank: argmin over i in [k, d_bar] of
  //   h_(i+1) + tau + tau * ln(i / delta) / eps + Gumbel(tau / eps).
  const std::span<const double> log_rank = LogTable(d_bar);
  std::vector<double> offsets(static_cast<size_t>(d_bar - k + 1));
  for (int64_t i = k; i <= d_bar; ++i) {
    offsets[static_cast<size_t>(i - k)] =
        static_cast<double>(slice.RankCount(static_cast<size_t>(i) + 1)) + t +
        t * (log_rank[static_cast<size_t>(i - 1)] - log_delta) / eps;
  }
  const int64_t k_bar =
      k + static_cast<int64_t>(noise.ArgminWithGumbel(
              NoiseRole::kThresholdIndex, kThresholdId, gumbel_scale, offsets));

  // min{k_bar, d_bar - k_bar} is 0 when k_bar = d_bar; clamp to 1.
  const int64_t spread = std::max<int64_t>(1, std::min(k_bar, d_bar - k_bar));
  const int64_t h_cut = slice.RankCount(static_cast<size_t>(k_bar) + 1);
  const double h_bot =
      static_cast<double>(h_cut) +
      t * (1.0 + (std::log(static_cast<double>(spread)) - log_delta) / eps);
  const double v_bot =
      h_bot + noise.Gumbel(NoiseRole::kThreshold, kThresholdId, gumbel_scale);

  DPResult result;
  const size_t candidates =
      std::min(slice.entries.size(), static_cast<size_t>(k_bar));
  for (size_t j = 0; j < candidates; ++j) {
    const HistogramEntry& e = slice.entries[j];
    if (e.count <= h_cut) break;  // sorted: no later rank clears h_(k_bar+1)
    const double v = static_cast<double>(e.count) +
                     noise.Gumbel(NoiseRole::kSelection, e.element, gumbel_scale);
    if (v > v_bot) {
      result.entries.push_back({e.element, static_cast<double>(e.count), v});
    }
  }
  SortBySelection(result.entries);
  if (result.entries.size() > static_cast<size_t>(k)) {
    result.entries.resize(static_cast<size_t>(k));
  }
  const double count_scale = 2.0 * t / eps;
  for (NoisyEntry& e : result.entries) {
    e.noisy_count += noise.Laplace(NoiseRole::kCount, e.element, count_scale);
  }
  result.terminated_by_bot = result.entries.size() < static_cast<size_t>(k);
  return result;
}

int64_t FetchLimit(int64_t k, std::optional<int64_t> known_domain_size,
                   const FetchLimitRule& rule) {
  if (known_domain_size.has_value()) return *known_domain_size;
  return std::max(rule.multiplier * k, rule.floor);
}

}  // namespace dpquery
