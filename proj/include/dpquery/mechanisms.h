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

// Histogram and top-k release mechanisms.
//
//                    restricted (delta)        unrestricted
//   known domain     LaplaceKnownDomain        ExponentialKnownDomain
//   unknown domain   LaplaceUnknownDomain      GumbelUnknownDomain
//
// Every mechanism is parameterized by the per-unit bounded-range parameter
// eps_per and by tau, the most one member can change any single count. The
// unknown-domain mechanisms also take delta and only ever see the top
// d_bar + 1 counts of the histogram.
//
// All randomness comes from a NoiseSource, so the same source and input give
// the same output.

#ifndef DPQUERY_MECHANISMS_H_
#define DPQUERY_MECHANISMS_H_

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "absl/status/statusor.h"
#include "dpquery/noise.h"
#include "dpquery/store.h"

namespace dpquery {

struct PrivacyParams {
  double eps_per = 0;
  // Ignored by the known-domain mechanisms.
  double delta = 0;
};

struct NoisyEntry {
  std::string element;
  // The released count.
  double noisy_count = 0;
  // The noisy value the element was selected (and ordered) by. Equal to
  // noisy_count for the Laplace mechanisms.
  double selection_value = 0;

  friend bool operator==(const NoisyEntry&, const NoisyEntry&) = default;
};

struct DPResult {
  // Sorted by selection_value, descending.
  std::vector<NoisyEntry> entries;
  // The output ended at the noisy threshold. Every entry's selection value is
  // strictly above bot_value when that value is known.
  bool terminated_by_bot = false;
  std::optional<double> bot_value;

  friend bool operator==(const DPResult&, const DPResult&) = default;
};

// Adds Lap(2 tau / eps_per) to every count of a zero-filled known-domain
// histogram; output order equals input order. The restricted sensitivity is
// not an input here: it only changes what the query is charged.
absl::StatusOr<std::vector<NoisyEntry>> LaplaceKnownDomain(
    std::span<const HistogramEntry> full_histogram, int64_t tau,
    const PrivacyParams& params, const NoiseSource& noise);

// One-shot Gumbel top-k (equivalent to k rounds of the exponential mechanism
// with quality = count): Gumbel(tau / eps_per) selection noise, then fresh
// Lap(2 tau / eps_per) on the released counts. InvalidArgument for k > d.
absl::StatusOr<DPResult> ExponentialKnownDomain(
    std::span<const HistogramEntry> full_histogram, int64_t k, int64_t tau,
    const PrivacyParams& params, const NoiseSource& noise);

// Unique root in (0, delta) of
//   delta = x / 4 * (e^{eps_per / 2} + 1) * (3 + ln(max_changed / x)),
// to relative residual <= 1e-12.
absl::StatusOr<double> SolveDeltaHat(double delta, double eps_per,
                                     int64_t max_changed);

// Laplace selection over an unknown domain with restricted sensitivity
// `max_changed`. Returns every element whose noisy count clears the noisy
// threshold built on h_(d_bar + 1), ending with that threshold. Requires
// d_bar + 1 > max_changed.
absl::StatusOr<DPResult> LaplaceUnknownDomain(const HistogramSlice& slice,
                                              int64_t max_changed,
                                              int64_t d_bar, int64_t tau,
                                              const PrivacyParams& params,
                                              const NoiseSource& noise);

// Gumbel top-k over an unknown domain with an optimized threshold rank.
// Returns at most k entries and marks terminated_by_bot iff fewer than k
// cleared the threshold. Requires d_bar + 1 > k >= 1.
absl::StatusOr<DPResult> GumbelUnknownDomain(const HistogramSlice& slice,
                                             int64_t k, int64_t d_bar,
                                             int64_t tau,
                                             const PrivacyParams& params,
                                             const NoiseSource& noise);

// How many rows to fetch for an unknown-domain top-k.
struct FetchLimitRule {
  int64_t multiplier = 10;
  int64_t floor = 1000;
};

// Known domain: the whole domain. Unknown domain:
// d_bar = max(multiplier * k, floor).
int64_t FetchLimit(int64_t k, std::optional<int64_t> known_domain_size,
                   const FetchLimitRule& rule = {});

}  // namespace dpquery

#endif  // DPQUERY_MECHANISMS_H_
