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

// Privacy accounting for adaptively composed bounded-range mechanisms.

#ifndef DPQUERY_COMPOSITION_H_
#define DPQUERY_COMPOSITION_H_

#include <cstdint>

#include "absl/status/statusor.h"

namespace dpquery {

// Overall epsilon of t adaptively chosen eps-BR mechanisms at slack
// delta_prime:
//
//   min( t*eps,
//        t*(a - 1 - ln a) + eps*sqrt(t/2 * ln(1/delta_prime)) ),
//   a = eps / (1 - e^{-eps}).
//
// delta_prime = 0 gives t*eps. Stable for tiny eps. InvalidArgument unless
// eps > 0, t >= 1 and 0 <= delta_prime < 1.
absl::StatusOr<double> BoundedRangeComposition(double eps, int64_t t,
                                               double delta_prime);

struct SystemPrivacyBudget {
  double eps_max = 0;
  double delta_star = 0;
  int64_t k_star = 0;    // information budget
  int64_t ell_star = 0;  // call budget
};

struct PerQueryParams {
  double eps_per = 0;
  double delta = 0;
  double delta_prime = 0;
};

struct OverallGuarantee {
  double eps_max = 0;
  double delta_star = 0;
};

// delta_star = 2 * ell_star * delta + delta_prime,
// eps_max = BoundedRangeComposition(eps_per, k_star, delta_prime).
absl::StatusOr<OverallGuarantee> ComputeOverallGuarantee(
    const PerQueryParams& params, int64_t k_star, int64_t ell_star);

// Splits delta_star as delta = delta_star / (4 ell_star),
// delta_prime = delta_star / 2, then bisects for the eps_per whose composed
// epsilon equals eps_max.
absl::StatusOr<PerQueryParams> SolvePerQueryParams(
    const SystemPrivacyBudget& budget);

}  // namespace dpquery

#endif  // DPQUERY_COMPOSITION_H_
