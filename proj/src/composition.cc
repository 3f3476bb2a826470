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

#include "dpquery/composition.h"

#include <cmath>
#include <limits>

#include "absl/status/status.h"
#include "absl/strings/str_cat.h"

namespace dpquery {
namespace {

// a - 1 for a = eps / (1 - e^{-eps}).
double RatioMinusOne(double eps) {
  if (eps < 1e-2) {
    // x / (1 - e^{-x}) = 1 + x/2 + x^2/12 - x^4/720 + x^6/30240 - ...
    const double e2 = eps * eps;
    return eps / 2.0 + e2 / 12.0 - e2 * e2 / 720.0 + e2 * e2 * e2 / 30240.0;
  }
  const double denom = -std::expm1(-eps);
  return (eps - denom) / denom;
}

// u - ln(1 + u), accurate for small u.
double MinusLog1pRemainder(double u) {
  if (std::abs(u) < 1e-3) {
    const double u2 = u * u;
    return u2 / 2.0 - u2 * u / 3.0 + u2 * u2 / 4.0 - u2 * u2 * u / 5.0;
  }
  return u - std::log1p(u);
}

}  // namespace

absl::StatusOr<double> BoundedRangeComposition(double eps, int64_t t,
                                               double delta_prime) {
  if (!(eps > 0) || !std::isfinite(eps)) {
    return absl::InvalidArgumentError(
        absl::StrCat("eps must be positive and finite, got ", eps));
  }
  if (t < 1) return absl::InvalidArgumentError("t must be >= 1");
  if (!(delta_prime >= 0 && delta_prime < 1)) {
    return absl::InvalidArgumentError(
        absl::StrCat("delta_prime must lie in [0, 1), got ", delta_prime));
  }
  const double n = static_cast<double>(t);
  const double linear = n * eps;
  if (delta_prime == 0) return linear;
  const double per_step = MinusLog1pRemainder(RatioMinusOne(eps));
  const double tail = eps * std::sqrt(n / 2.0 * -std::log(delta_prime));
  return std::min(linear, n * per_step + tail);
}

absl::StatusOr<OverallGuarantee> ComputeOverallGuarantee(
    const PerQueryParams& params, int64_t k_star, int64_t ell_star) {
  if (k_star < 1 || ell_star < 1) {
    return absl::InvalidArgumentError("k_star and ell_star must be >= 1");
  }
  if (!(params.delta >= 0) || !(params.delta_prime >= 0)) {
    return absl::InvalidArgumentError("deltas must be non-negative");
  }
  const double delta_star =
      2.0 * static_cast<double>(ell_star) * params.delta + params.delta_prime;
  if (!(delta_star < 1)) {
    return absl::InvalidArgumentError(
        absl::StrCat("overall delta ", delta_star, " is not below 1"));
  }
  absl::StatusOr<double> eps_max =
      BoundedRangeComposition(params.eps_per, k_star, params.delta_prime);
  if (!eps_max.ok()) return eps_max.status();
  return OverallGuarantee{*eps_max, delta_star};
}

absl::StatusOr<PerQueryParams> SolvePerQueryParams(
    const SystemPrivacyBudget& budget) {
  if (!(budget.eps_max > 0) || !std::isfinite(budget.eps_max)) {
    return absl::InvalidArgumentError("eps_max must be positive and finite");
  }
  if (!(budget.delta_star > 0 && budget.delta_star < 1)) {
    return absl::InvalidArgumentError("delta_star must lie in (0, 1)");
  }
  if (budget.k_star < 1 || budget.ell_star < 1) {
    return absl::InvalidArgumentError("k_star and ell_star must be >= 1");
  }
  PerQueryParams out;
  out.delta = budget.delta_star / (4.0 * static_cast<double>(budget.ell_star));
  out.delta_prime = budget.delta_star / 2.0;

  auto composed = [&](double eps) {
    return *BoundedRangeComposition(eps, budget.k_star, out.delta_prime);
  };
  double lo = 1e-8;
  double hi = budget.eps_max;
  if (composed(lo) > budget.eps_max) {
    return absl::OutOfRangeError(
        "eps_max is below the composed epsilon of the smallest eps_per");
  }
  for (int i = 0; composed(hi) < budget.eps_max; ++i) {
    if (i > 200) return absl::InternalError("could not bracket eps_per");
    hi *= 2.0;
  }
  for (int iter = 0; iter < 300; ++iter) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (composed(mid) < budget.eps_max) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  out.eps_per = 0.5 * (lo + hi);
  const double residual =
      std::abs(composed(out.eps_per) - budget.eps_max) / budget.eps_max;
  if (residual > 1e-10) {
    return absl::InternalError(
        absl::StrCat("eps_per bisection residual ", residual));
  }
  return out;
}

}  // namespace dpquery
