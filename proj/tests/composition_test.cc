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

#include "gtest/gtest.h"
#include "testing/oracles.h"

namespace dpquery {
namespace {

using ::dpquery::testing::BigFloat;
using ::dpquery::testing::BrComposeOracle;

double Oracle(double eps, int64_t t, double delta_prime) {
  return static_cast<double>(
      BrComposeOracle(BigFloat(eps), t, BigFloat(delta_prime)));
}

TEST(BoundedRangeCompositionTest, SingleMechanismWithoutSlack) {
  EXPECT_EQ(*BoundedRangeComposition(0.7, 1, 0), 0.7);
  EXPECT_EQ(*BoundedRangeComposition(0.15, 3000, 0), 0.15 * 3000);
}

TEST(BoundedRangeCompositionTest, MonthlyGuarantee) {
  const double eps = *BoundedRangeComposition(0.15, 3000, 1e-9);
  EXPECT_NEAR(eps, 34.9, 0.05);
  EXPECT_NEAR(eps / Oracle(0.15, 3000, 1e-9), 1.0, 1e-12);
}

TEST(BoundedRangeCompositionTest, MatchesHighPrecisionOracle) {
  for (double eps : {1e-9, 1e-7, 1e-5, 1e-3, 0.0099, 0.0101, 0.05, 0.15, 0.5,
                     1.0, 3.0, 10.0}) {
    for (int64_t t : {1, 2, 30, 1000, 3000, 1000000}) {
      for (double delta_prime : {1e-30, 1e-9, 1e-3, 0.5}) {
        const double got = *BoundedRangeComposition(eps, t, delta_prime);
        const double want = Oracle(eps, t, delta_prime);
        EXPECT_NEAR(got / want, 1.0, 1e-12)
            << "eps=" << eps << " t=" << t << " delta'=" << delta_prime;
      }
    }
  }
}

TEST(BoundedRangeCompositionTest, NeverWorseThanLinear) {
  for (double eps : {0.01, 0.15, 1.0, 2.0, 5.0}) {
    for (int64_t t : {1, 3, 100, 3000}) {
      for (double delta_prime : {1e-12, 1e-6, 0.1}) {
        EXPECT_LE(*BoundedRangeComposition(eps, t, delta_prime), t * eps);
      }
    }
  }
  // A single mechanism with small slack is cheapest linearly.
  EXPECT_EQ(*BoundedRangeComposition(2.0, 1, 1e-9), 2.0);
}

TEST(BoundedRangeCompositionTest, Monotone) {
  const double eps_grid[] = {0.001, 0.01, 0.1, 0.15, 0.5, 1.0, 2.0};
  const int64_t t_grid[] = {1, 10, 100, 1000, 3000};
  const double dp_grid[] = {1e-15, 1e-9, 1e-5, 1e-2};
  for (size_t i = 0; i < std::size(eps_grid); ++i) {
    for (size_t j = 0; j < std::size(t_grid); ++j) {
      for (size_t l = 0; l < std::size(dp_grid); ++l) {
        const double v =
            *BoundedRangeComposition(eps_grid[i], t_grid[j], dp_grid[l]);
        if (i > 0) {
          EXPECT_GE(v, *BoundedRangeComposition(eps_grid[i - 1], t_grid[j],
                                                dp_grid[l]));
        }
        if (j > 0) {
          EXPECT_GE(v, *BoundedRangeComposition(eps_grid[i], t_grid[j - 1],
                                                dp_grid[l]));
        }
        if (l > 0) {
          EXPECT_LE(v, *BoundedRangeComposition(eps_grid[i], t_grid[j],
                                                dp_grid[l - 1]));
        }
      }
    }
  }
}

TEST(BoundedRangeCompositionTest, SublinearForManySmallMechanisms) {
  for (double eps : {0.01, 0.1, 0.15, 0.5, 1.0}) {
    for (int64_t t : {100, 1000, 3000}) {
      for (double delta_prime : {1e-15, 1e-9, 1e-3}) {
        EXPECT_LT(*BoundedRangeComposition(eps, t, delta_prime), t * eps)
            << eps << " " << t << " " << delta_prime;
      }
    }
  }
}

TEST(BoundedRangeCompositionTest, RejectsBadInputs) {
  EXPECT_FALSE(BoundedRangeComposition(0, 1, 0).ok());
  EXPECT_FALSE(BoundedRangeComposition(-1, 1, 0).ok());
  EXPECT_FALSE(BoundedRangeComposition(INFINITY, 1, 0).ok());
  EXPECT_FALSE(BoundedRangeComposition(1, 0, 0).ok());
  EXPECT_FALSE(BoundedRangeComposition(1, 1, 1).ok());
  EXPECT_FALSE(BoundedRangeComposition(1, 1, -0.1).ok());
}

TEST(OverallGuaranteeTest, MonthlyGuarantee) {
  absl::StatusOr<OverallGuarantee> g =
      ComputeOverallGuarantee({0.15, 1e-10, 1e-9}, 3000, 30);
  ASSERT_TRUE(g.ok());
  EXPECT_NEAR(g->eps_max, 34.9, 0.05);
  EXPECT_EQ(g->delta_star, 7e-9);
}

TEST(OverallGuaranteeTest, PureCorner) {
  absl::StatusOr<OverallGuarantee> g =
      ComputeOverallGuarantee({0.15, 0, 0}, 3000, 30);
  ASSERT_TRUE(g.ok());
  EXPECT_EQ(g->eps_max, 0.15 * 3000);
  EXPECT_EQ(g->delta_star, 0);
}

TEST(OverallGuaranteeTest, RejectsBadInputs) {
  EXPECT_FALSE(ComputeOverallGuarantee({0.15, 1e-10, 1e-9}, 0, 30).ok());
  EXPECT_FALSE(ComputeOverallGuarantee({0.15, 1e-10, 1e-9}, 30, 0).ok());
  EXPECT_FALSE(ComputeOverallGuarantee({0.15, 0.1, 0.5}, 30, 30).ok());
  EXPECT_FALSE(ComputeOverallGuarantee({0.15, -1, 0}, 30, 30).ok());
}

TEST(SolvePerQueryParamsTest, SplitsDeltaAndInvertsComposition) {
  const SystemPrivacyBudget budget{34.9, 7e-9, 3000, 30};
  absl::StatusOr<PerQueryParams> p = SolvePerQueryParams(budget);
  ASSERT_TRUE(p.ok());
  EXPECT_DOUBLE_EQ(p->delta, 7e-9 / 120);
  EXPECT_DOUBLE_EQ(p->delta_prime, 3.5e-9);
  EXPECT_NEAR(2 * 30 * p->delta + p->delta_prime, 7e-9, 1e-15 * 7e-9);
  absl::StatusOr<OverallGuarantee> g =
      ComputeOverallGuarantee(*p, budget.k_star, budget.ell_star);
  ASSERT_TRUE(g.ok());
  EXPECT_NEAR(g->eps_max / budget.eps_max, 1.0, 1e-9);
  EXPECT_NEAR(g->delta_star / budget.delta_star, 1.0, 1e-9);
}

TEST(SolvePerQueryParamsTest, RoundTripsAcrossAGrid) {
  for (double eps_max : {1.0, 10.0, 34.9, 100.0}) {
    for (double delta_star : {1e-12, 7e-9, 1e-4}) {
      for (int64_t k_star : {10, 3000}) {
        const SystemPrivacyBudget budget{eps_max, delta_star, k_star, 30};
        absl::StatusOr<PerQueryParams> p = SolvePerQueryParams(budget);
        ASSERT_TRUE(p.ok()) << p.status();
        const OverallGuarantee g = *ComputeOverallGuarantee(*p, k_star, 30);
        EXPECT_NEAR(g.eps_max / eps_max, 1.0, 1e-9);
        EXPECT_NEAR(g.delta_star / delta_star, 1.0, 1e-9);
      }
    }
  }
}

TEST(SolvePerQueryParamsTest, RejectsBadInputs) {
  EXPECT_FALSE(SolvePerQueryParams({0, 7e-9, 3000, 30}).ok());
  EXPECT_FALSE(SolvePerQueryParams({34.9, 0, 3000, 30}).ok());
  EXPECT_FALSE(SolvePerQueryParams({34.9, 1, 3000, 30}).ok());
  EXPECT_FALSE(SolvePerQueryParams({34.9, 7e-9, 0, 30}).ok());
}

}  // namespace
}  // namespace dpquery
