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
#include <vector>

#include "boost/math/distributions/normal.hpp"
#include "boost/multiprecision/cpp_int.hpp"
#include "gmock/gmock.h"
#include "gtest/gtest.h"
#include "dpquery/noise.h"
#include "testing/test_util.h"

namespace dpquery {
namespace {

using ::dpquery::testing::TestSeed;
using ::testing::HasSubstr;

TEST(NormalCdfTest, MatchesReference) {
  const boost::math::normal standard;
  for (double x : {-8.0, -3.0, -1.0, -0.1, 0.0, 0.0459, 0.5, 2.0, 6.0}) {
    EXPECT_NEAR(NormalCdf(x), boost::math::cdf(standard, x), 1e-15) << x;
  }
}

TEST(AveragingAttackTest, MonthlyValue) {
  const double p = *AveragingAttackProbability(0.15, 30);
  EXPECT_GE(p, 0.110);
  EXPECT_LE(p, 0.120);
  EXPECT_NEAR(p, 2 * NormalCdf(0.15 * std::sqrt(30.0) / (4 * std::sqrt(2.0))) - 1,
              1e-15);
}

TEST(AveragingAttackTest, VanishesWithNoiseAndIsMonotone) {
  EXPECT_LT(*AveragingAttackProbability(1e-12, 30), 1e-12);
  EXPECT_LT(*AveragingAttackProbability(0.1, 30), *AveragingAttackProbability(0.2, 30));
  EXPECT_LT(*AveragingAttackProbability(0.15, 10), *AveragingAttackProbability(0.15, 30));
  EXPECT_FALSE(AveragingAttackProbability(0, 30).ok());
  EXPECT_FALSE(AveragingAttackProbability(0.15, 0).ok());
}

// Mean of 30 Laplace(2 / eps) draws within 1/2 of the truth.
TEST(AveragingAttackTest, MonteCarlo) {
  constexpr double kEps = 0.15;
  constexpr int kDays = 30;
  constexpr int kTrials = 1000000;
  const NoiseStream stream = Substream(TestSeed("averaging"), "x");
  std::vector<double> u(kDays * 10000);
  int hits = 0;
  for (int block = 0; block < kTrials / 10000; ++block) {
    stream.FillUniform(static_cast<uint64_t>(block) * u.size(), u);
    for (int t = 0; t < 10000; ++t) {
      double sum = 0;
      for (int d = 0; d < kDays; ++d) {
        sum += LaplaceFromUniform(u[t * kDays + d], 2.0 / kEps);
      }
      hits += std::abs(sum / kDays) < 0.5;
    }
  }
  EXPECT_NEAR(static_cast<double>(hits) / kTrials,
              *AveragingAttackProbability(kEps, kDays), 0.01);
}

TEST(SmallNoiseTest, Constants) {
  const double p = *SmallNoiseProbability(0.15);
  EXPECT_NEAR(p, 0.0368, 0.0001);
  EXPECT_NEAR(p, 1 - std::exp(-0.15 / 4), 1e-15);
  EXPECT_EQ(*MaxDifferencingK(p), 738);
  EXPECT_EQ(*MaxDifferencingK(0.0368), 738);
  EXPECT_EQ(SuggestedInfoBudget(738), 2954);
  EXPECT_LT(ExpectedOverlap(738, p), 1.0);
  EXPECT_GT(ExpectedOverlap(739, p), 1.0);
  EXPECT_EQ(SmallNoiseDraws(738, p), 27);
  EXPECT_LT(*SmallNoiseProbability(1e-12), 1e-12);
  EXPECT_FALSE(SmallNoiseProbability(0).ok());
  EXPECT_FALSE(MaxDifferencingK(0).ok());
}

TEST(SmallNoiseTest, MonteCarlo) {
  constexpr double kEps = 0.15;
  constexpr size_t kDraws = 10000000;
  const NoiseStream stream = Substream(TestSeed("small-noise"), "x");
  std::vector<double> u(1 << 20);
  size_t hits = 0;
  for (size_t first = 0; first < kDraws; first += u.size()) {
    const size_t n = std::min(u.size(), kDraws - first);
    stream.FillUniform(first, std::span<double>(u.data(), n));
    for (size_t i = 0; i < n; ++i) {
      hits += std::abs(LaplaceFromUniform(u[i], 2.0 / kEps)) < 0.5;
    }
  }
  const double p = *SmallNoiseProbability(kEps);
  const double sigma = std::sqrt(p * (1 - p) / kDraws);
  EXPECT_NEAR(static_cast<double>(hits) / kDraws, p, 3 * sigma);
}

boost::multiprecision::cpp_int Choose(int64_t n, int64_t r) {
  boost::multiprecision::cpp_int out = 1;
  for (int64_t i = 1; i <= r; ++i) {
    out *= n - r + i;
    out /= i;
  }
  return out;
}

TEST(HypergeometricTest, MatchesExactRationals) {
  using boost::multiprecision::cpp_rational;
  for (auto [k, m] : std::vector<std::pair<int64_t, int64_t>>{
           {20, 5}, {738, 27}, {100, 60}}) {
    double total = 0, mean = 0;
    for (int64_t s = 0; s <= m; ++s) {
      const double got = *HypergeometricPmf(k, m, s);
      const double want =
          m - s > k - m
              ? 0.0
              : static_cast<double>(cpp_rational(Choose(m, s) * Choose(k - m, m - s),
                                                 Choose(k, m)));
      EXPECT_NEAR(got, want, 1e-11 * std::max(want, 1e-300) + 1e-300)
          << k << " " << m << " " << s;
      total += got;
      mean += s * got;
    }
    EXPECT_NEAR(total, 1.0, 1e-12);
    EXPECT_NEAR(mean, static_cast<double>(m * m) / k, 1e-10);
  }
  EXPECT_FALSE(HypergeometricPmf(5, 6, 1).ok());
  EXPECT_FALSE(HypergeometricPmf(5, 2, 3).ok());
}

TEST(ThresholdBreachTest, MonthlyBounds) {
  const BreachBounds b = *ThresholdBreachBound(0.15, 1e-10, 30, 1000);
  EXPECT_GE(b.all_queries, 2.5e-9);
  EXPECT_LE(b.all_queries, 2.7e-9);
  EXPECT_DOUBLE_EQ(b.per_query_relaxed, 1e-10 * std::exp(-0.15));
  EXPECT_LE(b.per_query, b.per_query_relaxed);
  EXPECT_NEAR(b.per_query / b.per_query_relaxed, 1.0, 1e-12);
  // Close to one in 400 million.
  EXPECT_NEAR(1 / b.all_queries, 3.87e8, 0.01e8);
}

TEST(ThresholdBreachTest, ZeroDeltaAndMonotone) {
  const BreachBounds zero = *ThresholdBreachBound(0.15, 0, 30, 1000);
  EXPECT_EQ(zero.per_query, 0);
  EXPECT_EQ(zero.all_queries, 0);
  EXPECT_LT(ThresholdBreachBound(0.15, 1e-10, 30, 1000)->all_queries,
            ThresholdBreachBound(0.15, 1e-9, 30, 1000)->all_queries);
  EXPECT_LT(ThresholdBreachBound(0.15, 1e-10, 30, 1000)->all_queries,
            ThresholdBreachBound(0.15, 1e-10, 31, 1000)->all_queries);
  EXPECT_FALSE(ThresholdBreachBound(0.15, 1, 30, 1000).ok());
  EXPECT_FALSE(ThresholdBreachBound(0.15, 1e-10, 0, 1000).ok());
}

TEST(FullReportTest, MonthlyRow) {
  const AttackReport r = *FullReport({});
  EXPECT_NEAR(r.overall.eps_max, 34.9, 0.05);
  EXPECT_EQ(r.overall.delta_star, 7e-9);
  EXPECT_EQ(r.max_k, 738);
  EXPECT_EQ(r.suggested_info_budget, 2954);
  EXPECT_EQ(FormatReportTable(r), FormatReportTable(*FullReport({})));
  EXPECT_EQ(FormatReportJson(r), FormatReportJson(*FullReport({})));
  EXPECT_THAT(FormatReportTable(r), HasSubstr("max differencing k"));
  EXPECT_THAT(FormatReportJson(r), HasSubstr("\"max_k\":738"));

  CalibrationInputs halved;
  halved.eps_per = 0.075;
  EXPECT_LT(FullReport(halved)->overall.eps_max, r.overall.eps_max);
}

}  // namespace
}  // namespace dpquery
