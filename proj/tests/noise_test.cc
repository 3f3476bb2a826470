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

#include "dpquery/noise.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <vector>

#include "boost/math/distributions/chi_squared.hpp"
#include "gmock/gmock.h"
#include "gtest/gtest.h"
#include "testing/test_util.h"

namespace dpquery {
namespace {

using ::dpquery::testing::kTestSecret;
using ::dpquery::testing::TestSeed;
using ::dpquery::testing::TrialSeed;

// Values from tests/oracles/noise_vectors.py.
constexpr char kSeedHex[] =
    "24594543b28a48f4369cdca80b9bfc9455e4e882645a55b8a8ac2015d16d064f";
constexpr char kSelectionKeyHex[] =
    "6a64b0a83727739809530ce598863742440b36196fd51012c4a43b10ea6f1bcf";
constexpr char kThresholdKeyHex[] =
    "50fd5c8d0f1be7426cfbe2db3c20b720d7d203eac918014f1ada9adad19caae5";
constexpr double kUniform0 = 0.34985385037706834;
constexpr double kUniform9 = 0.73643453699554318;
constexpr double kLaplace0Scale2 = -0.71418520299348454;
constexpr double kGumbel0Scale1 = -0.049018501961885931;

Seed ReferenceSeed() {
  return *DeriveSeed({kTestSecret, "table=t\n", Date(2020, 1, 1)});
}

TEST(DeriveSeedTest, MatchesReferenceVector) {
  EXPECT_EQ(HexEncode(ReferenceSeed()), kSeedHex);
}

TEST(DeriveSeedTest, DeterministicAndSeparatesEveryField) {
  const NoiseKey base{kTestSecret, "q", Date(2020, 1, 1)};
  EXPECT_EQ(*DeriveSeed(base), *DeriveSeed(base));

  NoiseKey other_date = base;
  other_date.data_date = Date(2020, 1, 2);
  EXPECT_NE(*DeriveSeed(base), *DeriveSeed(other_date));

  NoiseKey other_secret = base;
  other_secret.secret = "another secret of some length...";
  EXPECT_NE(*DeriveSeed(base), *DeriveSeed(other_secret));

  NoiseKey other_query = base;
  other_query.query_canon = "q2";
  EXPECT_NE(*DeriveSeed(base), *DeriveSeed(other_query));
}

TEST(DeriveSeedTest, EmptySecretIsRejected) {
  absl::StatusOr<Seed> seed = DeriveSeed({"", "q", Date(2020, 1, 1)});
  EXPECT_EQ(seed.status().code(), absl::StatusCode::kInvalidArgument);
}

TEST(SubstreamTest, MatchesReferenceVectors) {
  const Seed seed = ReferenceSeed();
  EXPECT_EQ(HexEncode(Substream(seed, "a", NoiseRole::kSelection).key()),
            kSelectionKeyHex);
  EXPECT_EQ(HexEncode(Substream(seed, kThresholdId, NoiseRole::kThreshold).key()),
            kThresholdKeyHex);
  const NoiseStream a = Substream(seed, "a");
  EXPECT_EQ(a.Uniform(0), kUniform0);
  EXPECT_EQ(a.Uniform(9), kUniform9);
  EXPECT_DOUBLE_EQ(*SampleLaplace(a, 2.0), kLaplace0Scale2);
  EXPECT_DOUBLE_EQ(*SampleGumbel(a, 1.0), kGumbel0Scale1);
}

TEST(SubstreamTest, DeterministicPerIdAndRole) {
  const Seed seed = TestSeed("substream");
  EXPECT_EQ(Substream(seed, "a"), Substream(seed, "a"));
  EXPECT_NE(Substream(seed, "a").Uniform(0), Substream(seed, "b").Uniform(0));
  EXPECT_NE(Substream(seed, "a", NoiseRole::kSelection).Uniform(0),
            Substream(seed, "a", NoiseRole::kCount).Uniform(0));
  EXPECT_EQ(Substream(seed, kThresholdId, NoiseRole::kThreshold).Uniform(0),
            Substream(seed, kThresholdId, NoiseRole::kThreshold).Uniform(0));
}

TEST(NoiseStreamTest, BulkFillMatchesSingleDraws) {
  const NoiseStream s = Substream(TestSeed("bulk"), "x");
  std::vector<double> bulk(1300);
  s.FillUniform(5, bulk);
  for (size_t i = 0; i < bulk.size(); ++i) {
    ASSERT_EQ(bulk[i], s.Uniform(5 + i)) << i;
  }
}

TEST(NoiseStreamTest, UniformsStayInsideTheClamp) {
  const NoiseStream s = Substream(TestSeed("range"), "x");
  std::vector<double> u(100000);
  s.FillUniform(0, u);
  for (double v : u) {
    ASSERT_GE(v, kMinUniform);
    ASSERT_LE(v, kMaxUniform);
  }
  const double mean = std::accumulate(u.begin(), u.end(), 0.0) / u.size();
  EXPECT_NEAR(mean, 0.5, 0.005);
}

TEST(InverseCdfTest, KnownPoints) {
  EXPECT_EQ(LaplaceFromUniform(0.5, 1.0), 0.0);
  EXPECT_NEAR(LaplaceFromUniform(0.75, 1.0), std::log(2.0), 1e-15);
  EXPECT_NEAR(LaplaceFromUniform(0.25, 1.0), -std::log(2.0), 1e-15);
  EXPECT_NEAR(GumbelFromUniform(std::exp(-1.0), 1.0), 0.0, 1e-15);
  EXPECT_NEAR(GumbelFromUniform(0.5, 1.0), 0.36651292058166435, 1e-15);
  EXPECT_NEAR(GumbelFromUniform(0.5, 3.0), 3 * 0.36651292058166435, 1e-14);
}

TEST(InverseCdfTest, FiniteAtTheClampEdges) {
  for (double u : {kMinUniform, kMaxUniform}) {
    EXPECT_TRUE(std::isfinite(LaplaceFromUniform(u, 1.0)));
    EXPECT_TRUE(std::isfinite(GumbelFromUniform(u, 1.0)));
  }
}

TEST(SampleTest, RejectsBadScales) {
  const NoiseStream s = Substream(TestSeed("scale"), "x");
  for (double b : {0.0, -1.0, std::nan(""), double{INFINITY}}) {
    EXPECT_EQ(SampleLaplace(s, b).status().code(),
              absl::StatusCode::kInvalidArgument);
    EXPECT_EQ(SampleGumbel(s, b).status().code(),
              absl::StatusCode::kInvalidArgument);
  }
}

TEST(SampleTest, LaplaceVarianceAtScaleTwo) {
  const NoiseStream s = Substream(TestSeed("laplace-var"), "x");
  constexpr size_t kN = 1000000;
  std::vector<double> u(kN);
  s.FillUniform(0, u);
  double sum = 0, sum_sq = 0;
  for (double v : u) {
    const double x = LaplaceFromUniform(v, 2.0);
    sum += x;
    sum_sq += x * x;
  }
  const double mean = sum / kN;
  const double var = sum_sq / kN - mean * mean;
  EXPECT_NEAR(var, 8.0, 0.02 * 8.0);
  EXPECT_NEAR(mean, 0.0, 0.02);
}

TEST(SampleTest, GumbelMeanIsEulerGamma) {
  const NoiseStream s = Substream(TestSeed("gumbel-mean"), "x");
  constexpr size_t kN = 1000000;
  std::vector<double> u(kN);
  s.FillUniform(0, u);
  double sum = 0;
  for (double v : u) sum += GumbelFromUniform(v, 1.0);
  constexpr double kEulerGamma = 0.57721566490153286;
  EXPECT_NEAR(sum / kN, kEulerGamma, 0.01 * kEulerGamma);
}

// argmax_i (c_i + Gumbel(b)) is distributed as softmax(c / b).
TEST(GumbelMaxTest, MatchesSoftmax) {
  const std::vector<double> counts = {5, 3, 1};
  const Seed master = TestSeed("gumbel-max");
  constexpr int kTrials = 100000;
  std::vector<double> observed(counts.size(), 0);
  for (int t = 0; t < kTrials; ++t) {
    const KeyedNoise noise(TrialSeed(master, t));
    size_t best = 0;
    double best_v = -INFINITY;
    for (size_t i = 0; i < counts.size(); ++i) {
      const double v = counts[i] + noise.Gumbel(NoiseRole::kSelection,
                                                absl::StrCat("e", i), 1.0);
      if (v > best_v) {
        best_v = v;
        best = i;
      }
    }
    observed[best] += 1;
  }
  double z = 0;
  for (double c : counts) z += std::exp(c);
  double chi2 = 0;
  for (size_t i = 0; i < counts.size(); ++i) {
    const double expected = kTrials * std::exp(counts[i]) / z;
    chi2 += (observed[i] - expected) * (observed[i] - expected) / expected;
  }
  const boost::math::chi_squared dist(counts.size() - 1);
  EXPECT_LT(chi2, boost::math::quantile(dist, 0.99));
}

// The difference of two Gumbel(b) draws is Logistic(b).
TEST(GumbelDifferenceTest, IsLogistic) {
  const NoiseStream a = Substream(TestSeed("logistic"), "a");
  const NoiseStream b = Substream(TestSeed("logistic"), "b");
  constexpr size_t kN = 200000;
  constexpr double kScale = 2.0;
  std::vector<double> ua(kN), ub(kN), diff(kN);
  a.FillUniform(0, ua);
  b.FillUniform(0, ub);
  for (size_t i = 0; i < kN; ++i) {
    diff[i] = GumbelFromUniform(ua[i], kScale) - GumbelFromUniform(ub[i], kScale);
  }
  std::sort(diff.begin(), diff.end());
  double d_max = 0;
  for (size_t i = 0; i < kN; ++i) {
    const double cdf = 1.0 / (1.0 + std::exp(-diff[i] / kScale));
    d_max = std::max({d_max, std::abs(cdf - static_cast<double>(i) / kN),
                      std::abs(cdf - static_cast<double>(i + 1) / kN)});
  }
  // Kolmogorov-Smirnov critical value at significance 0.01.
  EXPECT_LT(d_max, 1.6276 / std::sqrt(static_cast<double>(kN)));
}

TEST(KeyedNoiseTest, IndependentOfDrawOrder) {
  const KeyedNoise noise(TestSeed("order"));
  const std::vector<std::string> ids = {"x", "y", "z", "w"};
  std::vector<double> forward, backward(ids.size());
  for (const auto& id : ids) {
    forward.push_back(noise.Gumbel(NoiseRole::kSelection, id, 1.0));
  }
  for (size_t i = ids.size(); i-- > 0;) {
    backward[i] = noise.Gumbel(NoiseRole::kSelection, ids[i], 1.0);
  }
  EXPECT_EQ(forward, backward);
}

TEST(KeyedNoiseTest, SequenceStartsWithTheSingleDraw) {
  const KeyedNoise noise(TestSeed("sequence"));
  std::vector<double> seq(10);
  noise.GumbelSequence(NoiseRole::kThresholdIndex, kThresholdId, 2.0, seq);
  EXPECT_EQ(seq[0], noise.Gumbel(NoiseRole::kThresholdIndex, kThresholdId, 2.0));
  const NoiseStream s =
      Substream(noise.seed(), kThresholdId, NoiseRole::kThresholdIndex);
  EXPECT_EQ(seq[7], GumbelFromUniform(s.Uniform(7), 2.0));
}

TEST(KeyedNoiseTest, ArgminMatchesTheFullScan) {
  std::mt19937_64 rng(11);
  int checked = 0;
  for (const size_t n : {1, 2, 63, 64, 65, 200, 901, 5000}) {
    for (const double scale : {0.5, 6.0, 50.0}) {
      for (const double spread : {0.0, 1.0, 30.0, 1e4}) {
        std::uniform_real_distribution<double> jitter(-spread, spread);
        std::vector<double> offsets(n);
        for (size_t i = 0; i < n; ++i) {
          // Rising trend plus jitter, the shape the threshold rank search sees.
          offsets[i] = 190.0 + scale * std::log(1.0 + i) + jitter(rng);
        }
        const KeyedNoise noise(TrialSeed(TestSeed("argmin"), checked++));
        EXPECT_EQ(noise.ArgminWithGumbel(NoiseRole::kThresholdIndex,
                                         kThresholdId, scale, offsets),
                  noise.NoiseSource::ArgminWithGumbel(
                      NoiseRole::kThresholdIndex, kThresholdId, scale, offsets))
            << "n=" << n << " scale=" << scale << " spread=" << spread;
      }
    }
  }
}

TEST(HexTest, RoundTrip) {
  const Seed seed = TestSeed("hex");
  const std::string hex = HexEncode(seed);
  absl::StatusOr<std::string> back = HexDecode(hex);
  ASSERT_TRUE(back.ok());
  EXPECT_EQ(*back, std::string(seed.begin(), seed.end()));
  EXPECT_EQ(*HexDecode("ABcd"), "\xab\xcd");
  EXPECT_FALSE(HexDecode("abc").ok());
  EXPECT_FALSE(HexDecode("zz").ok());
}

}  // namespace
}  // namespace dpquery
