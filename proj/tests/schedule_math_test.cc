// Copyright 2026 The DAMAVL Authors.
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

#include "damavl/schedule_math.h"

#include <cmath>
#include <stdexcept>

#include "damavl/random.h"
#include "gtest/gtest.h"

namespace damavl {
namespace {

constexpr double kIota = 20.394;

TEST(AlphaTest, FirstIsOne) {
  for (int h : {1, 2, 5, 9}) EXPECT_DOUBLE_EQ(Alpha(1, h), 1.0);
}

TEST(AlphaTest, SmallValues) {
  EXPECT_DOUBLE_EQ(Alpha(2, 2), 0.75);
  EXPECT_DOUBLE_EQ(Alpha(3, 2), 0.6);
}

TEST(AlphaTest, DecreasingAndRejectsZero) {
  for (int64_t n = 1; n < 1000; ++n) EXPECT_GT(Alpha(n, 3), Alpha(n + 1, 3));
  EXPECT_THROW(Alpha(0, 2), std::domain_error);
}

TEST(AlphaWeightsTest, ThreeVisits) {
  const auto w = AlphaWeights(3, 2);
  ASSERT_EQ(w.size(), 4u);
  EXPECT_DOUBLE_EQ(w[0], 0.0);
  EXPECT_NEAR(w[1], 0.1, 1e-15);
  EXPECT_NEAR(w[2], 0.3, 1e-15);
  EXPECT_NEAR(w[3], 0.6, 1e-15);
}

TEST(AlphaWeightsTest, EmptyMixture) {
  const auto w = AlphaWeights(0, 2);
  ASSERT_EQ(w.size(), 1u);
  EXPECT_DOUBLE_EQ(w[0], 1.0);
}

TEST(AlphaWeightsTest, PartitionOfUnity) {
  for (int h : {1, 2, 5}) {
    for (int64_t n : {1, 2, 7, 100, 5000}) {
      double total = 0.0;
      for (double x : AlphaWeights(n, h)) total += x;
      EXPECT_NEAR(total, 1.0, 1e-12) << "H=" << h << " n=" << n;
    }
  }
}

// Direct product definition: alpha_i * prod_{j=i+1}^{n} (1 - alpha_j).
TEST(AlphaWeightsTest, MatchesProductDefinition) {
  for (int h : {1, 3}) {
    for (int64_t n = 1; n <= 40; ++n) {
      const auto w = AlphaWeights(n, h);
      for (int64_t i = 1; i <= n; ++i) {
        double p = Alpha(i, h);
        for (int64_t j = i + 1; j <= n; ++j) p *= 1.0 - Alpha(j, h);
        EXPECT_NEAR(w[i], p, 1e-14);
      }
    }
  }
}

TEST(WTest, SmallValues) {
  EXPECT_DOUBLE_EQ(W(1, 2), 1.0);
  EXPECT_NEAR(W(2, 2), 3.0, 1e-12);
  EXPECT_NEAR(W(3, 2), 6.0, 1e-12);
}

TEST(WTest, FactorizesMixtureWeights) {
  for (int64_t n = 1; n <= 200; ++n) {
    const auto w = AlphaWeights(n, 2);
    for (int64_t i = 1; i <= n; ++i) {
      const double f = std::exp(LogW(i, 2) + LogOneMinusAlphaProduct(n, 2));
      EXPECT_NEAR(f, w[i], 1e-10 * w[i]);
    }
  }
}

TEST(WTest, StrictlyIncreasing) {
  for (int64_t n = 1; n < 10000; ++n) EXPECT_LT(LogW(n, 2), LogW(n + 1, 2));
}

TEST(EtaGammaTest, Values) {
  EXPECT_NEAR(EtaGamma(10, 2, 6, kIota), 0.8857, 5e-5);
  EXPECT_DOUBLE_EQ(EtaGamma(10, 2, 0, kIota), std::sqrt(kIota / 20.0));
  for (int64_t n = 1; n < 100; ++n) {
    EXPECT_GE(EtaGamma(n, 2, 4, kIota), EtaGamma(n + 1, 2, 4, kIota));
  }
}

TEST(BonusTest, FiniteValues) {
  const Bonus zero = BonusesFinite(0, 2, 0, 5, 2, kIota);
  EXPECT_EQ(zero.upper, 0.0);
  EXPECT_EQ(zero.lower, 0.0);
  const Bonus b = BonusesFinite(100, 2, 0, 0, 2, kIota);
  EXPECT_NEAR(b.upper, 48.0 * std::sqrt(200.0 * kIota / 10000.0), 1e-12);
  EXPECT_NEAR(b.lower, 2.0 * std::sqrt(8.0 * kIota / 100.0), 1e-12);
  // The rounded reference figures 30.67 and 2.554.
  EXPECT_NEAR(b.upper, 30.67, 0.02);
  EXPECT_NEAR(b.lower, 2.554, 1e-3);
  const Bonus far = BonusesFinite(100000000, 2, 500000000, 5, 2, kIota);
  EXPECT_LT(far.upper, 0.5);
  EXPECT_LT(far.lower, 0.05);
}

TEST(BonusTest, SkipValues) {
  const Bonus zero = BonusesSkip(0, 10, 5, 2, 2, kIota);
  EXPECT_EQ(zero.upper, 0.0);
  EXPECT_EQ(zero.lower, 0.0);
  const Bonus no_hold = BonusesSkip(64, 0, 7, 2, 2, kIota);
  EXPECT_NEAR(no_hold.upper, 18 * 4 * std::sqrt(2.0 / 64) * kIota, 1e-9);
  const Bonus b = BonusesSkip(100, 50, 5, 2, 2, kIota);
  EXPECT_NEAR(b.upper, 900.0, 0.5);
}

TEST(IotaTest, Formula) {
  EXPECT_DOUBLE_EQ(Iota(3, 2, 3, 2, 1000, 0.01),
                   std::log(4.0 * 3 * 2 * 3 * 2 * 1000 / 0.01));
  EXPECT_THROW(Iota(3, 2, 3, 2, 1000, 1.5), std::domain_error);
}

TEST(AlphaTableTest, AgreesWithFreeFunctions) {
  AlphaTable t(3, 500);
  for (int64_t n = 1; n <= 500; ++n) {
    EXPECT_DOUBLE_EQ(t.Alpha(n), Alpha(n, 3));
    EXPECT_NEAR(t.LogW(n), LogW(n, 3), 1e-9);
    EXPECT_NEAR(t.OneMinusAlpha(n), 1.0 - Alpha(n, 3), 1e-15);
  }
}

TEST(AlphaTableTest, CdfMatchesWeights) {
  AlphaTable t(2, 300);
  for (int64_t n : {1, 2, 3, 17, 300}) {
    const auto w = AlphaWeights(n, 2);
    double cum = 0.0;
    for (int64_t i = 1; i <= n; ++i) {
      cum += w[i];
      EXPECT_NEAR(t.MixtureCdf(n, i), cum, 1e-12);
    }
  }
}

TEST(AlphaTableTest, SamplerFrequencies) {
  AlphaTable t(2, 10);
  RandomStream rng(3);
  std::vector<int> hits(4, 0);
  const int draws = 200000;
  for (int x = 0; x < draws; ++x) ++hits[t.SampleComponent(3, rng.Uniform())];
  const double expect[] = {0.0, 0.1, 0.3, 0.6};
  EXPECT_EQ(hits[0], 0);
  for (int i = 1; i <= 3; ++i) {
    const double p = expect[i];
    const double se = std::sqrt(p * (1 - p) / draws);
    EXPECT_NEAR(hits[i] / static_cast<double>(draws), p, 4 * se);
  }
}

}  // namespace
}  // namespace damavl
