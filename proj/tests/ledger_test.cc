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

#include "damavl/ledger.h"

#include <vector>

#include "damavl/random.h"
#include "gtest/gtest.h"

namespace damavl {
namespace {

std::vector<int64_t> Orders(const PrepareResult& r) {
  std::vector<int64_t> out;
  for (const auto& f : r.fed) out.push_back(f.order);
  return out;
}

// One visit per episode with the given delays; returns the preparations.
std::vector<PrepareResult> Drive(VisitLedger& ledger,
                                 const std::vector<Delay>& delays,
                                 int64_t episodes) {
  std::vector<PrepareResult> preps;
  for (int64_t k = 1; k <= episodes; ++k) {
    preps.push_back(ledger.BeginVisit(k));
    if (k <= static_cast<int64_t>(delays.size())) {
      ledger.RecordVisit(k, 0, 0.5, 1.0, 0.0, 0.3, 1.0, delays[k - 1]);
    } else {
      ledger.RecordVisit(k, 0, 0.5, 1.0, 0.0, 0.3, 1.0, Delay::Finite(0));
    }
    ledger.Deliver(k);
  }
  return preps;
}

TEST(LedgerTest, FirstOrdersCount) {
  VisitLedger l;
  l.BeginVisit(1);
  EXPECT_EQ(l.RecordVisit(1, 0, 1.0, 0, 0, 0.1, 0, Delay::Finite(0)), 1);
  l.BeginVisit(2);
  l.RecordVisit(2, 0, 1.0, 0, 0, 0.1, 0, Delay::Finite(0));
  l.BeginVisit(3);
  l.RecordVisit(3, 0, 1.0, 0, 0, 0.1, 0, Delay::Finite(0));
  l.BeginVisit(4);
  EXPECT_EQ(l.RecordVisit(4, 0, 1.0, 0, 0, 0.1, 0, Delay::Finite(0)), 4);
  EXPECT_EQ(l.Happened(), 4);
}

TEST(LedgerTest, BlockedThenReleased) {
  VisitLedger l;
  const auto preps = Drive(
      l, {Delay::Finite(3), Delay::Finite(0), Delay::Finite(0), Delay::Finite(0)},
      5);
  EXPECT_TRUE(preps[3].fed.empty());
  EXPECT_EQ(l.EarliestAt(4), 1);
  EXPECT_EQ(l.HoldingAt(4), 6);
  EXPECT_EQ(Orders(preps[4]), (std::vector<int64_t>{1, 2, 3, 4}));
  EXPECT_EQ(preps[4].usable, 4);
}

TEST(LedgerTest, ZeroDelayFeedsPreviousVisit) {
  VisitLedger l;
  const auto preps = Drive(l, {}, 20);
  for (int64_t k = 2; k <= 20; ++k) {
    EXPECT_EQ(Orders(preps[k - 1]), (std::vector<int64_t>{k - 1}));
    EXPECT_EQ(preps[k - 1].usable, k - 1);
    EXPECT_EQ(l.HoldingAt(k), 0);
  }
}

TEST(LedgerTest, ConstantDelayBoundsHolding) {
  VisitLedger l;
  std::vector<Delay> d(200, Delay::Finite(4));
  Drive(l, d, 200);
  for (int64_t n = 1; n <= 200; ++n) EXPECT_LE(l.HoldingAt(n), n * 4);
  EXPECT_LE(l.LastPending(), 4);
}

TEST(LedgerTest, DeliveryTiming) {
  VisitLedger l;
  l.BeginVisit(1);
  l.RecordVisit(1, 0, 1.0, 0, 0, 0.1, 0.25, Delay::Finite(3));
  for (int64_t k = 1; k <= 3; ++k) l.Deliver(k);
  EXPECT_EQ(l.Record(1).status, VisitStatus::kUnreceived);
  l.Deliver(4);
  EXPECT_EQ(l.Record(1).status, VisitStatus::kReceivedUnusable);
  const PrepareResult p = l.BeginVisit(5);
  ASSERT_EQ(p.fed.size(), 1u);
  EXPECT_DOUBLE_EQ(p.fed[0].reward, 0.25);
}

TEST(LedgerTest, InfiniteNeverArrives) {
  VisitLedger l;
  const auto preps = Drive(l, {Delay::Infinite()}, 50);
  EXPECT_EQ(l.Record(1).status, VisitStatus::kUnreceived);
  EXPECT_EQ(preps.back().usable, 0);
}

TEST(LedgerTest, SkipAtThirdVisit) {
  LedgerOptions o;
  o.mode = LedgerMode::kSkip;
  o.skipped_upper = 2.0;
  VisitLedger l(o);
  const auto preps = Drive(l, {Delay::Infinite()}, 3);
  EXPECT_TRUE(preps[1].newly_skipped.empty());
  EXPECT_EQ(l.HoldingAt(2), 1);
  EXPECT_EQ(preps[2].newly_skipped, (std::vector<int64_t>{1}));
  EXPECT_EQ(l.Record(1).phi, 3);
  EXPECT_EQ(l.Record(1).status, VisitStatus::kSkipped);
  // The skip releases visit 2 in the same preparation.
  EXPECT_EQ(Orders(preps[2]), (std::vector<int64_t>{1, 2}));
  EXPECT_TRUE(preps[2].fed[0].skipped);
  EXPECT_DOUBLE_EQ(preps[2].fed[0].upper_next, 2.0);
  EXPECT_DOUBLE_EQ(preps[2].fed[0].lower_next, 0.0);
  EXPECT_DOUBLE_EQ(preps[2].fed[0].reward, 0.0);
}

TEST(LedgerTest, SkipIgnoresLateArrival) {
  LedgerOptions o;
  o.mode = LedgerMode::kSkip;
  VisitLedger l(o);
  Drive(l, {Delay::Finite(6)}, 10);
  EXPECT_EQ(l.Record(1).status, VisitStatus::kSkipped);
  EXPECT_TRUE(l.Record(1).arrived_after_skip);
  const int64_t frozen = l.Record(1).phi;
  Drive(l, {}, 0);
  EXPECT_EQ(l.Record(1).phi, frozen);
}

TEST(LedgerTest, ZeroDelaySkipsNothing) {
  LedgerOptions o;
  o.mode = LedgerMode::kSkip;
  VisitLedger l(o);
  Drive(l, {}, 100);
  EXPECT_EQ(l.SkippedCount(), 0);
}

TEST(LedgerTest, NaiveFeedsInArrivalOrder) {
  LedgerOptions o;
  o.mode = LedgerMode::kNaive;
  VisitLedger l(o);
  const auto preps = Drive(
      l, {Delay::Finite(2), Delay::Finite(0), Delay::Finite(0)}, 4);
  EXPECT_EQ(Orders(preps[2]), (std::vector<int64_t>{2}));
  EXPECT_EQ(Orders(preps[3]), (std::vector<int64_t>{1, 3}));
}

TEST(LedgerTest, RejectsOutOfOrderUse) {
  VisitLedger l;
  l.BeginVisit(3);
  EXPECT_THROW(l.BeginVisit(4), std::logic_error);
}

TEST(LedgerOracleTest, SpecExamples) {
  const std::vector<Delay> d = {Delay::Finite(3), Delay::Finite(0),
                                Delay::Finite(0), Delay::Finite(0)};
  const std::vector<int64_t> k = {1, 2, 3, 4};
  EXPECT_EQ(BruteForceEarliest(d, k, 4), 1);
  EXPECT_EQ(BruteForceHolding(d, k, 4), 6);
  EXPECT_EQ(BruteForceHolding(d, k, 4, {1}), 0);
  const std::vector<Delay> none(4, Delay::Finite(0));
  EXPECT_EQ(BruteForceEarliest(none, k, 4), 4);
}

TEST(LedgerOracleTest, FuzzedIncrementalMatchesDefinitions) {
  RandomStream rng(77);
  for (int rep = 0; rep < 100; ++rep) {
    const int64_t episodes = 120;
    std::vector<VisitLedger> ledgers(3);
    std::vector<std::vector<Delay>> delays(3);
    std::vector<std::vector<int64_t>> when(3);
    for (int64_t k = 1; k <= episodes; ++k) {
      const int s = static_cast<int>(rng.UniformInt(0, 2));
      const Delay d = Delay::Finite(rng.UniformInt(0, 30));
      ledgers[s].BeginVisit(k);
      ledgers[s].RecordVisit(k, 0, 1.0, 0, 0, 0.1, 0, d);
      delays[s].push_back(d);
      when[s].push_back(k);
      for (auto& l : ledgers) l.Deliver(k);
    }
    for (int s = 0; s < 3; ++s) {
      int64_t t = 0;
      for (int64_t i = 1; i <= static_cast<int64_t>(when[s].size()); ++i) {
        const int64_t e = BruteForceEarliest(delays[s], when[s], i);
        ASSERT_EQ(ledgers[s].EarliestAt(i), e);
        t += i - e;
        ASSERT_EQ(ledgers[s].HoldingAt(i), t);
      }
    }
  }
}

TEST(LedgerOracleTest, RealizedSkipBound) {
  const std::vector<int64_t> k = {1, 2, 3, 4, 5};
  EXPECT_EQ(RealizedSkipBound(std::vector<Delay>(5, Delay::Finite(0)), k), 1);
  std::vector<Delay> d(5, Delay::Finite(0));
  d[0] = Delay::Infinite();
  d[2] = Delay::Finite(1);
  EXPECT_EQ(RealizedSkipBound(d, k), 3);
}

TEST(SkipAuditTest, FlagsViolations) {
  SkipAuditCounters c;
  SkipAuditPoint ok{4.0, 3, 2, 1};
  AccumulateSkipAudit(ok, 1.0, c);
  EXPECT_EQ(c.checks, 1);
  EXPECT_EQ(c.phi_violations + c.blocking_violations + c.skipped_violations, 0);
  SkipAuditPoint bad{4.0, 100, 100, 100};
  AccumulateSkipAudit(bad, 1.0, c);
  EXPECT_EQ(c.phi_violations, 1);
  EXPECT_EQ(c.blocking_violations, 1);
  EXPECT_EQ(c.skipped_violations, 1);
}

}  // namespace
}  // namespace damavl
