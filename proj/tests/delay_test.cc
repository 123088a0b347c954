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

#include "damavl/delay.h"

#include <stdexcept>

#include "gtest/gtest.h"

namespace damavl {
namespace {

TEST(DelayTest, FiniteAndInfinite) {
  EXPECT_EQ(Delay::Finite(3).Episodes(), 3);
  EXPECT_TRUE(Delay::Infinite().IsInfinite());
  EXPECT_THROW(Delay::Infinite().Episodes(), std::logic_error);
  EXPECT_EQ(*Delay::Finite(3).ArrivalEpisode(4), 7);
  EXPECT_FALSE(Delay::Infinite().ArrivalEpisode(4).has_value());
}

TEST(DelayScheduleTest, AffinePeriodicSequence) {
  const DelaySchedule s = DelaySchedule::AffinePeriodic(20, 2, 10);
  EXPECT_EQ(s.At(1).Episodes(), 18);
  EXPECT_EQ(s.At(9).Episodes(), 2);
  EXPECT_EQ(s.At(10).Episodes(), 20);
  EXPECT_EQ(s.MaxFiniteDelay(100), 20);
  EXPECT_THROW(s.At(0), std::out_of_range);
}

TEST(DelayScheduleTest, ScaledKeepsInfinity) {
  const DelaySchedule base =
      DelaySchedule::InfinitePattern(10, 5, Delay::Finite(1));
  const DelaySchedule s = DelaySchedule::Scaled(base, 4);
  EXPECT_TRUE(s.At(3).IsInfinite());
  EXPECT_EQ(s.At(7).Episodes(), 4);
  EXPECT_EQ(DelaySchedule::Scaled(DelaySchedule::Constant(5), 9).At(2).Episodes(),
            45);
}

TEST(DelayScheduleTest, InfinitePattern) {
  const DelaySchedule s =
      DelaySchedule::InfinitePattern(10, 5, Delay::Finite(0));
  for (int64_t n = 1; n <= 30; ++n) {
    EXPECT_EQ(s.At(n).IsInfinite(), n % 10 <= 5) << n;
  }
  EXPECT_TRUE(s.HasInfinite(10));
  EXPECT_EQ(s.MaxFiniteDelay(10), 0);
}

TEST(DelayScheduleTest, TableFallsBack) {
  const DelaySchedule s = DelaySchedule::ExplicitTable(
      {Delay::Finite(3), Delay::Infinite()}, Delay::Finite(1));
  EXPECT_EQ(s.At(1).Episodes(), 3);
  EXPECT_TRUE(s.At(2).IsInfinite());
  EXPECT_EQ(s.At(3).Episodes(), 1);
}

TEST(DelayScheduleTest, JsonForms) {
  using nlohmann::json;
  const DelaySchedule a = DelaySchedule::FromJson(
      json::parse(R"({"kind":"affine-periodic","c0":20,"c1":2,"period":10})"));
  EXPECT_EQ(a.At(3).Episodes(), 14);
  const DelaySchedule b = DelaySchedule::FromJson(json::parse(
      R"({"kind":"infinite-pattern","period":10,"infinite-if-mod-leq":5,"else":0})"));
  EXPECT_TRUE(b.At(10).IsInfinite());
  EXPECT_EQ(b.At(6).Episodes(), 0);
  const DelaySchedule c = DelaySchedule::FromJson(json::parse(
      R"({"kind":"scaled","factor":4,"base":{"kind":"constant","d":5}})"));
  EXPECT_EQ(c.At(1).Episodes(), 20);
  const DelaySchedule d = DelaySchedule::FromJson(json::parse(R"([1, "inf", 2])"));
  EXPECT_TRUE(d.At(2).IsInfinite());
  EXPECT_EQ(DelaySchedule::FromJson(d.ToJson()).At(3).Episodes(), 2);
  EXPECT_THROW(DelaySchedule::FromJson(json::parse(R"({"kind":"nope"})")),
               std::exception);
}

TEST(DelayModelTest, DefaultAndEntries) {
  DelayModel m(DelaySchedule::Constant(2));
  m.Set(1, 0, 2, DelaySchedule::Constant(7));
  EXPECT_EQ(m.At(0, 0, 2, 1).Episodes(), 2);
  EXPECT_EQ(m.At(1, 0, 2, 1).Episodes(), 7);
  EXPECT_EQ(m.MaxFiniteDelay(10), 7);
  const DelayModel back = DelayModel::FromJson(m.ToJson());
  EXPECT_EQ(back.At(1, 0, 2, 5).Episodes(), 7);
  EXPECT_EQ(back.At(2, 1, 0, 5).Episodes(), 2);
}

}  // namespace
}  // namespace damavl
