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

#include "damavl/game.h"

#include <cmath>
#include <stdexcept>

#include "damavl/random.h"
#include "gtest/gtest.h"

namespace damavl {
namespace {

TEST(CodecTest, RowMajorAgentZeroSlowest) {
  JointActionCodec c({2, 3});
  EXPECT_EQ(c.NumJointActions(), 6);
  const std::vector<int> a = {1, 2};
  EXPECT_EQ(c.Encode(a), 5);
  const std::vector<int> b = {1, 0};
  EXPECT_EQ(c.Encode(b), 3);
  EXPECT_EQ(c.Decode(4), (JointAction{1, 1}));
  for (int j = 0; j < 6; ++j) {
    EXPECT_EQ(c.Encode(c.Decode(j)), j);
    EXPECT_EQ(c.ActionOf(j, 0), c.Decode(j)[0]);
  }
  const std::vector<int> bad = {2, 0};
  EXPECT_THROW(c.Encode(bad), std::out_of_range);
}

TEST(ReferenceGameTest, ValidAndShaped) {
  const MarkovGame g = AppendixBGame();
  EXPECT_TRUE(ValidateGame(g).ok());
  EXPECT_EQ(g.NumAgents(), 3);
  EXPECT_EQ(g.NumStates(), 3);
  EXPECT_EQ(g.NumSteps(), 2);
  EXPECT_EQ(g.InitialState(), 0);
}

TEST(ReferenceGameTest, Rewards) {
  const MarkovGame g = AppendixBGame();
  const int all_second = g.Codec().Encode(std::vector<int>{1, 1, 1});
  const int mixed = g.Codec().Encode(std::vector<int>{0, 1, 0});
  EXPECT_DOUBLE_EQ(g.Reward(0, 0, 0, all_second), 0.5);
  EXPECT_DOUBLE_EQ(g.Reward(2, 0, 0, 0), 1.0);
  EXPECT_DOUBLE_EQ(g.Reward(1, 0, 0, mixed), 0.0);
  for (int j = 0; j < g.NumJointActions(); ++j) {
    for (int m = 0; m < 3; ++m) {
      EXPECT_EQ(g.Reward(m, 1, 1, j), 0.0);
      EXPECT_EQ(g.Reward(m, 1, 2, j), g.Reward(m, 0, 0, j));
    }
  }
}

TEST(ReferenceGameTest, Steps) {
  const MarkovGame g = AppendixBGame();
  RandomStream rng(1);
  const std::vector<int> first = {0, 0, 0};
  const StepOutcome a = Step(g, 0, 0, first, rng);
  EXPECT_EQ(a.rewards, (std::vector<double>{1, 1, 1}));
  EXPECT_EQ(a.next_state, 2);
  const std::vector<int> mixed = {0, 1, 1};
  const StepOutcome b = Step(g, 0, 0, mixed, rng);
  EXPECT_EQ(b.rewards, (std::vector<double>{0, 0, 0}));
  EXPECT_EQ(b.next_state, 1);
  EXPECT_THROW(Step(g, 2, 0, first, rng), std::out_of_range);
}

MarkovGame Tiny(double row_first, double reward) {
  return MarkovGame(1, 2, {1}, 0, {row_first, 1.0 - row_first + 0.0, 0.5, 0.5},
                    {reward, 0.0});
}

TEST(ValidateTest, ReportsViolations) {
  MarkovGame short_row(1, 2, {1}, 0, {0.5, 0.4, 0.5, 0.5}, {0.0, 0.0});
  const ValidationReport r = ValidateGame(short_row);
  ASSERT_EQ(r.violations.size(), 1u);
  EXPECT_EQ(r.violations[0].kind, "transition row does not sum to 1");
  EXPECT_EQ(r.violations[0].index, (std::vector<int>{0, 0, 0}));
  const ValidationReport big = ValidateGame(Tiny(1.0, 1.5));
  ASSERT_EQ(big.violations.size(), 1u);
  EXPECT_EQ(big.violations[0].kind, "reward out of [0,1]");
}

TEST(StepTest, EmpiricalTransitions) {
  MarkovGame g(1, 3, {1}, 0, {0.2, 0.3, 0.5, 1, 0, 0, 1, 0, 0}, {0, 0, 0});
  RandomStream rng(5);
  const int draws = 100000;
  std::vector<int> hits(3, 0);
  const std::vector<int> a = {0};
  for (int x = 0; x < draws; ++x) ++hits[Step(g, 0, 0, a, rng).next_state];
  const double p[] = {0.2, 0.3, 0.5};
  for (int s = 0; s < 3; ++s) {
    EXPECT_NEAR(hits[s] / static_cast<double>(draws), p[s],
                4 * std::sqrt(p[s] * (1 - p[s]) / draws));
  }
  MarkovGame det(1, 2, {1}, 0, {0, 1, 0, 1}, {0, 0});
  for (int x = 0; x < 100; ++x) EXPECT_EQ(Step(det, 0, 0, a, rng).next_state, 1);
}

TEST(GameJsonTest, RoundTrip) {
  const MarkovGame g = AppendixBGame();
  const MarkovGame back = GameFromJson(GameToJson(g));
  EXPECT_EQ(back.TransitionData(), g.TransitionData());
  EXPECT_EQ(back.RewardData(), g.RewardData());
  EXPECT_EQ(back.ActionCounts(), g.ActionCounts());
  auto doc = GameToJson(g);
  doc.erase("reward");
  EXPECT_THROW(GameFromJson(doc), std::invalid_argument);
}

TEST(RandomTest, DerivedStreamsDiffer) {
  EXPECT_NE(DeriveSeed(1, "a"), DeriveSeed(1, "b"));
  EXPECT_NE(DeriveSeed(1, "a"), DeriveSeed(2, "a"));
  EXPECT_EQ(DeriveSeed(7, "env"), DeriveSeed(7, "env"));
  RandomStream r(3);
  for (int x = 0; x < 1000; ++x) {
    const int64_t v = r.UniformInt(-2, 2);
    EXPECT_GE(v, -2);
    EXPECT_LE(v, 2);
  }
  const std::vector<double> w = {0.0, 1.0, 0.0};
  EXPECT_EQ(r.Categorical(w), 1);
}

}  // namespace
}  // namespace damavl
