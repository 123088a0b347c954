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

#include "damavl/learners.h"

#include <cmath>
#include <memory>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "damavl/delay.h"
#include "damavl/experiment.h"
#include "damavl/game.h"
#include "damavl/schedule_math.h"
#include "gtest/gtest.h"

namespace damavl {
namespace {

VariantConfig MakeConfig(const MarkovGame& game, Variant variant,
                         int64_t episodes, double max_delay,
                         double skip_bound) {
  VariantConfig config;
  config.variant = variant;
  config.params =
      MakeParamContext(game, episodes, 0.01, max_delay, skip_bound);
  return config;
}

class SingleVisitTest : public ::testing::Test {
 protected:
  SingleVisitTest()
      : game_(AppendixBGame()),
        config_(MakeConfig(game_, Variant::kDamavl, 100, 0.0, 1.0)),
        alphas_(std::make_shared<AlphaTable>(game_.NumSteps(), 100)),
        agent_(0, game_, delays_, config_, alphas_, 7) {}

  // Drives the cell ledger through one visit with action 0, prob 0.5,
  // reward 1, V-bar' = 2 and gamma 1, then prepares the second visit.
  PrepareResult OneTuple(CellState& cell) const {
    cell.ledger.BeginVisit(1);
    cell.ledger.RecordVisit(1, 0, 0.5, 2.0, 0.0, 1.0, 1.0, Delay::Finite(0));
    cell.ledger.Deliver(1);
    return cell.ledger.BeginVisit(2);
  }

  MarkovGame game_;
  DelayModel delays_;
  VariantConfig config_;
  std::shared_ptr<AlphaTable> alphas_;
  Agent agent_;
};

TEST_F(SingleVisitTest, ValueUpdateFoldsTupleAndClips) {
  CellState cell = agent_.Cell(0, 0);
  ASSERT_DOUBLE_EQ(cell.upper, 2.0);
  const PrepareResult prep = OneTuple(cell);
  ASSERT_EQ(prep.fed.size(), 1u);
  agent_.ValueUpdate(cell, 0, prep);
  const Bonus bonus = BonusesFinite(1, 2, 0.0, 0.0, 2, config_.params.Iota());
  // alpha_1 = 1, so the running estimate becomes r + V-bar' plus the bonus.
  EXPECT_NEAR(cell.upper_tilde, 3.0 + bonus.upper, 1e-12);
  EXPECT_DOUBLE_EQ(cell.upper, 2.0);
  EXPECT_EQ(cell.folded, 1);
  EXPECT_NEAR(cell.lower, std::max(0.0, 1.0 - bonus.lower), 1e-12);
}

TEST_F(SingleVisitTest, PolicyOptFavorsRewardedAction) {
  CellState cell = agent_.Cell(0, 0);
  const PrepareResult prep = OneTuple(cell);
  agent_.PolicyOpt(cell, prep);
  // Loss estimate (H - r - V-bar') / H / (p + gamma) = -1/3 at weight w_1.
  const double stored =
      cell.loss[0] * std::exp(cell.loss_log_scale - alphas_->LogW(1));
  EXPECT_NEAR(stored, -1.0 / 3.0, 1e-12);
  EXPECT_DOUBLE_EQ(cell.loss[1], 0.0);
  EXPECT_GT(cell.policy[0], cell.policy[1]);
  EXPECT_NEAR(cell.policy[0] + cell.policy[1], 1.0, 1e-12);
  const double eta = EtaGamma(2, 2, 0.0, config_.params.Iota());
  const double coef = eta * std::exp(alphas_->LogW(1) - alphas_->LogW(2));
  const double expected = 1.0 / (1.0 + std::exp(-coef / 3.0));
  EXPECT_NEAR(cell.policy[0], expected, 1e-12);
}

TEST_F(SingleVisitTest, EmptyFeedKeepsUniformPolicy) {
  CellState cell = agent_.Cell(0, 0);
  PrepareResult prep;
  prep.happened = 1;
  agent_.PolicyOpt(cell, prep);
  EXPECT_DOUBLE_EQ(cell.policy[0], 0.5);
  EXPECT_DOUBLE_EQ(cell.policy[1], 0.5);
}

TEST_F(SingleVisitTest, RejectsUnorderedFeed) {
  CellState cell = agent_.Cell(0, 0);
  PrepareResult prep = OneTuple(cell);
  prep.fed.push_back(prep.fed.front());
  prep.usable = 2;
  EXPECT_THROW(agent_.ValueUpdate(cell, 0, prep), std::logic_error);
}

TEST(LearnersTest, ZeroDelayVariantsLearnIdentically) {
  const MarkovGame game = AppendixBGame();
  const DelayModel zero;
  const int64_t k = 300;
  const TrainingTrace a =
      RunTraining(game, zero, MakeConfig(game, Variant::kDamavl, k, 0, 1), k,
                  3);
  const TrainingTrace b =
      RunTraining(game, zero, MakeConfig(game, Variant::kNaive, k, 0, 1), k, 3);
  const TrainingTrace c =
      RunTraining(game, zero, MakeConfig(game, Variant::kSkip, k, 0, 1), k, 3);
  EXPECT_EQ(a.visit_episodes, b.visit_episodes);
  EXPECT_EQ(a.visit_episodes, c.visit_episodes);
  for (int m = 0; m < game.NumAgents(); ++m) {
    EXPECT_EQ(a.agents[m].policies, b.agents[m].policies);
    EXPECT_EQ(a.agents[m].policies, c.agents[m].policies);
    EXPECT_EQ(a.agents[m].upper_initial, b.agents[m].upper_initial);
    EXPECT_EQ(a.agents[m].upper_initial, c.agents[m].upper_initial);
    EXPECT_EQ(a.agents[m].lower_initial, b.agents[m].lower_initial);
    EXPECT_EQ(c.agents[m].skipped,
              std::vector<int64_t>(c.agents[m].skipped.size(), 0));
  }
}

TEST(LearnersTest, SharedOrderVariantConsumesInOrder) {
  const MarkovGame game = AppendixBGame();
  const DelayModel delays = DelaySequence(1);
  const int64_t k = 2000;
  const TrainingTrace trace = RunTraining(
      game, delays,
      MakeConfig(game, Variant::kDamavl, k, delays.MaxFiniteDelay(k), k), k,
      5);
  for (int m = 0; m < game.NumAgents(); ++m) {
    const AgentTrace& agent = trace.agents[m];
    for (size_t c = 0; c < agent.consumption.size(); ++c) {
      const auto& order = agent.consumption[c];
      for (size_t j = 0; j < order.size(); ++j) {
        ASSERT_EQ(order[j], static_cast<int64_t>(j) + 1);
      }
      EXPECT_EQ(static_cast<int64_t>(order.size()),
                agent.usable_after[c].back());
    }
    EXPECT_LE(agent.max_pending, delays.MaxFiniteDelay(k));
  }
}

TEST(LearnersTest, InvariantsHoldAlongRun) {
  const MarkovGame game = AppendixBGame();
  const DelayModel delays = DelaySequence(1);
  const int64_t k = 1500;
  const TrainingTrace trace = RunTraining(
      game, delays,
      MakeConfig(game, Variant::kDamavl, k, delays.MaxFiniteDelay(k), k), k,
      11);
  for (const AgentTrace& agent : trace.agents) {
    for (const auto& row : agent.policies) {
      ASSERT_EQ(static_cast<int>(row.size()) % agent.num_actions, 0);
      for (size_t i = 0; i < row.size(); i += agent.num_actions) {
        double sum = 0.0;
        for (int a = 0; a < agent.num_actions; ++a) {
          ASSERT_GT(row[i + a], 0.0);
          sum += row[i + a];
        }
        ASSERT_NEAR(sum, 1.0, 1e-9);
      }
    }
    for (size_t e = 1; e < agent.upper_initial.size(); ++e) {
      ASSERT_LE(agent.upper_initial[e], agent.upper_initial[e - 1]);
      ASSERT_GE(agent.lower_initial[e], agent.lower_initial[e - 1]);
      ASSERT_LE(agent.lower_initial[e], agent.upper_initial[e]);
    }
    for (const auto& usable : agent.usable_after) {
      for (size_t i = 1; i < usable.size(); ++i) {
        ASSERT_GE(usable[i], usable[i - 1]);
        ASSERT_LE(usable[i], static_cast<int64_t>(i) - 1);
      }
    }
  }
}

TEST(LearnersTest, SameSeedSameTrace) {
  const MarkovGame game = AppendixBGame();
  const DelayModel delays = DelaySequence(1);
  const VariantConfig config =
      MakeConfig(game, Variant::kNaive, 400, delays.MaxFiniteDelay(400), 400);
  const nlohmann::json a = TraceToJson(RunTraining(game, delays, config, 400, 9));
  const nlohmann::json b = TraceToJson(RunTraining(game, delays, config, 400, 9));
  const nlohmann::json c =
      TraceToJson(RunTraining(game, delays, config, 400, 10));
  EXPECT_EQ(a, b);
  EXPECT_NE(a, c);
}

TEST(LearnersTest, TraceJsonRoundTrip) {
  const MarkovGame game = AppendixBGame();
  const DelayModel delays = InfinitePatternDelays();
  VariantConfig config = MakeConfig(game, Variant::kSkip, 300, 5, 300);
  const TrainingTrace trace = RunTraining(game, delays, config, 300, 2);
  const TrainingTrace back = TraceFromJson(nlohmann::json::parse(
      TraceToJson(trace).dump()));
  EXPECT_EQ(TraceToJson(back), TraceToJson(trace));
  EXPECT_EQ(back.visit_episodes, trace.visit_episodes);
  EXPECT_EQ(back.agents[0].policies, trace.agents[0].policies);
  EXPECT_EQ(back.agents[0].skipped, trace.agents[0].skipped);
}

TEST(LearnersTest, TraceFromJsonRejectsWrongVersion) {
  const MarkovGame game = AppendixBGame();
  const DelayModel zero;
  nlohmann::json doc = TraceToJson(
      RunTraining(game, zero, MakeConfig(game, Variant::kDamavl, 5, 0, 1), 5,
                  1));
  doc["version"] = 99;
  EXPECT_ANY_THROW(TraceFromJson(doc));
}

TEST(LearnersTest, SnapshotAtFirstVisitIsUniform) {
  const MarkovGame game = AppendixBGame();
  const DelayModel zero;
  const TrainingTrace trace = RunTraining(
      game, zero, MakeConfig(game, Variant::kDamavl, 50, 0, 1), 50, 4);
  const std::vector<double> pi = SnapshotPolicy(trace, 1, 0, 0, 1);
  ASSERT_EQ(pi.size(), 2u);
  EXPECT_DOUBLE_EQ(pi[0], 0.5);
  EXPECT_DOUBLE_EQ(pi[1], 0.5);
}

TEST(LearnersTest, SkipDropsInfiniteDelayRecords) {
  const MarkovGame game = AppendixBGame();
  const DelayModel delays = InfinitePatternDelays();
  const int64_t k = 3000;
  VariantConfig config = MakeConfig(game, Variant::kSkip, k, 5, k);
  const TrainingRun run = RunTrainingFull(game, delays, config, k, 8);
  const VisitLedger& ledger = run.agents[0].Cell(0, 0).ledger;
  int64_t infinite = 0;
  for (const VisitRecord& r : ledger.Records()) {
    if (!r.delay.IsInfinite()) continue;
    ++infinite;
    if (r.order + 200 < ledger.Happened()) {
      EXPECT_EQ(r.status, VisitStatus::kSkipped) << "order " << r.order;
    }
  }
  EXPECT_GT(infinite, 0);
  EXPECT_GE(ledger.SkippedCount(), infinite - 200);
  // The shared usable counter only reflects records that arrived or were
  // skipped, so every agent keeps learning.
  EXPECT_GT(ledger.Usable(), ledger.Happened() / 2);
}

TEST(LearnersTest, VariantConfigValidation) {
  const MarkovGame game = AppendixBGame();
  VariantConfig config = MakeConfig(game, Variant::kDamavl, 10, 0, 1);
  EXPECT_NO_THROW(config.Validate());
  config.skip_metric = SkipMetric::kPrevious;
  EXPECT_THROW(config.Validate(), std::invalid_argument);
  config.variant = Variant::kSkip;
  EXPECT_NO_THROW(config.Validate());
  EXPECT_EQ(VariantFromName(VariantName(Variant::kNaive)), Variant::kNaive);
  EXPECT_THROW(VariantFromName("bogus"), std::invalid_argument);
}

}  // namespace
}  // namespace damavl
