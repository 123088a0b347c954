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

#ifndef DAMAVL_TESTS_TEST_UTIL_H_
#define DAMAVL_TESTS_TEST_UTIL_H_

#include <algorithm>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "damavl/game.h"
#include "damavl/learners.h"
#include "damavl/random.h"

namespace damavl::testing {

// Random game with the given shape. Transition rows and rewards are drawn
// uniformly; roughly a quarter of rows are made deterministic.
inline MarkovGame RandomGame(RandomStream& rng, int num_agents, int num_states,
                             int num_actions, int num_steps) {
  std::vector<int> counts(num_agents, num_actions);
  JointActionCodec codec(counts);
  const int joint = codec.NumJointActions();
  std::vector<double> transition;
  for (int h = 0; h < num_steps; ++h) {
    for (int s = 0; s < num_states; ++s) {
      for (int j = 0; j < joint; ++j) {
        std::vector<double> row(num_states);
        if (rng.Uniform() < 0.25) {
          row[rng.UniformInt(0, num_states - 1)] = 1.0;
        } else {
          double total = 0.0;
          for (double& x : row) total += (x = rng.Uniform() + 1e-3);
          for (double& x : row) x /= total;
        }
        transition.insert(transition.end(), row.begin(), row.end());
      }
    }
  }
  std::vector<double> reward;
  for (int m = 0; m < num_agents; ++m) {
    for (int h = 0; h < num_steps; ++h) {
      for (int s = 0; s < num_states; ++s) {
        for (int j = 0; j < joint; ++j) reward.push_back(rng.Uniform());
      }
    }
  }
  return MarkovGame(num_steps, num_states, counts, 0, transition, reward);
}

inline std::vector<double> RandomSimplex(RandomStream& rng, int n) {
  std::vector<double> p(n);
  if (rng.Uniform() < 0.2) {
    p[rng.UniformInt(0, n - 1)] = 1.0;
    return p;
  }
  double total = 0.0;
  for (double& x : p) total += (x = rng.Uniform() + 1e-3);
  for (double& x : p) x /= total;
  return p;
}

// A training trace with random but consistent bookkeeping: one visited state
// per step and episode, usable counts that only grow and never reach the
// current visit, and arbitrary stored policies. With `shared` false the
// trace describes per-agent devices and consumption happens out of order.
inline TrainingTrace RandomTrace(RandomStream& rng, const MarkovGame& game,
                                 int64_t episodes, bool shared) {
  TrainingTrace t;
  t.variant = shared ? "damavl" : "naive";
  t.episodes = episodes;
  t.num_steps = game.NumSteps();
  t.num_states = game.NumStates();
  t.num_agents = game.NumAgents();
  t.initial_state = game.InitialState();
  const int cells = t.num_steps * t.num_states;
  t.visit_episodes.assign(cells, {});
  for (int64_t k = 1; k <= episodes; ++k) {
    for (int h = 0; h < t.num_steps; ++h) {
      const int s = h == 0 ? game.InitialState()
                           : static_cast<int>(
                                 rng.UniformInt(0, t.num_states - 1));
      t.visit_episodes[t.Cell(h, s)].push_back(k);
    }
  }
  for (int m = 0; m < t.num_agents; ++m) {
    AgentTrace at;
    at.num_actions = game.ActionCount(m);
    at.usable_after.assign(cells, {0});
    at.consumption.assign(cells, {});
    at.policies.assign(cells, {});
    at.holding.assign(cells, {0});
    at.skipped.assign(cells, 0);
    for (int c = 0; c < cells; ++c) {
      const int64_t visits = static_cast<int64_t>(t.visit_episodes[c].size());
      std::vector<int64_t> waiting;
      for (int64_t i = 1; i <= visits; ++i) {
        if (i > 1) waiting.push_back(i - 1);
        const int64_t take =
            waiting.empty() ? 0 : rng.UniformInt(0, waiting.size());
        for (int64_t x = 0; x < take; ++x) {
          size_t pick = 0;
          if (!shared) pick = rng.UniformInt(0, waiting.size() - 1);
          at.consumption[c].push_back(waiting[pick]);
          waiting.erase(waiting.begin() + pick);
        }
        at.usable_after[c].push_back(at.usable_after[c].back() + take);
        at.holding[c].push_back(0);
        const auto p = RandomSimplex(rng, at.num_actions);
        at.policies[c].insert(at.policies[c].end(), p.begin(), p.end());
      }
    }
    t.agents.push_back(std::move(at));
  }
  return t;
}

inline std::shared_ptr<const TrainingTrace> Share(TrainingTrace t) {
  return std::make_shared<const TrainingTrace>(std::move(t));
}

// Trace with visits of every cell at episodes 1..K and every component
// usable from the next episode on, all storing the same fixed policies.
// With `stagger` the step-0 visits start at episode 2, so every component
// the device can reach at later steps already has a usable visit.
inline TrainingTrace FixedTrace(const MarkovGame& game, int64_t episodes,
                         const std::vector<std::vector<double>>& policy,
                         bool stagger = false) {
  TrainingTrace t;
  t.variant = "damavl";
  t.episodes = episodes;
  t.num_steps = game.NumSteps();
  t.num_states = game.NumStates();
  t.num_agents = game.NumAgents();
  const int cells = t.num_steps * t.num_states;
  t.visit_episodes.assign(cells, {});
  for (int c = 0; c < cells; ++c) {
    const int64_t first = stagger && c < t.num_states ? 2 : 1;
    for (int64_t k = first; k <= episodes; ++k) {
      t.visit_episodes[c].push_back(k);
    }
  }
  for (int m = 0; m < t.num_agents; ++m) {
    AgentTrace at;
    at.num_actions = game.ActionCount(m);
    at.usable_after.assign(cells, {0});
    at.consumption.assign(cells, {});
    at.policies.assign(cells, {});
    for (int c = 0; c < cells; ++c) {
      const int64_t visits = static_cast<int64_t>(t.visit_episodes[c].size());
      for (int64_t i = 1; i <= visits; ++i) {
        at.usable_after[c].push_back(i - 1);
        if (i > 1) at.consumption[c].push_back(i - 1);
        at.policies[c].insert(at.policies[c].end(), policy[m].begin(),
                              policy[m].end());
      }
    }
    t.agents.push_back(std::move(at));
  }
  return t;
}

// One-shot two-agent game, reward 1 to both when the actions match.
inline MarkovGame MatchingGame() {
  std::vector<double> transition(4, 1.0);
  std::vector<double> reward;
  for (int m = 0; m < 2; ++m) {
    for (int j = 0; j < 4; ++j) reward.push_back(j == 0 || j == 3 ? 1.0 : 0.0);
  }
  return MarkovGame(1, 1, {2, 2}, 0, transition, reward);
}

}  // namespace damavl::testing

#endif  // DAMAVL_TESTS_TEST_UTIL_H_
