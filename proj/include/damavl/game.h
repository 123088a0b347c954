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

#ifndef DAMAVL_GAME_H_
#define DAMAVL_GAME_H_

#include <span>
#include <string>
#include <vector>

#include "damavl/random.h"
#include "json.hpp"

namespace damavl {

// Indices are 0-based throughout: agents m in [0, M), steps h in [0, H),
// states in [0, S), actions in [0, A_m). Step H is terminal.
using JointAction = std::vector<int>;

// Row-major flattening of joint actions with agent 0 varying slowest.
class JointActionCodec {
 public:
  JointActionCodec() = default;
  explicit JointActionCodec(std::vector<int> action_counts);

  int NumJointActions() const { return num_joint_; }
  int NumAgents() const { return static_cast<int>(counts_.size()); }
  int ActionCount(int agent) const { return counts_[agent]; }

  int Encode(std::span<const int> actions) const;
  JointAction Decode(int joint) const;
  // Action of one agent inside a flattened joint action.
  int ActionOf(int joint, int agent) const {
    return (joint / strides_[agent]) % counts_[agent];
  }

 private:
  std::vector<int> counts_;
  std::vector<int> strides_;
  int num_joint_ = 0;
};

// Episodic tabular general-sum Markov game with deterministic rewards.
class MarkovGame {
 public:
  // transition is indexed [h][s][joint][s'] and reward [m][h][s][joint], both
  // dense and flattened. Only shapes are checked here; see ValidateGame.
  MarkovGame(int num_steps, int num_states, std::vector<int> action_counts,
             int initial_state, std::vector<double> transition,
             std::vector<double> reward);

  int NumSteps() const { return num_steps_; }
  int NumStates() const { return num_states_; }
  int NumAgents() const { return codec_.NumAgents(); }
  int NumJointActions() const { return codec_.NumJointActions(); }
  int ActionCount(int agent) const { return codec_.ActionCount(agent); }
  int MaxActionCount() const;
  const std::vector<int>& ActionCounts() const { return action_counts_; }
  int InitialState() const { return initial_state_; }
  const JointActionCodec& Codec() const { return codec_; }

  std::span<const double> TransitionRow(int h, int s, int joint) const;
  double Transition(int h, int s, int joint, int next) const {
    return TransitionRow(h, s, joint)[next];
  }
  double Reward(int agent, int h, int s, int joint) const;

  const std::vector<double>& TransitionData() const { return transition_; }
  const std::vector<double>& RewardData() const { return reward_; }

 private:
  void CheckIndices(int h, int s, int joint) const;

  int num_steps_;
  int num_states_;
  std::vector<int> action_counts_;
  int initial_state_;
  JointActionCodec codec_;
  std::vector<double> transition_;
  std::vector<double> reward_;
};

struct Violation {
  std::string kind;
  std::vector<int> index;
  double value = 0.0;
};

struct ValidationReport {
  std::vector<Violation> violations;
  bool ok() const { return violations.empty(); }
  std::string ToString() const;
};

ValidationReport ValidateGame(const MarkovGame& game);

struct StepOutcome {
  std::vector<double> rewards;
  int next_state = 0;
};

// Throws std::out_of_range on bad indices.
StepOutcome Step(const MarkovGame& game, int h, int s,
                 std::span<const int> actions, RandomStream& rng);

struct TraceStep {
  int state = 0;
  JointAction actions;
  std::vector<double> rewards;
  int next_state = 0;
};

struct EpisodeTrace {
  int start_step = 0;
  std::vector<TraceStep> steps;
  // Device episode in force at each executed step (output-policy rollouts).
  std::vector<int64_t> device_path;

  double Return(int agent) const;
};

// Three agents, three states, two steps. At s1 (and s3) the reward is 1 when
// every agent plays action 0, 0.5 when every agent plays action 1 and 0
// otherwise; s1 moves to s3 on a positive reward and to s2 (rewardless)
// otherwise.
MarkovGame AppendixBGame();

MarkovGame GameFromJson(const nlohmann::json& doc);
nlohmann::json GameToJson(const MarkovGame& game);

}  // namespace damavl

#endif  // DAMAVL_GAME_H_
