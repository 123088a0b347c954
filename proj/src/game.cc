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

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace damavl {

JointActionCodec::JointActionCodec(std::vector<int> action_counts)
    : counts_(std::move(action_counts)), strides_(counts_.size(), 1) {
  if (counts_.empty()) throw std::invalid_argument("no agents");
  num_joint_ = 1;
  for (int i = static_cast<int>(counts_.size()) - 1; i >= 0; --i) {
    if (counts_[i] < 1) throw std::invalid_argument("empty action space");
    strides_[i] = num_joint_;
    num_joint_ *= counts_[i];
  }
}

int JointActionCodec::Encode(std::span<const int> actions) const {
  if (actions.size() != counts_.size()) {
    throw std::out_of_range("joint action has wrong arity");
  }
  int joint = 0;
  for (size_t m = 0; m < counts_.size(); ++m) {
    if (actions[m] < 0 || actions[m] >= counts_[m]) {
      throw std::out_of_range("action index out of range for agent " +
                              std::to_string(m));
    }
    joint += actions[m] * strides_[m];
  }
  return joint;
}

JointAction JointActionCodec::Decode(int joint) const {
  if (joint < 0 || joint >= num_joint_) {
    throw std::out_of_range("joint action index out of range");
  }
  JointAction actions(counts_.size());
  for (size_t m = 0; m < counts_.size(); ++m) {
    actions[m] = (joint / strides_[m]) % counts_[m];
  }
  return actions;
}

MarkovGame::MarkovGame(int num_steps, int num_states,
                       std::vector<int> action_counts, int initial_state,
                       std::vector<double> transition,
                       std::vector<double> reward)
    : num_steps_(num_steps),
      num_states_(num_states),
      action_counts_(action_counts),
      initial_state_(initial_state),
      codec_(std::move(action_counts)),
      transition_(std::move(transition)),
      reward_(std::move(reward)) {
  if (num_steps_ < 1) throw std::invalid_argument("H must be at least 1");
  if (num_states_ < 1) throw std::invalid_argument("S must be at least 1");
  if (initial_state_ < 0 || initial_state_ >= num_states_) {
    throw std::invalid_argument("initial state out of range");
  }
  const size_t rows = static_cast<size_t>(num_steps_) * num_states_ *
                      codec_.NumJointActions();
  if (transition_.size() != rows * num_states_) {
    throw std::invalid_argument("transition tensor has wrong size");
  }
  if (reward_.size() != rows * codec_.NumAgents()) {
    throw std::invalid_argument("reward tensor has wrong size");
  }
}

int MarkovGame::MaxActionCount() const {
  return *std::max_element(action_counts_.begin(), action_counts_.end());
}

void MarkovGame::CheckIndices(int h, int s, int joint) const {
  if (h < 0 || h >= num_steps_) throw std::out_of_range("step out of range");
  if (s < 0 || s >= num_states_) throw std::out_of_range("state out of range");
  if (joint < 0 || joint >= codec_.NumJointActions()) {
    throw std::out_of_range("joint action out of range");
  }
}

std::span<const double> MarkovGame::TransitionRow(int h, int s,
                                                  int joint) const {
  CheckIndices(h, s, joint);
  const size_t row =
      (static_cast<size_t>(h) * num_states_ + s) * NumJointActions() + joint;
  return {transition_.data() + row * num_states_,
          static_cast<size_t>(num_states_)};
}

double MarkovGame::Reward(int agent, int h, int s, int joint) const {
  CheckIndices(h, s, joint);
  if (agent < 0 || agent >= NumAgents()) {
    throw std::out_of_range("agent out of range");
  }
  const size_t idx =
      ((static_cast<size_t>(agent) * num_steps_ + h) * num_states_ + s) *
          NumJointActions() +
      joint;
  return reward_[idx];
}

std::string ValidationReport::ToString() const {
  if (ok()) return "ok";
  std::ostringstream out;
  for (const Violation& v : violations) {
    out << v.kind << " at (";
    for (size_t i = 0; i < v.index.size(); ++i) {
      if (i) out << ",";
      out << v.index[i];
    }
    out << ") value " << v.value << "\n";
  }
  return out.str();
}

ValidationReport ValidateGame(const MarkovGame& game) {
  ValidationReport report;
  const int num_states = game.NumStates();
  for (int h = 0; h < game.NumSteps(); ++h) {
    for (int s = 0; s < num_states; ++s) {
      for (int a = 0; a < game.NumJointActions(); ++a) {
        std::span<const double> row = game.TransitionRow(h, s, a);
        double total = 0.0;
        for (int next = 0; next < num_states; ++next) {
          if (row[next] < 0.0 || !std::isfinite(row[next])) {
            report.violations.push_back(
                {"negative transition probability", {h, s, a, next},
                 row[next]});
          }
          total += row[next];
        }
        if (!(std::fabs(total - 1.0) <= 1e-12)) {
          report.violations.push_back(
              {"transition row does not sum to 1", {h, s, a}, total});
        }
        for (int m = 0; m < game.NumAgents(); ++m) {
          const double r = game.Reward(m, h, s, a);
          if (!(r >= 0.0 && r <= 1.0)) {
            report.violations.push_back(
                {"reward out of [0,1]", {m, h, s, a}, r});
          }
        }
      }
    }
  }
  return report;
}

StepOutcome Step(const MarkovGame& game, int h, int s,
                 std::span<const int> actions, RandomStream& rng) {
  const int joint = game.Codec().Encode(actions);
  std::span<const double> row = game.TransitionRow(h, s, joint);
  StepOutcome out;
  out.rewards.resize(game.NumAgents());
  for (int m = 0; m < game.NumAgents(); ++m) {
    out.rewards[m] = game.Reward(m, h, s, joint);
  }
  out.next_state = rng.Categorical(row);
  return out;
}

double EpisodeTrace::Return(int agent) const {
  double total = 0.0;
  for (const TraceStep& step : steps) total += step.rewards[agent];
  return total;
}

MarkovGame AppendixBGame() {
  constexpr int kSteps = 2, kStates = 3, kAgents = 3;
  constexpr int kS1 = 0, kS2 = 1, kS3 = 2;
  const std::vector<int> counts(kAgents, 2);
  JointActionCodec codec(counts);
  const int num_joint = codec.NumJointActions();
  std::vector<double> transition(
      static_cast<size_t>(kSteps) * kStates * num_joint * kStates, 0.0);
  std::vector<double> reward(
      static_cast<size_t>(kAgents) * kSteps * kStates * num_joint, 0.0);

  auto coordination = [&](int joint) {
    const JointAction a = codec.Decode(joint);
    const bool all_first = std::all_of(a.begin(), a.end(),
                                       [](int x) { return x == 0; });
    const bool all_second = std::all_of(a.begin(), a.end(),
                                        [](int x) { return x == 1; });
    return all_first ? 1.0 : (all_second ? 0.5 : 0.0);
  };
  auto t_at = [&](int h, int s, int joint, int next) -> double& {
    return transition[((static_cast<size_t>(h) * kStates + s) * num_joint +
                       joint) * kStates + next];
  };
  auto r_at = [&](int m, int h, int s, int joint) -> double& {
    return reward[((static_cast<size_t>(m) * kSteps + h) * kStates + s) *
                      num_joint + joint];
  };

  for (int h = 0; h < kSteps; ++h) {
    for (int joint = 0; joint < num_joint; ++joint) {
      const double r = coordination(joint);
      for (int m = 0; m < kAgents; ++m) {
        r_at(m, h, kS1, joint) = r;
        r_at(m, h, kS3, joint) = r;
      }
      if (h == 0) {
        // Coordination states branch on the reward; s2 absorbs.
        t_at(h, kS1, joint, r > 0.0 ? kS3 : kS2) = 1.0;
        t_at(h, kS3, joint, r > 0.0 ? kS3 : kS2) = 1.0;
        t_at(h, kS2, joint, kS2) = 1.0;
      } else {
        // Successors of the last step are never used.
        for (int s = 0; s < kStates; ++s) t_at(h, s, joint, s) = 1.0;
      }
    }
  }
  return MarkovGame(kSteps, kStates, counts, kS1, std::move(transition),
                    std::move(reward));
}

MarkovGame GameFromJson(const nlohmann::json& doc) {
  for (const char* key :
       {"num_steps", "num_states", "action_counts", "transition", "reward"}) {
    if (!doc.is_object() || !doc.contains(key)) {
      throw std::invalid_argument(std::string("game json: missing ") + key);
    }
  }
  const int num_steps = doc.at("num_steps").get<int>();
  const int num_states = doc.at("num_states").get<int>();
  const std::vector<int> counts =
      doc.at("action_counts").get<std::vector<int>>();
  const int initial = doc.value("initial_state", 0);
  JointActionCodec codec(counts);
  const int num_joint = codec.NumJointActions();
  const int num_agents = codec.NumAgents();

  auto expect_size = [](const nlohmann::json& node, size_t n,
                        const char* what) {
    if (!node.is_array() || node.size() != n) {
      throw std::invalid_argument(std::string("game json: ") + what +
                                  " has wrong shape");
    }
  };
  std::vector<double> transition;
  transition.reserve(static_cast<size_t>(num_steps) * num_states * num_joint *
                     num_states);
  const nlohmann::json& t = doc.at("transition");
  expect_size(t, num_steps, "transition");
  for (const auto& th : t) {
    expect_size(th, num_states, "transition[h]");
    for (const auto& ts : th) {
      expect_size(ts, num_joint, "transition[h][s]");
      for (const auto& row : ts) {
        expect_size(row, num_states, "transition[h][s][a]");
        for (const auto& p : row) transition.push_back(p.get<double>());
      }
    }
  }
  std::vector<double> reward;
  const nlohmann::json& r = doc.at("reward");
  expect_size(r, num_agents, "reward");
  for (const auto& rm : r) {
    expect_size(rm, num_steps, "reward[m]");
    for (const auto& rh : rm) {
      expect_size(rh, num_states, "reward[m][h]");
      for (const auto& rs : rh) {
        expect_size(rs, num_joint, "reward[m][h][s]");
        for (const auto& v : rs) reward.push_back(v.get<double>());
      }
    }
  }
  return MarkovGame(num_steps, num_states, counts, initial,
                    std::move(transition), std::move(reward));
}

nlohmann::json GameToJson(const MarkovGame& game) {
  nlohmann::json doc;
  doc["num_steps"] = game.NumSteps();
  doc["num_states"] = game.NumStates();
  doc["action_counts"] = game.ActionCounts();
  doc["initial_state"] = game.InitialState();
  nlohmann::json t = nlohmann::json::array();
  for (int h = 0; h < game.NumSteps(); ++h) {
    nlohmann::json th = nlohmann::json::array();
    for (int s = 0; s < game.NumStates(); ++s) {
      nlohmann::json ts = nlohmann::json::array();
      for (int a = 0; a < game.NumJointActions(); ++a) {
        std::span<const double> row = game.TransitionRow(h, s, a);
        ts.push_back(std::vector<double>(row.begin(), row.end()));
      }
      th.push_back(std::move(ts));
    }
    t.push_back(std::move(th));
  }
  doc["transition"] = std::move(t);
  nlohmann::json r = nlohmann::json::array();
  for (int m = 0; m < game.NumAgents(); ++m) {
    nlohmann::json rm = nlohmann::json::array();
    for (int h = 0; h < game.NumSteps(); ++h) {
      nlohmann::json rh = nlohmann::json::array();
      for (int s = 0; s < game.NumStates(); ++s) {
        std::vector<double> row(game.NumJointActions());
        for (int a = 0; a < game.NumJointActions(); ++a) {
          row[a] = game.Reward(m, h, s, a);
        }
        rh.push_back(std::move(row));
      }
      rm.push_back(std::move(rh));
    }
    r.push_back(std::move(rm));
  }
  doc["reward"] = std::move(r);
  return doc;
}

}  // namespace damavl
