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

#include "damavl/certify.h"

#include <algorithm>
#include <stdexcept>

namespace damavl {

std::vector<double> JointProbabilities(
    const JointActionCodec& codec,
    const std::vector<std::vector<double>>& policies) {
  std::vector<double> out(codec.NumJointActions(), 1.0);
  for (int j = 0; j < codec.NumJointActions(); ++j) {
    for (int m = 0; m < codec.NumAgents(); ++m) {
      out[j] *= policies[m][codec.ActionOf(j, m)];
    }
  }
  return out;
}

ExecutionStreams ExecutionStreams::FromSeed(uint64_t seed) {
  return {DeriveStream(seed, "output/device"),
          DeriveStream(seed, "output/actions"),
          DeriveStream(seed, "output/env")};
}

CertifiedPolicy::CertifiedPolicy(std::shared_ptr<const TrainingTrace> trace)
    : trace_(std::move(trace)) {
  if (!trace_) throw std::invalid_argument("null training trace");
  shared_ = trace_->variant != "naive";
  alphas_ = std::make_shared<const AlphaTable>(trace_->num_steps,
                                               trace_->episodes + 1);
  const int cells = trace_->num_steps * trace_->num_states;
  device_after_.resize(cells);
  for (int c = 0; c < cells; ++c) {
    const size_t len = trace_->visit_episodes[c].size() + 1;
    std::vector<int64_t>& d = device_after_[c];
    d.assign(len, 0);
    for (const AgentTrace& at : trace_->agents) {
      if (at.usable_after[c].size() != len) {
        throw std::invalid_argument("trace usable counts are inconsistent");
      }
      for (size_t j = 0; j < len; ++j) {
        d[j] = std::max(d[j], at.usable_after[c][j]);
      }
    }
  }
  for (const AgentTrace& at : trace_->agents) {
    uniform_.emplace_back(at.num_actions, 1.0 / at.num_actions);
  }
}

int64_t CertifiedPolicy::VisitsUpTo(int h, int s, int64_t k) const {
  const auto& eps = trace_->visit_episodes[trace_->Cell(h, s)];
  return std::upper_bound(eps.begin(), eps.end(), k) - eps.begin();
}

int64_t CertifiedPolicy::UsableCount(int agent, int h, int s,
                                     int64_t k) const {
  return trace_->agents[agent]
      .usable_after[trace_->Cell(h, s)][VisitsUpTo(h, s, k)];
}

int64_t CertifiedPolicy::DeviceCount(int h, int s, int64_t k) const {
  return device_after_[trace_->Cell(h, s)][VisitsUpTo(h, s, k)];
}

int64_t CertifiedPolicy::ComponentVisit(int agent, int h, int s,
                                        int64_t i) const {
  if (shared_) return i;
  return trace_->agents[agent].consumption[trace_->Cell(h, s)].at(i - 1);
}

std::span<const double> CertifiedPolicy::ComponentPolicy(int agent, int h,
                                                         int s,
                                                         int64_t i) const {
  const AgentTrace& at = trace_->agents[agent];
  const int64_t v = ComponentVisit(agent, h, s, i);
  const auto& p = at.policies[trace_->Cell(h, s)];
  const size_t offset = static_cast<size_t>(v - 1) * at.num_actions;
  if (v < 1 || offset + at.num_actions > p.size()) {
    throw std::out_of_range("component outside the recorded visits");
  }
  return std::span<const double>(p).subspan(offset, at.num_actions);
}

std::vector<MixtureComponent> CertifiedPolicy::MixtureAt(int h, int s,
                                                         int64_t k) const {
  const int64_t n = DeviceCount(h, s, k);
  std::vector<MixtureComponent> out;
  if (n == 0) {
    MixtureComponent c;
    c.weight = 1.0;
    c.next_episode = k;
    c.policies = uniform_;
    out.push_back(std::move(c));
    return out;
  }
  const std::vector<double> w = AlphaWeights(n, trace_->num_steps);
  for (int64_t i = 1; i <= n; ++i) {
    MixtureComponent c;
    c.index = i;
    c.weight = w[i];
    c.next_episode = ComponentEpisode(0, h, s, i);
    for (int m = 0; m < NumAgents(); ++m) {
      auto p = ComponentPolicy(m, h, s, i);
      c.policies.emplace_back(p.begin(), p.end());
    }
    out.push_back(std::move(c));
  }
  return out;
}

EpisodeTrace CertifiedPolicy::Run(const MarkovGame& game,
                                  std::span<const int64_t> start, int h0,
                                  int s0, std::vector<RandomStream*> devices,
                                  RandomStream& actions,
                                  RandomStream& env) const {
  const int num_agents = NumAgents();
  std::vector<int64_t> ks(start.begin(), start.end());
  EpisodeTrace trace;
  trace.start_step = h0;
  int s = s0;
  JointAction joint(num_agents);
  std::vector<std::span<const double>> policy(num_agents);
  for (int h = h0; h < NumSteps(); ++h) {
    trace.device_path.push_back(ks[0]);
    if (shared_) {
      // Every agent reads its own stream; with one shared stream only the
      // first read happens.
      int64_t chosen = -1;
      const int64_t n = DeviceCount(h, s, ks[0]);
      for (int m = 0; m < num_agents; ++m) {
        if (n == 0) break;
        if (m > 0 && devices[m] == devices[0]) break;
        const int64_t i =
            alphas_->SampleComponent(n, devices[m]->Uniform());
        if (chosen >= 0 && i != chosen) {
          throw std::logic_error("agents disagree on the shared device draw");
        }
        chosen = i;
      }
      for (int m = 0; m < num_agents; ++m) {
        policy[m] = n == 0 ? UniformPolicy(m)
                           : ComponentPolicy(m, h, s, chosen);
      }
      if (n > 0) std::fill(ks.begin(), ks.end(), VisitEpisode(h, s, chosen));
    } else {
      for (int m = 0; m < num_agents; ++m) {
        const int64_t n = UsableCount(m, h, s, ks[m]);
        if (n == 0) {
          policy[m] = UniformPolicy(m);
          continue;
        }
        const int64_t i =
            alphas_->SampleComponent(n, devices[m]->Uniform());
        policy[m] = ComponentPolicy(m, h, s, i);
        ks[m] = ComponentEpisode(m, h, s, i);
      }
    }
    for (int m = 0; m < num_agents; ++m) {
      joint[m] = actions.Categorical(policy[m]);
    }
    const StepOutcome out = Step(game, h, s, joint, env);
    trace.steps.push_back({s, joint, out.rewards, out.next_state});
    s = out.next_state;
  }
  return trace;
}

EpisodeTrace CertifiedPolicy::ExecuteOutput(const MarkovGame& game,
                                            ExecutionStreams& streams) const {
  const int num_agents = NumAgents();
  if (shared_) {
    const int64_t k = streams.device.UniformInt(1, NumEpisodes());
    std::vector<int64_t> start(num_agents, k);
    std::vector<RandomStream*> devices(num_agents, &streams.device);
    return Run(game, start, 0, game.InitialState(), devices, streams.actions,
               streams.env);
  }
  std::vector<RandomStream> own;
  own.reserve(num_agents);
  for (int m = 0; m < num_agents; ++m) {
    own.emplace_back(streams.device.NextU64());
  }
  std::vector<int64_t> start(num_agents);
  std::vector<RandomStream*> devices(num_agents);
  for (int m = 0; m < num_agents; ++m) {
    start[m] = own[m].UniformInt(1, NumEpisodes());
    devices[m] = &own[m];
  }
  return Run(game, start, 0, game.InitialState(), devices, streams.actions,
             streams.env);
}

EpisodeTrace CertifiedPolicy::ExecuteSubpolicy(const MarkovGame& game,
                                               int64_t k, int h, int s,
                                               ExecutionStreams& streams) const {
  if (k < 1 || k > NumEpisodes()) throw std::out_of_range("k outside [K]");
  const int num_agents = NumAgents();
  std::vector<int64_t> start(num_agents, k);
  if (shared_) {
    std::vector<RandomStream*> devices(num_agents, &streams.device);
    return Run(game, start, h, s, devices, streams.actions, streams.env);
  }
  std::vector<RandomStream> own;
  own.reserve(num_agents);
  for (int m = 0; m < num_agents; ++m) {
    own.emplace_back(streams.device.NextU64());
  }
  std::vector<RandomStream*> devices(num_agents);
  for (int m = 0; m < num_agents; ++m) devices[m] = &own[m];
  return Run(game, start, h, s, devices, streams.actions, streams.env);
}

EpisodeTrace CertifiedPolicy::ExecuteWithAgentStreams(
    const MarkovGame& game, int64_t k, int h, int s, uint64_t device_seed,
    RandomStream& actions, RandomStream& env) const {
  const int num_agents = NumAgents();
  std::vector<RandomStream> own;
  own.reserve(num_agents);
  for (int m = 0; m < num_agents; ++m) {
    own.emplace_back(shared_ ? device_seed
                             : DeriveSeed(device_seed,
                                          "device/" + std::to_string(m)));
  }
  std::vector<RandomStream*> devices(num_agents);
  for (int m = 0; m < num_agents; ++m) devices[m] = &own[m];
  std::vector<int64_t> start(num_agents, k);
  return Run(game, start, h, s, devices, actions, env);
}

}  // namespace damavl
