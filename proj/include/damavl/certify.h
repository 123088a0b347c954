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

#ifndef DAMAVL_CERTIFY_H_
#define DAMAVL_CERTIFY_H_

#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "damavl/game.h"
#include "damavl/learners.h"
#include "damavl/random.h"
#include "damavl/schedule_math.h"

namespace damavl {

// One term of the device mixture at (h, s, k).
struct MixtureComponent {
  int64_t index = 0;  // component i; 0 marks the no-data fallback
  double weight = 0.0;
  int64_t next_episode = 0;
  std::vector<std::vector<double>> policies;  // per agent
};

// Probability of every flattened joint action under a product policy.
std::vector<double> JointProbabilities(
    const JointActionCodec& codec,
    const std::vector<std::vector<double>>& policies);

// Randomness used by one rollout of an output policy.
struct ExecutionStreams {
  RandomStream device;
  RandomStream actions;
  RandomStream env;

  static ExecutionStreams FromSeed(uint64_t seed);
};

// The correlated output policy built from a training trace. With a shared
// device every agent follows the same draws; the naive variant gets one
// device per agent.
class CertifiedPolicy {
 public:
  explicit CertifiedPolicy(std::shared_ptr<const TrainingTrace> trace);

  const TrainingTrace& Trace() const { return *trace_; }
  const AlphaTable& Alphas() const { return *alphas_; }
  bool SharedDevice() const { return shared_; }
  int64_t NumEpisodes() const { return trace_->episodes; }
  int NumSteps() const { return trace_->num_steps; }
  int NumStates() const { return trace_->num_states; }
  int NumAgents() const { return trace_->num_agents; }
  int NumActions(int agent) const { return trace_->agents[agent].num_actions; }

  // Visits of (h, s) that happened in episodes <= k.
  int64_t VisitsUpTo(int h, int s, int64_t k) const;
  // n_m(h, s, k).
  int64_t UsableCount(int agent, int h, int s, int64_t k) const;
  // max_m n_m(h, s, k).
  int64_t DeviceCount(int h, int s, int64_t k) const;
  // Mixture size seen by `agent`: the shared device count, or the agent's
  // own count for per-agent devices.
  int64_t MixtureSize(int agent, int h, int s, int64_t k) const {
    return shared_ ? DeviceCount(h, s, k) : UsableCount(agent, h, s, k);
  }

  int64_t VisitEpisode(int h, int s, int64_t i) const {
    return trace_->visit_episodes[trace_->Cell(h, s)].at(i - 1);
  }
  // Visit order behind component i of agent m's mixture.
  int64_t ComponentVisit(int agent, int h, int s, int64_t i) const;
  int64_t ComponentEpisode(int agent, int h, int s, int64_t i) const {
    return VisitEpisode(h, s, ComponentVisit(agent, h, s, i));
  }
  std::span<const double> ComponentPolicy(int agent, int h, int s,
                                          int64_t i) const;
  std::span<const double> UniformPolicy(int agent) const {
    return uniform_[agent];
  }

  // Exact shared-device mixture at (h, s, k).
  std::vector<MixtureComponent> MixtureAt(int h, int s, int64_t k) const;

  // Rollout of the full output policy from step 0.
  EpisodeTrace ExecuteOutput(const MarkovGame& game,
                             ExecutionStreams& streams) const;
  // Rollout of the policy started at step h in state s with device at k.
  EpisodeTrace ExecuteSubpolicy(const MarkovGame& game, int64_t k, int h,
                                int s, ExecutionStreams& streams) const;
  // Same rollout where each agent reads its own copy of the device stream.
  // Copies share one seed for a shared device and use independent seeds for
  // per-agent devices.
  EpisodeTrace ExecuteWithAgentStreams(const MarkovGame& game, int64_t k,
                                       int h, int s, uint64_t device_seed,
                                       RandomStream& actions,
                                       RandomStream& env) const;

 private:
  EpisodeTrace Run(const MarkovGame& game, std::span<const int64_t> start,
                   int h0, int s0, std::vector<RandomStream*> devices,
                   RandomStream& actions, RandomStream& env) const;

  std::shared_ptr<const TrainingTrace> trace_;
  std::shared_ptr<const AlphaTable> alphas_;
  bool shared_;
  // max over agents of usable_after, per cell.
  std::vector<std::vector<int64_t>> device_after_;
  std::vector<std::vector<double>> uniform_;
};

}  // namespace damavl

#endif  // DAMAVL_CERTIFY_H_
