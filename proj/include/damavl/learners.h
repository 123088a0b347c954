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

#ifndef DAMAVL_LEARNERS_H_
#define DAMAVL_LEARNERS_H_

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "damavl/delay.h"
#include "damavl/game.h"
#include "damavl/ledger.h"
#include "damavl/random.h"
#include "damavl/schedule_math.h"
#include "json.hpp"

namespace damavl {

enum class Variant { kDamavl, kNaive, kSkip };

std::string VariantName(Variant v);
Variant VariantFromName(const std::string& name);
std::string SkipMetricName(SkipMetric m);
SkipMetric SkipMetricFromName(const std::string& name);

struct VariantConfig {
  Variant variant = Variant::kDamavl;
  // Only meaningful for the skip variant; defaults apply when unset.
  std::optional<SkipMetric> skip_metric;
  std::optional<ThresholdTiming> threshold_timing;
  ParamContext params;

  SkipMetric Metric() const { return skip_metric.value_or(SkipMetric::kPhi); }
  ThresholdTiming Timing() const {
    return threshold_timing.value_or(ThresholdTiming::kPostUpdate);
  }
  // Throws std::invalid_argument on inconsistent settings.
  void Validate() const;
};

// Parameter context for a game and planned horizon.
ParamContext MakeParamContext(const MarkovGame& game, int64_t episodes,
                              double delta, double max_delay,
                              double skip_bound);

// Learning state of one agent at one (step, state) cell.
struct CellState {
  double upper = 0.0;
  double lower = 0.0;
  double upper_tilde = 0.0;
  double lower_tilde = 0.0;
  double upper_bonus = 0.0;  // bonus currently folded into upper_tilde
  double lower_bonus = 0.0;
  // Cumulative weighted loss, stored as loss[a] * exp(loss_log_scale).
  std::vector<double> loss;
  double loss_log_scale = 0.0;
  std::vector<double> policy;
  int64_t folded = 0;  // records folded so far (local counter)
  VisitLedger ledger;
};

// One decentralized learner. It sees the visited states, its own actions and
// its own delayed rewards, nothing else.
class Agent {
 public:
  Agent(int id, const MarkovGame& game, const DelayModel& delays,
        const VariantConfig& config,
        std::shared_ptr<const AlphaTable> alphas, uint64_t seed);

  int id() const { return id_; }

  // Preparation and learning for the visit of (h, s) in `episode`. Returns
  // the policy to sample from.
  const std::vector<double>& Prepare(int64_t episode, int h, int s);
  int SampleAction(int h, int s);

  // End-of-episode bookkeeping. states has H + 1 entries (the last one is
  // the post-terminal state and is ignored); actions and rewards have H.
  void EndEpisode(int64_t episode, std::span<const int> states,
                  std::span<const int> actions, std::span<const double> rewards);

  const CellState& Cell(int h, int s) const { return cells_[h * num_states_ + s]; }
  double Upper(int h, int s) const;
  double Lower(int h, int s) const;

  // The core updates, exposed for direct testing.
  void ValueUpdate(CellState& cell, int h, const PrepareResult& prep) const;
  void PolicyOpt(CellState& cell, const PrepareResult& prep) const;

  // Policy sampled at every visit of cell (h, s): visits x A_m, row-major.
  const std::vector<double>& PolicyHistory(int h, int s) const {
    return policy_history_[h * num_states_ + s];
  }
  int NumActions() const { return num_actions_; }

 private:
  CellState& MutableCell(int h, int s) { return cells_[h * num_states_ + s]; }

  int id_;
  int num_steps_;
  int num_states_;
  int num_actions_;
  const DelayModel* delays_;
  VariantConfig config_;
  double iota_;
  std::shared_ptr<const AlphaTable> alphas_;
  RandomStream action_rng_;
  std::vector<CellState> cells_;
  std::vector<double> pending_gamma_;  // per step, for the current episode
  std::vector<std::vector<double>> policy_history_;
};

// Everything certification and evaluation need from a training run of one
// agent. Cells are indexed h * S + s.
struct AgentTrace {
  int num_actions = 0;
  // usable_after[c][i]: n right after the preparation of visit i (index 0
  // holds 0).
  std::vector<std::vector<int64_t>> usable_after;
  // Orders in the sequence they were fed to the subroutines.
  std::vector<std::vector<int64_t>> consumption;
  // Policy sampled at each visit, visits x num_actions.
  std::vector<std::vector<double>> policies;
  // Holding counter history T(0..n') per cell.
  std::vector<std::vector<int64_t>> holding;
  std::vector<int64_t> skipped;  // |O| per cell
  // V-bar and V-underbar at (0, s_1) after every episode.
  std::vector<double> upper_initial;
  std::vector<double> lower_initial;
  // Largest |M| seen at any preparation, and the worst n' - n - 1.
  int64_t max_pending = 0;
  SkipAuditCounters audits;
};

struct TrainingTrace {
  static constexpr int kVersion = 1;
  int version = kVersion;
  std::string variant;
  std::string skip_metric;
  uint64_t seed = 0;
  int64_t episodes = 0;
  int num_steps = 0;
  int num_states = 0;
  int num_agents = 0;
  int initial_state = 0;
  double iota = 0.0;
  // visit_episodes[c][i-1]: episode of visit i of cell c.
  std::vector<std::vector<int64_t>> visit_episodes;
  std::vector<AgentTrace> agents;

  int Cell(int h, int s) const { return h * num_states + s; }
  int64_t Visits(int h, int s) const {
    return static_cast<int64_t>(visit_episodes[Cell(h, s)].size());
  }
};

// Full access to the final learner objects, for tests and audits.
struct TrainingRun {
  TrainingTrace trace;
  std::vector<Agent> agents;
};

TrainingRun RunTrainingFull(const MarkovGame& game, const DelayModel& delays,
                            const VariantConfig& config, int64_t episodes,
                            uint64_t seed);
TrainingTrace RunTraining(const MarkovGame& game, const DelayModel& delays,
                          const VariantConfig& config, int64_t episodes,
                          uint64_t seed);

// Policy sampled by agent m at visit i of (h, s).
std::vector<double> SnapshotPolicy(const TrainingTrace& trace, int agent,
                                   int h, int s, int64_t i);

// Realized bounded-unreceived constant of a finished run: the largest value
// over every agent and cell.
int64_t RealizedSkipBound(const TrainingRun& run);

// Re-checks the skip-variant lemma bounds of every ledger with a given C.
SkipAuditCounters AuditSkipBounds(const TrainingRun& run, double skip_bound);

nlohmann::json TraceToJson(const TrainingTrace& trace);
TrainingTrace TraceFromJson(const nlohmann::json& doc);

}  // namespace damavl

#endif  // DAMAVL_LEARNERS_H_
