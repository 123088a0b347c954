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

#ifndef DAMAVL_EVAL_H_
#define DAMAVL_EVAL_H_

#include <cstdint>
#include <memory>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "damavl/certify.h"
#include "damavl/game.h"

namespace damavl {

// Raised when an evaluation would exceed its configured size limits.
class GuardError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Where evaluation starts: the full output policy (device episode uniform
// over [K]) or the policy started at (k, h, s).
struct EvalStart {
  bool full = true;
  int64_t k = 1;
  int h = 0;
  int s = 0;

  static EvalStart Output() { return {}; }
  static EvalStart Subpolicy(int64_t k, int h, int s) {
    return {false, k, h, s};
  }
};

struct EvalOptions {
  double prune = 1e-12;
  // The deviator also sees the device (an upper bound on the hidden case).
  bool observable_device = false;
  // Limit on component expansions of one best-response computation.
  int64_t max_work = 4'000'000'000;
};

struct GapReport {
  std::vector<double> v_pi;
  std::vector<double> v_br;
  double gap = 0.0;
  std::string method;
  double radius = 0.0;  // Monte-Carlo only, on the V^pi side
};

// Sparse distribution over device episodes, sorted by episode.
using Belief = std::vector<std::pair<int64_t, double>>;

class Evaluator {
 public:
  Evaluator(const CertifiedPolicy& cert, const MarkovGame& game,
            EvalOptions options = {});

  // V^pi for every agent.
  std::vector<double> Values(const EvalStart& start);
  double Value(int agent, const EvalStart& start) {
    return Values(start).at(agent);
  }
  double BestResponse(int agent, const EvalStart& start);
  GapReport Gap(const EvalStart& start);

  int64_t LastWork() const { return work_; }

 private:
  struct Hypothesis {
    double weight = 0.0;
    std::vector<std::shared_ptr<const Belief>> groups;
  };
  struct Group {
    std::vector<int> members;
  };
  struct Expansion;

  // Shared-device V^pi by memoized prefix recursion.
  double SharedValue(int agent, int h, int s, int64_t k);
  double SharedComponent(int agent, int h, int s, int64_t i);
  double SharedFallback(int agent, int h, int s, int64_t k);
  // Observable-device best response, same recursion with a max inside.
  double ObservableBr(int agent, int h, int s, int64_t k);
  double ObservableComponent(int agent, int h, int s, int64_t i);
  double ObservableFallback(int agent, int h, int s, int64_t k);

  std::vector<double> BeliefNode(int h, int s,
                                 const std::vector<Hypothesis>& hyps,
                                 int deviator,
                                 const std::vector<Group>& groups);
  Expansion Expand(int h, int s, const Belief& belief, const Group& group,
                   bool posteriors);
  std::vector<Group> GroupsFor(int deviator) const;
  std::vector<Hypothesis> InitialHypotheses(const EvalStart& start,
                                            const std::vector<Group>& groups)
      const;

  const CertifiedPolicy& cert_;
  const MarkovGame& game_;
  EvalOptions options_;
  int64_t work_ = 0;

  struct PrefixMemo {
    std::vector<std::vector<double>> prefix;  // per cell, G(h, s, n)
    std::vector<std::unordered_map<int64_t, double>> fallback;
  };
  std::vector<PrefixMemo> value_memo_;       // per agent
  std::vector<PrefixMemo> observable_memo_;  // per agent
};

// Convenience wrappers.
GapReport CceGap(const CertifiedPolicy& cert, const MarkovGame& game,
                 const EvalStart& start, const EvalOptions& options = {});

struct McEstimate {
  std::vector<double> mean;
  std::vector<double> stderr_;
};

// Rollout estimate of V^pi for every agent from N executions.
McEstimate McValue(const CertifiedPolicy& cert, const MarkovGame& game,
                   const EvalStart& start, int64_t rollouts, uint64_t seed);

// Exact V^pi by exhaustive expansion of every device draw, action profile
// and transition. Test oracle for tiny instances.
std::vector<double> BruteForceValue(const CertifiedPolicy& cert,
                                    const MarkovGame& game,
                                    const EvalStart& start);

// Best response by enumerating every deterministic deviation that maps the
// deviator's own history (states and own actions) to an action.
double BruteForceBestResponse(const CertifiedPolicy& cert,
                              const MarkovGame& game, int agent,
                              const EvalStart& start,
                              int64_t max_policies = 1 << 20);

}  // namespace damavl

#endif  // DAMAVL_EVAL_H_
