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

#include "damavl/eval.h"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

namespace damavl {
namespace {

constexpr double kUnset = std::numeric_limits<double>::quiet_NaN();

// Sorts by episode, merges duplicates, drops entries below `prune` and
// renormalizes. Returns the mass before pruning.
double Normalize(Belief& b, double prune) {
  std::sort(b.begin(), b.end());
  size_t out = 0;
  for (size_t i = 0; i < b.size(); ++i) {
    if (out > 0 && b[out - 1].first == b[i].first) {
      b[out - 1].second += b[i].second;
    } else {
      b[out++] = b[i];
    }
  }
  b.resize(out);
  double total = 0.0;
  for (const auto& e : b) total += e.second;
  if (total <= 0.0) {
    b.clear();
    return 0.0;
  }
  double kept = 0.0;
  out = 0;
  for (size_t i = 0; i < b.size(); ++i) {
    const double w = b[i].second / total;
    if (w < prune) continue;
    b[out++] = {b[i].first, w};
    kept += w;
  }
  b.resize(out);
  for (auto& e : b) e.second /= kept;
  return total;
}

}  // namespace

struct Evaluator::Expansion {
  JointActionCodec codec;
  std::vector<double> marginal;
  std::vector<std::shared_ptr<const Belief>> posterior;
};

Evaluator::Evaluator(const CertifiedPolicy& cert, const MarkovGame& game,
                     EvalOptions options)
    : cert_(cert), game_(game), options_(options) {
  if (game.NumSteps() != cert.NumSteps() ||
      game.NumStates() != cert.NumStates() ||
      game.NumAgents() != cert.NumAgents()) {
    throw std::invalid_argument("certified policy does not match the game");
  }
  const int cells = cert.NumSteps() * cert.NumStates();
  PrefixMemo empty;
  empty.prefix.assign(cells, {});
  empty.fallback.assign(cells, {});
  value_memo_.assign(cert.NumAgents(), empty);
  observable_memo_.assign(cert.NumAgents(), empty);
}

// ---------------------------------------------------------------------------
// Shared device: prefix recursion over components.

namespace {

// sum_j p(j) [r_m(h, s, j) + sum_s' P(s'|h, s, j) cont(s')], with `agent`
// free to pick its own action when maximize is set.
double StepValue(const MarkovGame& game, int agent, int h, int s,
                 const std::vector<std::span<const double>>& policies,
                 bool maximize,
                 const std::function<double(int)>& continuation) {
  const JointActionCodec& codec = game.Codec();
  const int num_states = game.NumStates();
  const bool last = h + 1 >= game.NumSteps();
  std::vector<double> cont(num_states, kUnset);
  auto next_value = [&](int sp) {
    if (std::isnan(cont[sp])) cont[sp] = continuation(sp);
    return cont[sp];
  };
  const int own_actions = maximize ? codec.ActionCount(agent) : 1;
  double best = -std::numeric_limits<double>::infinity();
  for (int a = 0; a < own_actions; ++a) {
    double total = 0.0;
    for (int j = 0; j < codec.NumJointActions(); ++j) {
      if (maximize && codec.ActionOf(j, agent) != a) continue;
      double p = 1.0;
      for (int m = 0; m < codec.NumAgents(); ++m) {
        if (maximize && m == agent) continue;
        p *= policies[m][codec.ActionOf(j, m)];
      }
      if (p == 0.0) continue;
      double v = game.Reward(agent, h, s, j);
      if (!last) {
        const auto row = game.TransitionRow(h, s, j);
        for (int sp = 0; sp < num_states; ++sp) {
          if (row[sp] > 0.0) v += row[sp] * next_value(sp);
        }
      }
      total += p * v;
    }
    best = std::max(best, total);
  }
  return best;
}

}  // namespace

double Evaluator::SharedValue(int agent, int h, int s, int64_t k) {
  if (h >= cert_.NumSteps()) return 0.0;
  const int64_t n = cert_.DeviceCount(h, s, k);
  if (n == 0) return SharedFallback(agent, h, s, k);
  std::vector<double>& g =
      value_memo_[agent].prefix[h * cert_.NumStates() + s];
  if (g.empty()) g.push_back(0.0);
  const AlphaTable& alphas = cert_.Alphas();
  while (static_cast<int64_t>(g.size()) <= n) {
    const int64_t i = static_cast<int64_t>(g.size());
    const double q = SharedComponent(agent, h, s, i);
    g.push_back(alphas.OneMinusAlpha(i) * g.back() + alphas.Alpha(i) * q);
  }
  return g[n];
}

double Evaluator::SharedComponent(int agent, int h, int s, int64_t i) {
  std::vector<std::span<const double>> policies;
  for (int m = 0; m < cert_.NumAgents(); ++m) {
    policies.push_back(cert_.ComponentPolicy(m, h, s, i));
  }
  const int64_t next = cert_.VisitEpisode(h, s, i);
  return StepValue(game_, agent, h, s, policies, false, [&](int sp) {
    return SharedValue(agent, h + 1, sp, next);
  });
}

double Evaluator::SharedFallback(int agent, int h, int s, int64_t k) {
  auto& memo = value_memo_[agent].fallback[h * cert_.NumStates() + s];
  if (auto it = memo.find(k); it != memo.end()) return it->second;
  std::vector<std::span<const double>> policies;
  for (int m = 0; m < cert_.NumAgents(); ++m) {
    policies.push_back(cert_.UniformPolicy(m));
  }
  const double v = StepValue(game_, agent, h, s, policies, false, [&](int sp) {
    return SharedValue(agent, h + 1, sp, k);
  });
  memo[k] = v;
  return v;
}

double Evaluator::ObservableBr(int agent, int h, int s, int64_t k) {
  if (h >= cert_.NumSteps()) return 0.0;
  const int64_t n = cert_.DeviceCount(h, s, k);
  if (n == 0) return ObservableFallback(agent, h, s, k);
  std::vector<double>& g =
      observable_memo_[agent].prefix[h * cert_.NumStates() + s];
  if (g.empty()) g.push_back(0.0);
  const AlphaTable& alphas = cert_.Alphas();
  while (static_cast<int64_t>(g.size()) <= n) {
    const int64_t i = static_cast<int64_t>(g.size());
    const double q = ObservableComponent(agent, h, s, i);
    g.push_back(alphas.OneMinusAlpha(i) * g.back() + alphas.Alpha(i) * q);
  }
  return g[n];
}

double Evaluator::ObservableComponent(int agent, int h, int s, int64_t i) {
  std::vector<std::span<const double>> policies;
  for (int m = 0; m < cert_.NumAgents(); ++m) {
    policies.push_back(cert_.ComponentPolicy(m, h, s, i));
  }
  const int64_t next = cert_.VisitEpisode(h, s, i);
  return StepValue(game_, agent, h, s, policies, true, [&](int sp) {
    return ObservableBr(agent, h + 1, sp, next);
  });
}

double Evaluator::ObservableFallback(int agent, int h, int s, int64_t k) {
  auto& memo = observable_memo_[agent].fallback[h * cert_.NumStates() + s];
  if (auto it = memo.find(k); it != memo.end()) return it->second;
  std::vector<std::span<const double>> policies;
  for (int m = 0; m < cert_.NumAgents(); ++m) {
    policies.push_back(cert_.UniformPolicy(m));
  }
  const double v = StepValue(game_, agent, h, s, policies, true, [&](int sp) {
    return ObservableBr(agent, h + 1, sp, k);
  });
  memo[k] = v;
  return v;
}

// ---------------------------------------------------------------------------
// Belief dynamic program over hidden devices.

std::vector<Evaluator::Group> Evaluator::GroupsFor(int deviator) const {
  std::vector<Group> groups;
  if (cert_.SharedDevice()) {
    Group g;
    for (int m = 0; m < cert_.NumAgents(); ++m) {
      if (m != deviator) g.members.push_back(m);
    }
    if (!g.members.empty()) groups.push_back(std::move(g));
  } else {
    for (int m = 0; m < cert_.NumAgents(); ++m) {
      if (m != deviator) groups.push_back({{m}});
    }
  }
  return groups;
}

std::vector<Evaluator::Hypothesis> Evaluator::InitialHypotheses(
    const EvalStart& start, const std::vector<Group>& groups) const {
  auto belief = std::make_shared<Belief>();
  if (start.full) {
    const int64_t num = cert_.NumEpisodes();
    belief->reserve(num);
    for (int64_t k = 1; k <= num; ++k) {
      belief->push_back({k, 1.0 / static_cast<double>(num)});
    }
  } else {
    if (start.k < 1 || start.k > cert_.NumEpisodes()) {
      throw std::out_of_range("k outside [K]");
    }
    belief->push_back({start.k, 1.0});
  }
  Hypothesis hyp;
  hyp.weight = 1.0;
  hyp.groups.assign(groups.size(), belief);
  return {hyp};
}

Evaluator::Expansion Evaluator::Expand(int h, int s, const Belief& belief,
                                       const Group& group, bool posteriors) {
  const int lead = group.members.front();
  std::vector<int> counts;
  for (int m : group.members) counts.push_back(cert_.NumActions(m));
  Expansion e;
  e.codec = JointActionCodec(counts);
  const int num_tau = e.codec.NumJointActions();
  e.marginal.assign(num_tau, 0.0);
  std::vector<Belief> raw(num_tau);

  int64_t max_n = 0;
  std::vector<std::pair<int64_t, int64_t>> sizes;  // (n, entry index)
  sizes.reserve(belief.size());
  for (size_t x = 0; x < belief.size(); ++x) {
    const int64_t n = cert_.MixtureSize(lead, h, s, belief[x].first);
    sizes.push_back({n, static_cast<int64_t>(x)});
    max_n = std::max(max_n, n);
  }
  work_ += max_n + static_cast<int64_t>(belief.size());
  if (work_ > options_.max_work) {
    throw GuardError("best-response work limit exceeded");
  }

  auto add = [&](double w, int64_t next,
                 const std::vector<std::span<const double>>& pols) {
    for (int t = 0; t < num_tau; ++t) {
      double p = w;
      for (size_t g = 0; g < pols.size(); ++g) {
        p *= pols[g][e.codec.ActionOf(t, static_cast<int>(g))];
      }
      if (p == 0.0) continue;
      e.marginal[t] += p;
      if (posteriors) raw[t].push_back({next, p});
    }
  };

  std::vector<std::span<const double>> pols(group.members.size());
  std::vector<double> mass(max_n + 1, 0.0);
  for (const auto& [n, x] : sizes) {
    if (n == 0) {
      for (size_t g = 0; g < group.members.size(); ++g) {
        pols[g] = cert_.UniformPolicy(group.members[g]);
      }
      add(belief[x].second, belief[x].first, pols);
    } else {
      mass[n] += belief[x].second;
    }
  }
  // W(i) = alpha_i R(i), R(i) = B(i) + (1 - alpha_{i+1}) R(i + 1).
  const AlphaTable& alphas = cert_.Alphas();
  double r = 0.0;
  for (int64_t i = max_n; i >= 1; --i) {
    r = mass[i] + (i < max_n ? alphas.OneMinusAlpha(i + 1) * r : 0.0);
    const double w = alphas.Alpha(i) * r;
    if (w <= 0.0) continue;
    for (size_t g = 0; g < group.members.size(); ++g) {
      pols[g] = cert_.ComponentPolicy(group.members[g], h, s, i);
    }
    add(w, cert_.ComponentEpisode(lead, h, s, i), pols);
  }
  e.posterior.resize(num_tau);
  for (int t = 0; t < num_tau && posteriors; ++t) {
    if (e.marginal[t] <= 0.0) continue;
    Normalize(raw[t], options_.prune);
    e.posterior[t] = std::make_shared<const Belief>(std::move(raw[t]));
  }
  return e;
}

std::vector<double> Evaluator::BeliefNode(int h, int s,
                                          const std::vector<Hypothesis>& hyps,
                                          int deviator,
                                          const std::vector<Group>& groups) {
  const int num_agents = cert_.NumAgents();
  std::vector<double> zero(num_agents, 0.0);
  if (h >= cert_.NumSteps()) return zero;
  const bool last = h + 1 >= cert_.NumSteps();
  const int num_states = cert_.NumStates();
  const JointActionCodec& codec = game_.Codec();

  std::vector<std::vector<Expansion>> expansions(hyps.size());
  for (size_t x = 0; x < hyps.size(); ++x) {
    for (size_t g = 0; g < groups.size(); ++g) {
      expansions[x].push_back(
          Expand(h, s, *hyps[x].groups[g], groups[g], !last));
    }
  }

  const int own_actions = deviator >= 0 ? cert_.NumActions(deviator) : 1;
  std::vector<double> best;
  JointAction joint(num_agents, 0);
  for (int a = 0; a < own_actions; ++a) {
    std::vector<double> total(num_agents, 0.0);
    std::vector<std::vector<Hypothesis>> next(num_states);
    for (size_t x = 0; x < hyps.size(); ++x) {
      const auto& ex = expansions[x];
      // Iterate over every combination of group joint actions.
      std::vector<int> tau(groups.size(), 0);
      while (true) {
        double p = hyps[x].weight;
        for (size_t g = 0; g < groups.size() && p > 0.0; ++g) {
          p *= ex[g].marginal[tau[g]];
        }
        if (p > 0.0) {
          if (deviator >= 0) joint[deviator] = a;
          for (size_t g = 0; g < groups.size(); ++g) {
            for (size_t y = 0; y < groups[g].members.size(); ++y) {
              joint[groups[g].members[y]] =
                  ex[g].codec.ActionOf(tau[g], static_cast<int>(y));
            }
          }
          const int j = codec.Encode(joint);
          for (int m = 0; m < num_agents; ++m) {
            total[m] += p * game_.Reward(m, h, s, j);
          }
          if (!last) {
            const auto row = game_.TransitionRow(h, s, j);
            for (int sp = 0; sp < num_states; ++sp) {
              if (row[sp] <= 0.0) continue;
              Hypothesis nh;
              nh.weight = p * row[sp];
              for (size_t g = 0; g < groups.size(); ++g) {
                nh.groups.push_back(ex[g].posterior[tau[g]]);
              }
              next[sp].push_back(std::move(nh));
            }
          }
        }
        size_t g = 0;
        while (g < groups.size()) {
          if (++tau[g] < ex[g].codec.NumJointActions()) break;
          tau[g] = 0;
          ++g;
        }
        if (g == groups.size()) break;
      }
    }
    for (int sp = 0; sp < num_states && !last; ++sp) {
      auto& list = next[sp];
      if (list.empty()) continue;
      double mass = 0.0;
      for (const auto& nh : list) mass += nh.weight;
      if (mass <= 0.0) continue;
      std::vector<Hypothesis> child;
      if (groups.size() == 1) {
        // One device group: mixing the posteriors loses nothing.
        Belief merged;
        for (const auto& nh : list) {
          const double w = nh.weight / mass;
          for (const auto& [k, q] : *nh.groups[0]) merged.push_back({k, w * q});
        }
        work_ += static_cast<int64_t>(merged.size());
        Normalize(merged, options_.prune);
        Hypothesis one;
        one.weight = 1.0;
        one.groups.push_back(std::make_shared<const Belief>(std::move(merged)));
        child.push_back(std::move(one));
      } else {
        double kept = 0.0;
        for (auto& nh : list) {
          nh.weight /= mass;
          if (groups.empty() || nh.weight >= options_.prune) {
            kept += nh.weight;
            child.push_back(std::move(nh));
          }
        }
        for (auto& c : child) c.weight /= kept;
        if (groups.empty()) {
          // No device left to track; collapse to a single hypothesis.
          child.resize(1);
          child[0].weight = 1.0;
        }
      }
      const std::vector<double> v =
          BeliefNode(h + 1, sp, child, deviator, groups);
      for (int m = 0; m < num_agents; ++m) total[m] += mass * v[m];
    }
    if (best.empty() || (deviator >= 0 && total[deviator] > best[deviator])) {
      best = std::move(total);
    }
  }
  return best;
}

std::vector<double> Evaluator::Values(const EvalStart& start) {
  work_ = 0;
  const int num_agents = cert_.NumAgents();
  const int h0 = start.full ? 0 : start.h;
  const int s0 = start.full ? game_.InitialState() : start.s;
  if (cert_.SharedDevice()) {
    std::vector<double> out(num_agents, 0.0);
    for (int m = 0; m < num_agents; ++m) {
      if (start.full) {
        const int64_t num = cert_.NumEpisodes();
        double total = 0.0;
        for (int64_t k = 1; k <= num; ++k) total += SharedValue(m, 0, s0, k);
        out[m] = total / static_cast<double>(num);
      } else {
        if (start.k < 1 || start.k > cert_.NumEpisodes()) {
          throw std::out_of_range("k outside [K]");
        }
        out[m] = SharedValue(m, h0, s0, start.k);
      }
    }
    return out;
  }
  const auto groups = GroupsFor(-1);
  return BeliefNode(h0, s0, InitialHypotheses(start, groups), -1, groups);
}

double Evaluator::BestResponse(int agent, const EvalStart& start) {
  work_ = 0;
  const int h0 = start.full ? 0 : start.h;
  const int s0 = start.full ? game_.InitialState() : start.s;
  if (options_.observable_device) {
    if (!cert_.SharedDevice()) {
      throw std::invalid_argument(
          "observable-device best response needs a shared device");
    }
    if (!start.full) return ObservableBr(agent, h0, s0, start.k);
    const int64_t num = cert_.NumEpisodes();
    double total = 0.0;
    for (int64_t k = 1; k <= num; ++k) total += ObservableBr(agent, 0, s0, k);
    return total / static_cast<double>(num);
  }
  const auto groups = GroupsFor(agent);
  return BeliefNode(h0, s0, InitialHypotheses(start, groups), agent,
                    groups)[agent];
}

GapReport Evaluator::Gap(const EvalStart& start) {
  GapReport r;
  r.method = "exact";
  r.v_pi = Values(start);
  r.gap = -std::numeric_limits<double>::infinity();
  for (int m = 0; m < cert_.NumAgents(); ++m) {
    r.v_br.push_back(BestResponse(m, start));
    r.gap = std::max(r.gap, r.v_br[m] - r.v_pi[m]);
  }
  return r;
}

GapReport CceGap(const CertifiedPolicy& cert, const MarkovGame& game,
                 const EvalStart& start, const EvalOptions& options) {
  Evaluator ev(cert, game, options);
  return ev.Gap(start);
}

McEstimate McValue(const CertifiedPolicy& cert, const MarkovGame& game,
                   const EvalStart& start, int64_t rollouts, uint64_t seed) {
  if (rollouts < 1) throw std::invalid_argument("need at least one rollout");
  const int num_agents = cert.NumAgents();
  ExecutionStreams streams = ExecutionStreams::FromSeed(seed);
  std::vector<double> sum(num_agents, 0.0);
  std::vector<double> sum_sq(num_agents, 0.0);
  for (int64_t r = 0; r < rollouts; ++r) {
    const EpisodeTrace t =
        start.full ? cert.ExecuteOutput(game, streams)
                   : cert.ExecuteSubpolicy(game, start.k, start.h, start.s,
                                           streams);
    for (int m = 0; m < num_agents; ++m) {
      const double g = t.Return(m);
      sum[m] += g;
      sum_sq[m] += g * g;
    }
  }
  McEstimate est;
  const double n = static_cast<double>(rollouts);
  for (int m = 0; m < num_agents; ++m) {
    const double mean = sum[m] / n;
    est.mean.push_back(mean);
    if (rollouts < 2) {
      est.stderr_.push_back(0.0);
      continue;
    }
    const double var = std::max(0.0, (sum_sq[m] - n * mean * mean) / (n - 1));
    est.stderr_.push_back(std::sqrt(var / n));
  }
  return est;
}

// ---------------------------------------------------------------------------
// Exhaustive oracles.

namespace {

struct Draw {
  double weight;
  std::span<const double> policy;
  int64_t next;
};

// Every component an agent's device can produce at (h, s, k), with weights
// taken straight from the mixture definition.
std::vector<Draw> DrawsFor(const CertifiedPolicy& cert, int agent, int h,
                           int s, int64_t k) {
  const int64_t n = cert.MixtureSize(agent, h, s, k);
  if (n == 0) return {{1.0, cert.UniformPolicy(agent), k}};
  const std::vector<double> w = AlphaWeights(n, cert.NumSteps());
  std::vector<Draw> out;
  for (int64_t i = 1; i <= n; ++i) {
    out.push_back({w[i], cert.ComponentPolicy(agent, h, s, i),
                   cert.ComponentEpisode(agent, h, s, i)});
  }
  return out;
}

class Enumerator {
 public:
  Enumerator(const CertifiedPolicy& cert, const MarkovGame& game, int deviator,
             int h0)
      : cert_(cert), game_(game), deviator_(deviator), h0_(h0) {}

  // Deviation table: action per (relative step, history id).
  std::vector<int> table;
  std::vector<int64_t> offsets;

  std::vector<double> Run(int h, int s, std::vector<int64_t> ks,
                          int64_t history) const {
    const int num_agents = cert_.NumAgents();
    std::vector<double> out(num_agents, 0.0);
    if (h >= cert_.NumSteps()) return out;
    // Device draws: one for a shared device, one per agent otherwise.
    std::vector<std::vector<Draw>> draws;
    if (cert_.SharedDevice()) {
      draws.push_back(DrawsFor(cert_, 0, h, s, ks[0]));
    } else {
      for (int m = 0; m < num_agents; ++m) {
        draws.push_back(DrawsFor(cert_, m, h, s, ks[m]));
      }
    }
    std::vector<size_t> idx(draws.size(), 0);
    const JointActionCodec& codec = game_.Codec();
    const int own = deviator_ >= 0
                        ? table[offsets[h - h0_] + history]
                        : -1;
    while (true) {
      double w = 1.0;
      std::vector<std::span<const double>> pol(num_agents);
      std::vector<int64_t> next(num_agents);
      for (int m = 0; m < num_agents; ++m) {
        next[m] = cert_.SharedDevice() ? draws[0][idx[0]].next
                                       : draws[m][idx[m]].next;
      }
      if (cert_.SharedDevice()) {
        w = draws[0][idx[0]].weight;
        const int64_t n = cert_.DeviceCount(h, s, ks[0]);
        for (int m = 0; m < num_agents; ++m) {
          pol[m] = n == 0 ? cert_.UniformPolicy(m)
                          : cert_.ComponentPolicy(m, h, s, idx[0] + 1);
        }
      } else {
        for (int m = 0; m < num_agents; ++m) {
          if (m == deviator_) continue;
          w *= draws[m][idx[m]].weight;
          pol[m] = draws[m][idx[m]].policy;
        }
      }
      for (int j = 0; j < codec.NumJointActions(); ++j) {
        double p = w;
        for (int m = 0; m < num_agents; ++m) {
          const int a = codec.ActionOf(j, m);
          if (m == deviator_) {
            if (a != own) p = 0.0;
          } else {
            p *= pol[m][a];
          }
        }
        if (p == 0.0) continue;
        const auto row = game_.TransitionRow(h, s, j);
        for (int m = 0; m < num_agents; ++m) {
          out[m] += p * game_.Reward(m, h, s, j);
        }
        if (h + 1 >= cert_.NumSteps()) continue;
        for (int sp = 0; sp < cert_.NumStates(); ++sp) {
          if (row[sp] <= 0.0) continue;
          const int64_t hist =
              deviator_ >= 0
                  ? history * (static_cast<int64_t>(
                                   cert_.NumActions(deviator_)) *
                               cert_.NumStates()) +
                        own * cert_.NumStates() + sp
                  : 0;
          const auto v = Run(h + 1, sp, next, hist);
          for (int m = 0; m < num_agents; ++m) out[m] += p * row[sp] * v[m];
        }
      }
      // Advance the draw odometer; the deviator's own device is irrelevant.
      size_t g = 0;
      while (g < draws.size()) {
        if (!cert_.SharedDevice() && static_cast<int>(g) == deviator_) {
          ++g;
          continue;
        }
        if (++idx[g] < draws[g].size()) break;
        idx[g] = 0;
        ++g;
      }
      if (g == draws.size()) break;
    }
    return out;
  }

 private:
  const CertifiedPolicy& cert_;
  const MarkovGame& game_;
  int deviator_;
  int h0_;
};

// Averages `eval` over the start distribution: one shared start episode, or
// independent ones per agent.
std::vector<double> OverStarts(
    const CertifiedPolicy& cert, const EvalStart& start,
    const std::function<std::vector<double>(const std::vector<int64_t>&)>&
        eval) {
  const int num_agents = cert.NumAgents();
  if (!start.full) {
    return eval(std::vector<int64_t>(num_agents, start.k));
  }
  const int64_t num = cert.NumEpisodes();
  std::vector<double> total(num_agents, 0.0);
  if (cert.SharedDevice()) {
    for (int64_t k = 1; k <= num; ++k) {
      const auto v = eval(std::vector<int64_t>(num_agents, k));
      for (int m = 0; m < num_agents; ++m) total[m] += v[m] / num;
    }
    return total;
  }
  std::vector<int64_t> ks(num_agents, 1);
  const double w = std::pow(static_cast<double>(num), -num_agents);
  while (true) {
    const auto v = eval(ks);
    for (int m = 0; m < num_agents; ++m) total[m] += w * v[m];
    int g = 0;
    while (g < num_agents) {
      if (++ks[g] <= num) break;
      ks[g] = 1;
      ++g;
    }
    if (g == num_agents) break;
  }
  return total;
}

}  // namespace

std::vector<double> BruteForceValue(const CertifiedPolicy& cert,
                                    const MarkovGame& game,
                                    const EvalStart& start) {
  const int h0 = start.full ? 0 : start.h;
  const int s0 = start.full ? game.InitialState() : start.s;
  Enumerator e(cert, game, -1, h0);
  return OverStarts(cert, start, [&](const std::vector<int64_t>& ks) {
    return e.Run(h0, s0, ks, 0);
  });
}

double BruteForceBestResponse(const CertifiedPolicy& cert,
                              const MarkovGame& game, int agent,
                              const EvalStart& start, int64_t max_policies) {
  const int h0 = start.full ? 0 : start.h;
  const int s0 = start.full ? game.InitialState() : start.s;
  const int num_actions = cert.NumActions(agent);
  const int64_t branch =
      static_cast<int64_t>(num_actions) * cert.NumStates();
  Enumerator e(cert, game, agent, h0);
  int64_t slots = 0;
  int64_t width = 1;
  for (int h = h0; h < cert.NumSteps(); ++h) {
    e.offsets.push_back(slots);
    slots += width;
    width *= branch;
  }
  double count = 1.0;
  for (int64_t i = 0; i < slots; ++i) count *= num_actions;
  if (count > static_cast<double>(max_policies)) {
    throw GuardError("too many deterministic deviations to enumerate");
  }
  e.table.assign(slots, 0);
  double best = -std::numeric_limits<double>::infinity();
  while (true) {
    const auto v = OverStarts(cert, start, [&](const std::vector<int64_t>& ks) {
      return e.Run(h0, s0, ks, 0);
    });
    best = std::max(best, v[agent]);
    int64_t g = 0;
    while (g < slots) {
      if (++e.table[g] < num_actions) break;
      e.table[g] = 0;
      ++g;
    }
    if (g == slots) break;
  }
  return best;
}

}  // namespace damavl
