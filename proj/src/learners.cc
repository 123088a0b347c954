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

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace damavl {

std::string VariantName(Variant v) {
  switch (v) {
    case Variant::kDamavl:
      return "damavl";
    case Variant::kNaive:
      return "naive";
    case Variant::kSkip:
      return "skip";
  }
  return "";
}

Variant VariantFromName(const std::string& name) {
  if (name == "damavl") return Variant::kDamavl;
  if (name == "naive") return Variant::kNaive;
  if (name == "skip") return Variant::kSkip;
  throw std::invalid_argument("unknown variant '" + name + "'");
}

std::string SkipMetricName(SkipMetric m) {
  return m == SkipMetric::kPhi ? "paper-phi" : "previous-n-minus-i";
}

SkipMetric SkipMetricFromName(const std::string& name) {
  if (name == "paper-phi" || name == "phi") return SkipMetric::kPhi;
  if (name == "previous-n-minus-i" || name == "previous") {
    return SkipMetric::kPrevious;
  }
  throw std::invalid_argument("unknown skip metric '" + name + "'");
}

void VariantConfig::Validate() const {
  params.Validate();
  if (variant != Variant::kSkip &&
      (skip_metric.has_value() || threshold_timing.has_value())) {
    throw std::invalid_argument("skip options require the skip variant");
  }
}

ParamContext MakeParamContext(const MarkovGame& game, int64_t episodes,
                              double delta, double max_delay,
                              double skip_bound) {
  ParamContext p;
  p.num_steps = game.NumSteps();
  p.num_agents = game.NumAgents();
  p.num_states = game.NumStates();
  p.max_actions = game.MaxActionCount();
  p.episodes = episodes;
  p.delta = delta;
  p.max_delay = max_delay;
  p.skip_bound = skip_bound;
  return p;
}

namespace {

LedgerMode ModeOf(Variant v) {
  switch (v) {
    case Variant::kDamavl:
      return LedgerMode::kUsable;
    case Variant::kNaive:
      return LedgerMode::kNaive;
    case Variant::kSkip:
      return LedgerMode::kSkip;
  }
  return LedgerMode::kUsable;
}

}  // namespace

Agent::Agent(int id, const MarkovGame& game, const DelayModel& delays,
             const VariantConfig& config,
             std::shared_ptr<const AlphaTable> alphas, uint64_t seed)
    : id_(id),
      num_steps_(game.NumSteps()),
      num_states_(game.NumStates()),
      num_actions_(game.ActionCount(id)),
      delays_(&delays),
      config_(config),
      iota_(config.params.Iota()),
      alphas_(std::move(alphas)),
      action_rng_(seed),
      pending_gamma_(game.NumSteps(), 0.0),
      policy_history_(game.NumSteps() * game.NumStates()) {
  LedgerOptions options;
  options.mode = ModeOf(config.variant);
  options.metric = config.Metric();
  options.timing = config.Timing();
  options.skip_bound = config.params.skip_bound;
  options.skipped_upper = num_steps_;
  cells_.reserve(num_steps_ * num_states_);
  for (int h = 0; h < num_steps_; ++h) {
    for (int s = 0; s < num_states_; ++s) {
      CellState cell;
      cell.upper = num_steps_ - h;
      cell.upper_tilde = num_steps_ - h;
      cell.loss.assign(num_actions_, 0.0);
      cell.policy.assign(num_actions_, 1.0 / num_actions_);
      cell.ledger = VisitLedger(options);
      cells_.push_back(std::move(cell));
    }
  }
}

double Agent::Upper(int h, int s) const {
  return h >= num_steps_ ? 0.0 : Cell(h, s).upper;
}

double Agent::Lower(int h, int s) const {
  return h >= num_steps_ ? 0.0 : Cell(h, s).lower;
}

void Agent::ValueUpdate(CellState& cell, int h,
                        const PrepareResult& prep) const {
  const bool naive = config_.variant == Variant::kNaive;
  if (!naive) {
    for (size_t j = 1; j < prep.fed.size(); ++j) {
      if (prep.fed[j - 1].order >= prep.fed[j].order) {
        throw std::logic_error("F must be ascending in happening order");
      }
    }
  }
  cell.upper_tilde -= cell.upper_bonus;
  cell.lower_tilde += cell.lower_bonus;
  int64_t local = prep.usable - static_cast<int64_t>(prep.fed.size());
  for (const FedRecord& f : prep.fed) {
    const int64_t idx = naive ? ++local : f.order;
    const double a = alphas_->Alpha(idx);
    const double keep = alphas_->OneMinusAlpha(idx);
    cell.upper_tilde = keep * cell.upper_tilde + a * (f.reward + f.upper_next);
    cell.lower_tilde = keep * cell.lower_tilde + a * (f.reward + f.lower_next);
  }
  cell.folded = prep.usable;

  const ParamContext& p = config_.params;
  const int64_t n = prep.usable;
  Bonus bonus;
  if (config_.variant == Variant::kSkip) {
    bonus = BonusesSkip(n, static_cast<double>(prep.holding), p.skip_bound,
                        p.max_actions, num_steps_, iota_);
  } else {
    bonus = BonusesFinite(n, p.max_actions,
                          static_cast<double>(cell.ledger.HoldingAt(n)),
                          p.max_delay, num_steps_, iota_);
  }
  cell.upper_bonus = bonus.upper * p.bonus_scale;
  cell.lower_bonus = bonus.lower * p.bonus_scale;
  cell.upper_tilde += cell.upper_bonus;
  cell.lower_tilde -= cell.lower_bonus;
  cell.upper = std::min({static_cast<double>(num_steps_ - h),
                         cell.upper_tilde, cell.upper});
  cell.lower = std::max({0.0, cell.lower_tilde, cell.lower});
}

void Agent::PolicyOpt(CellState& cell, const PrepareResult& prep) const {
  const bool naive = config_.variant == Variant::kNaive;
  const double horizon = num_steps_;
  int64_t local = prep.usable - static_cast<int64_t>(prep.fed.size());
  for (const FedRecord& f : prep.fed) {
    const int64_t idx = naive ? ++local : f.order;
    const double log_w = alphas_->LogW(idx);
    if (log_w > cell.loss_log_scale) {
      const double shrink = std::exp(cell.loss_log_scale - log_w);
      for (double& v : cell.loss) v *= shrink;
      cell.loss_log_scale = log_w;
    }
    const double estimate =
        ((horizon - f.reward - f.upper_next) / horizon) / (f.prob + f.gamma);
    cell.loss[f.action] += std::exp(log_w - cell.loss_log_scale) * estimate;
  }

  const double eta = EtaGamma(prep.happened, config_.params.max_actions,
                              static_cast<double>(prep.holding), iota_);
  const double coef =
      eta * std::exp(cell.loss_log_scale - alphas_->LogW(prep.happened));
  double best = -std::numeric_limits<double>::infinity();
  for (int a = 0; a < num_actions_; ++a) {
    best = std::max(best, -coef * cell.loss[a]);
  }
  double total = 0.0;
  for (int a = 0; a < num_actions_; ++a) {
    cell.policy[a] = std::exp(-coef * cell.loss[a] - best);
    total += cell.policy[a];
  }
  for (int a = 0; a < num_actions_; ++a) {
    // Keep every entry strictly positive even when exp underflows.
    cell.policy[a] = std::max(cell.policy[a] / total,
                              std::numeric_limits<double>::min());
  }
}

const std::vector<double>& Agent::Prepare(int64_t episode, int h, int s) {
  CellState& cell = MutableCell(h, s);
  const PrepareResult prep = cell.ledger.BeginVisit(episode);
  ValueUpdate(cell, h, prep);
  PolicyOpt(cell, prep);
  pending_gamma_[h] = EtaGamma(prep.happened, config_.params.max_actions,
                               static_cast<double>(prep.holding), iota_);
  auto& history = policy_history_[h * num_states_ + s];
  history.insert(history.end(), cell.policy.begin(), cell.policy.end());
  return cell.policy;
}

int Agent::SampleAction(int h, int s) {
  return action_rng_.Categorical(Cell(h, s).policy);
}

void Agent::EndEpisode(int64_t episode, std::span<const int> states,
                       std::span<const int> actions,
                       std::span<const double> rewards) {
  for (int h = 0; h < num_steps_; ++h) {
    const int s = states[h];
    CellState& cell = MutableCell(h, s);
    const double upper_next = Upper(h + 1, h + 1 < num_steps_ ? states[h + 1] : 0);
    const double lower_next = Lower(h + 1, h + 1 < num_steps_ ? states[h + 1] : 0);
    const int64_t order = static_cast<int64_t>(cell.ledger.Records().size()) + 1;
    const Delay delay = delays_->At(id_, h, s, order);
    const int a = actions[h];
    cell.ledger.RecordVisit(episode, a, cell.policy[a], upper_next, lower_next,
                            pending_gamma_[h], rewards[h], delay);
  }
  for (CellState& cell : cells_) cell.ledger.Deliver(episode);
}

TrainingRun RunTrainingFull(const MarkovGame& game, const DelayModel& delays,
                            const VariantConfig& config, int64_t episodes,
                            uint64_t seed) {
  config.Validate();
  const ValidationReport report = ValidateGame(game);
  if (!report.ok()) throw std::invalid_argument(report.ToString());
  if (episodes < 1) throw std::invalid_argument("K must be at least 1");

  const int num_steps = game.NumSteps();
  const int num_states = game.NumStates();
  const int num_agents = game.NumAgents();
  auto alphas = std::make_shared<const AlphaTable>(num_steps, episodes + 1);

  TrainingRun run;
  TrainingTrace& trace = run.trace;
  trace.variant = VariantName(config.variant);
  if (config.variant == Variant::kSkip) {
    trace.skip_metric = SkipMetricName(config.Metric());
  }
  trace.seed = seed;
  trace.episodes = episodes;
  trace.num_steps = num_steps;
  trace.num_states = num_states;
  trace.num_agents = num_agents;
  trace.initial_state = game.InitialState();
  trace.iota = config.params.Iota();
  trace.visit_episodes.assign(num_steps * num_states, {});
  trace.agents.assign(num_agents, AgentTrace{});

  run.agents.reserve(num_agents);
  for (int m = 0; m < num_agents; ++m) {
    run.agents.emplace_back(m, game, delays, config, alphas,
                            DeriveSeed(seed, "action/" + std::to_string(m)));
    trace.agents[m].num_actions = game.ActionCount(m);
    trace.agents[m].upper_initial.reserve(episodes);
    trace.agents[m].lower_initial.reserve(episodes);
  }
  RandomStream env = DeriveStream(seed, "env");

  std::vector<int> states(num_steps + 1);
  std::vector<std::vector<int>> actions(num_agents, std::vector<int>(num_steps));
  std::vector<std::vector<double>> rewards(num_agents,
                                           std::vector<double>(num_steps));
  JointAction joint(num_agents);
  for (int64_t k = 1; k <= episodes; ++k) {
    int s = game.InitialState();
    for (int h = 0; h < num_steps; ++h) {
      states[h] = s;
      trace.visit_episodes[h * num_states + s].push_back(k);
      for (int m = 0; m < num_agents; ++m) {
        Agent& agent = run.agents[m];
        agent.Prepare(k, h, s);
        trace.agents[m].max_pending =
            std::max(trace.agents[m].max_pending,
                     agent.Cell(h, s).ledger.LastPending());
        joint[m] = agent.SampleAction(h, s);
        actions[m][h] = joint[m];
      }
      const StepOutcome out = Step(game, h, s, joint, env);
      for (int m = 0; m < num_agents; ++m) rewards[m][h] = out.rewards[m];
      s = out.next_state;
    }
    states[num_steps] = s;
    for (int m = 0; m < num_agents; ++m) {
      run.agents[m].EndEpisode(k, states, actions[m], rewards[m]);
      trace.agents[m].upper_initial.push_back(
          run.agents[m].Upper(0, game.InitialState()));
      trace.agents[m].lower_initial.push_back(
          run.agents[m].Lower(0, game.InitialState()));
    }
  }

  for (int m = 0; m < num_agents; ++m) {
    AgentTrace& at = trace.agents[m];
    const Agent& agent = run.agents[m];
    for (int h = 0; h < num_steps; ++h) {
      for (int s = 0; s < num_states; ++s) {
        const VisitLedger& ledger = agent.Cell(h, s).ledger;
        at.usable_after.push_back(ledger.UsableAfterHistory());
        at.consumption.push_back(ledger.ConsumptionOrder());
        at.policies.push_back(agent.PolicyHistory(h, s));
        at.holding.push_back(ledger.HoldingHistory());
        at.skipped.push_back(ledger.SkippedCount());
        const SkipAuditCounters& c = ledger.Audits();
        at.audits.checks += c.checks;
        at.audits.phi_violations += c.phi_violations;
        at.audits.blocking_violations += c.blocking_violations;
        at.audits.skipped_violations += c.skipped_violations;
        at.audits.worst_phi_ratio =
            std::max(at.audits.worst_phi_ratio, c.worst_phi_ratio);
        at.audits.worst_blocking_ratio =
            std::max(at.audits.worst_blocking_ratio, c.worst_blocking_ratio);
        at.audits.worst_skipped_ratio =
            std::max(at.audits.worst_skipped_ratio, c.worst_skipped_ratio);
      }
    }
  }
  return run;
}

TrainingTrace RunTraining(const MarkovGame& game, const DelayModel& delays,
                          const VariantConfig& config, int64_t episodes,
                          uint64_t seed) {
  return RunTrainingFull(game, delays, config, episodes, seed).trace;
}

std::vector<double> SnapshotPolicy(const TrainingTrace& trace, int agent,
                                   int h, int s, int64_t i) {
  const AgentTrace& at = trace.agents.at(agent);
  const int c = trace.Cell(h, s);
  const int a = at.num_actions;
  if (i < 1 || i > trace.Visits(h, s)) {
    throw std::out_of_range("visit index out of range");
  }
  auto first = at.policies[c].begin() + (i - 1) * a;
  return std::vector<double>(first, first + a);
}

int64_t RealizedSkipBound(const TrainingRun& run) {
  int64_t best = 0;
  for (const Agent& agent : run.agents) {
    for (int h = 0; h < run.trace.num_steps; ++h) {
      for (int s = 0; s < run.trace.num_states; ++s) {
        const auto& records = agent.Cell(h, s).ledger.Records();
        std::vector<Delay> d;
        std::vector<int64_t> k;
        for (const VisitRecord& r : records) {
          d.push_back(r.delay);
          k.push_back(r.episode);
        }
        best = std::max(best, RealizedSkipBound(d, k));
      }
    }
  }
  return best;
}

SkipAuditCounters AuditSkipBounds(const TrainingRun& run, double skip_bound) {
  SkipAuditCounters total;
  for (const Agent& agent : run.agents) {
    for (int h = 0; h < run.trace.num_steps; ++h) {
      for (int s = 0; s < run.trace.num_states; ++s) {
        for (const SkipAuditPoint& p : agent.Cell(h, s).ledger.AuditHistory()) {
          AccumulateSkipAudit(p, skip_bound, total);
        }
      }
    }
  }
  return total;
}

nlohmann::json TraceToJson(const TrainingTrace& trace) {
  nlohmann::json agents = nlohmann::json::array();
  for (const AgentTrace& at : trace.agents) {
    agents.push_back({{"num_actions", at.num_actions},
                      {"usable_after", at.usable_after},
                      {"consumption", at.consumption},
                      {"policies", at.policies},
                      {"holding", at.holding},
                      {"skipped", at.skipped},
                      {"upper_initial", at.upper_initial},
                      {"lower_initial", at.lower_initial},
                      {"max_pending", at.max_pending}});
  }
  return {{"version", trace.version},
          {"variant", trace.variant},
          {"skip_metric", trace.skip_metric},
          {"seed", trace.seed},
          {"episodes", trace.episodes},
          {"num_steps", trace.num_steps},
          {"num_states", trace.num_states},
          {"num_agents", trace.num_agents},
          {"initial_state", trace.initial_state},
          {"iota", trace.iota},
          {"visit_episodes", trace.visit_episodes},
          {"agents", agents}};
}

TrainingTrace TraceFromJson(const nlohmann::json& doc) {
  TrainingTrace t;
  t.version = doc.at("version").get<int>();
  if (t.version != TrainingTrace::kVersion) {
    throw std::invalid_argument("unsupported trace version " +
                                std::to_string(t.version));
  }
  t.variant = doc.at("variant").get<std::string>();
  t.skip_metric = doc.value("skip_metric", "");
  t.seed = doc.at("seed").get<uint64_t>();
  t.episodes = doc.at("episodes").get<int64_t>();
  t.num_steps = doc.at("num_steps").get<int>();
  t.num_states = doc.at("num_states").get<int>();
  t.num_agents = doc.at("num_agents").get<int>();
  t.initial_state = doc.at("initial_state").get<int>();
  t.iota = doc.at("iota").get<double>();
  t.visit_episodes =
      doc.at("visit_episodes").get<std::vector<std::vector<int64_t>>>();
  for (const auto& a : doc.at("agents")) {
    AgentTrace at;
    at.num_actions = a.at("num_actions").get<int>();
    at.usable_after =
        a.at("usable_after").get<std::vector<std::vector<int64_t>>>();
    at.consumption = a.at("consumption").get<std::vector<std::vector<int64_t>>>();
    at.policies = a.at("policies").get<std::vector<std::vector<double>>>();
    at.holding = a.at("holding").get<std::vector<std::vector<int64_t>>>();
    at.skipped = a.at("skipped").get<std::vector<int64_t>>();
    at.upper_initial = a.at("upper_initial").get<std::vector<double>>();
    at.lower_initial = a.at("lower_initial").get<std::vector<double>>();
    at.max_pending = a.at("max_pending").get<int64_t>();
    t.agents.push_back(std::move(at));
  }
  return t;
}

}  // namespace damavl
