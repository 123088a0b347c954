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

#include "damavl/experiment.h"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <exception>
#include <filesystem>
#include <fstream>
#include <limits>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "damavl/certify.h"
#include "damavl/random.h"

#ifndef DAMAVL_VERSION
#define DAMAVL_VERSION "dev"
#endif

namespace damavl {
namespace {

using nlohmann::json;

std::string JoinFields(const std::vector<std::string>& fields) {
  std::string out = "invalid configuration:";
  for (const auto& f : fields) out += " " + f + ";";
  return out;
}

bool ValidLabel(const std::string& label) {
  if (label.empty()) return false;
  for (char c : label) {
    const bool ok = std::isalnum(static_cast<unsigned char>(c)) || c == '-' ||
                    c == '_' || c == '.' || c == '/';
    if (!ok) return false;
  }
  return true;
}

std::string FormatDouble(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string Fnv1aHex(const std::string& text) {
  uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

SeriesSpec MakeSeries(std::string label, Variant variant, DelayModel delays) {
  SeriesSpec s;
  s.label = std::move(label);
  s.variant = variant;
  s.delays = std::move(delays);
  return s;
}

DelayModel NamedDelays(const std::string& name) {
  if (name == "zero") return DelayModel();
  if (name == "seq1") return DelaySequence(1);
  if (name == "seq2") return DelaySequence(4);
  if (name == "seq3") return DelaySequence(9);
  if (name == "infinite-pattern") return InfinitePatternDelays();
  throw std::invalid_argument("unknown delay preset '" + name + "'");
}

}  // namespace

ConfigError::ConfigError(std::vector<std::string> fields)
    : std::runtime_error(JoinFields(fields)), fields_(std::move(fields)) {}

void ExperimentConfig::Validate() const {
  std::vector<std::string> bad;
  const ValidationReport report = ValidateGame(game);
  if (!report.ok()) bad.push_back("game (" + report.ToString() + ")");
  if (episodes < 1) bad.push_back("episodes");
  if (!(delta > 0.0 && delta < 1.0)) bad.push_back("delta");
  if (seeds.empty()) bad.push_back("seeds");
  if (std::set<uint64_t>(seeds.begin(), seeds.end()).size() != seeds.size()) {
    bad.push_back("seeds (duplicates)");
  }
  if (eval_every < 1) bad.push_back("eval_every");
  if (eval_method != "exact" && eval_method != "mc") {
    bad.push_back("eval_method");
  }
  if (mc_rollouts < 1) bad.push_back("mc_rollouts");
  if (smoothing_window < 1) bad.push_back("smoothing_window");
  if (!(burn_in >= 0.0 && burn_in < 1.0)) bad.push_back("burn_in");
  if (output_dir.empty()) bad.push_back("output_dir");
  if (series.empty()) bad.push_back("series");
  std::set<std::string> labels;
  for (size_t i = 0; i < series.size(); ++i) {
    const SeriesSpec& s = series[i];
    const std::string at = "series[" + std::to_string(i) + "]";
    if (!ValidLabel(s.label)) bad.push_back(at + ".label");
    if (!labels.insert(s.label).second) bad.push_back(at + ".label (duplicate)");
    if (s.variant != Variant::kSkip &&
        (s.skip_metric || s.threshold_timing || s.skip_bound)) {
      bad.push_back(at + ".variant (skip options on a non-skip variant)");
    }
    if (s.max_delay && *s.max_delay < 0) bad.push_back(at + ".max_delay");
    if (s.skip_bound && !(*s.skip_bound > 0.0)) bad.push_back(at + ".skip_bound");
    if (!(s.bonus_scale >= 0.0)) bad.push_back(at + ".bonus_scale");
    if (observable_device && s.variant == Variant::kNaive) {
      bad.push_back(at + ".variant (observable device needs a shared device)");
    }
    for (const auto& [key, schedule] : s.delays.Entries()) {
      const auto [m, h, st] = key;
      if (m < 0 || m >= game.NumAgents() || h < 0 || h >= game.NumSteps() ||
          st < 0 || st >= game.NumStates()) {
        bad.push_back(at + ".delays (entry outside the game)");
        break;
      }
    }
  }
  if (!bad.empty()) throw ConfigError(bad);
}

DelayModel DelaySequence(int64_t factor) {
  DelayModel model;
  const DelaySchedule lead = DelaySchedule::AffinePeriodic(20, 2, 10);
  const DelaySchedule rest = DelaySchedule::Constant(5);
  model.Set(0, 0, 0, factor == 1 ? lead : DelaySchedule::Scaled(lead, factor));
  for (int m = 1; m < 3; ++m) {
    model.Set(m, 0, 0,
              factor == 1 ? rest : DelaySchedule::Scaled(rest, factor));
  }
  return model;
}

DelayModel InfinitePatternDelays() {
  DelayModel model;
  model.Set(0, 0, 0,
            DelaySchedule::InfinitePattern(10, 5, Delay::Finite(0)));
  for (int m = 1; m < 3; ++m) model.Set(m, 0, 0, DelaySchedule::Constant(5));
  return model;
}

std::vector<std::string> PresetNames() {
  return {"fig1-left", "fig1-center", "fig1-right"};
}

ExperimentConfig PresetConfig(const std::string& name) {
  ExperimentConfig c;
  c.name = name;
  c.game = AppendixBGame();
  if (name == "fig1-left") {
    c.series.push_back(MakeSeries("damavl", Variant::kDamavl, DelaySequence(1)));
    c.series.push_back(MakeSeries("naive", Variant::kNaive, DelaySequence(1)));
  } else if (name == "fig1-center") {
    c.series.push_back(
        MakeSeries("damavl/seq1", Variant::kDamavl, DelaySequence(1)));
    c.series.push_back(
        MakeSeries("damavl/seq2", Variant::kDamavl, DelaySequence(4)));
    c.series.push_back(
        MakeSeries("damavl/seq3", Variant::kDamavl, DelaySequence(9)));
  } else if (name == "fig1-right") {
    SeriesSpec phi =
        MakeSeries("skip/paper-phi", Variant::kSkip, InfinitePatternDelays());
    phi.skip_metric = SkipMetric::kPhi;
    SeriesSpec prev =
        MakeSeries("skip/previous", Variant::kSkip, InfinitePatternDelays());
    prev.skip_metric = SkipMetric::kPrevious;
    c.series.push_back(phi);
    c.series.push_back(prev);
    c.series.push_back(MakeSeries("damavl-no-skip", Variant::kDamavl,
                                  InfinitePatternDelays()));
  } else {
    throw ConfigError({"preset (unknown '" + name + "')"});
  }
  c.output_dir = "out/" + name;
  return c;
}

// ---------------------------------------------------------------------------
// JSON.

namespace {

json SeriesToJson(const SeriesSpec& s) {
  json j;
  j["label"] = s.label;
  j["variant"] = VariantName(s.variant);
  if (s.skip_metric) j["skip_metric"] = SkipMetricName(*s.skip_metric);
  if (s.threshold_timing) {
    j["threshold_timing"] = *s.threshold_timing == ThresholdTiming::kCommitted
                                ? "committed"
                                : "post-update";
  }
  j["delays"] = s.delays.ToJson();
  if (s.max_delay) j["max_delay"] = *s.max_delay;
  if (s.skip_bound) j["skip_bound"] = *s.skip_bound;
  j["bonus_scale"] = s.bonus_scale;
  return j;
}

SeriesSpec SeriesFromJson(const json& j, const std::string& at,
                          std::vector<std::string>& bad) {
  SeriesSpec s;
  static const std::set<std::string> known = {
      "label",      "variant",    "skip_metric", "threshold_timing",
      "delays",     "max_delay",  "skip_bound",  "bonus_scale"};
  if (!j.is_object()) {
    bad.push_back(at);
    return s;
  }
  for (const auto& [key, value] : j.items()) {
    if (!known.count(key)) bad.push_back(at + "." + key + " (unknown key)");
  }
  auto field = [&](const char* key, auto&& fn) {
    if (!j.contains(key)) return;
    try {
      fn(j.at(key));
    } catch (const std::exception&) {
      bad.push_back(at + "." + key);
    }
  };
  field("variant", [&](const json& v) {
    s.variant = VariantFromName(v.get<std::string>());
  });
  s.label = VariantName(s.variant);
  field("label", [&](const json& v) { s.label = v.get<std::string>(); });
  field("skip_metric", [&](const json& v) {
    s.skip_metric = SkipMetricFromName(v.get<std::string>());
  });
  field("threshold_timing", [&](const json& v) {
    const std::string t = v.get<std::string>();
    if (t == "committed") {
      s.threshold_timing = ThresholdTiming::kCommitted;
    } else if (t == "post-update") {
      s.threshold_timing = ThresholdTiming::kPostUpdate;
    } else {
      throw std::invalid_argument(t);
    }
  });
  field("delays", [&](const json& v) {
    s.delays = v.is_string() ? NamedDelays(v.get<std::string>())
                             : DelayModel::FromJson(v);
  });
  field("max_delay", [&](const json& v) { s.max_delay = v.get<int64_t>(); });
  field("skip_bound", [&](const json& v) { s.skip_bound = v.get<double>(); });
  field("bonus_scale", [&](const json& v) { s.bonus_scale = v.get<double>(); });
  return s;
}

}  // namespace

ExperimentConfig ConfigFromJson(const json& doc, const std::string& base_dir) {
  if (!doc.is_object()) throw ConfigError({"(root is not an object)"});
  std::vector<std::string> bad;
  ExperimentConfig c;
  if (doc.contains("preset")) {
    try {
      c = PresetConfig(doc.at("preset").get<std::string>());
    } catch (const ConfigError&) {
      throw;
    } catch (const std::exception&) {
      throw ConfigError({"preset"});
    }
  }
  static const std::set<std::string> known = {
      "preset",      "name",         "game",          "series",
      "episodes",    "seeds",        "delta",         "eval_every",
      "eval_method", "mc_rollouts",  "observable_device",
      "smoothing_window", "burn_in", "output_dir",    "save_traces",
      "guards"};
  for (const auto& [key, value] : doc.items()) {
    if (!known.count(key)) bad.push_back(key + " (unknown key)");
  }
  auto field = [&](const char* key, auto&& fn) {
    if (!doc.contains(key)) return;
    try {
      fn(doc.at(key));
    } catch (const std::exception&) {
      bad.push_back(key);
    }
  };
  field("name", [&](const json& v) { c.name = v.get<std::string>(); });
  field("game", [&](const json& v) {
    if (v.is_string()) {
      const std::string ref = v.get<std::string>();
      if (ref == "appendix-b") {
        c.game = AppendixBGame();
      } else {
        std::filesystem::path p(ref);
        if (p.is_relative()) p = std::filesystem::path(base_dir) / p;
        std::ifstream in(p);
        if (!in) throw std::runtime_error("cannot open " + p.string());
        c.game = GameFromJson(json::parse(in));
      }
    } else {
      c.game = GameFromJson(v);
    }
  });
  if (doc.contains("series")) {
    const json& arr = doc.at("series");
    if (!arr.is_array()) {
      bad.push_back("series");
    } else {
      c.series.clear();
      for (size_t i = 0; i < arr.size(); ++i) {
        c.series.push_back(
            SeriesFromJson(arr[i], "series[" + std::to_string(i) + "]", bad));
      }
    }
  }
  field("episodes", [&](const json& v) { c.episodes = v.get<int64_t>(); });
  field("seeds", [&](const json& v) {
    c.seeds = v.get<std::vector<uint64_t>>();
  });
  field("delta", [&](const json& v) { c.delta = v.get<double>(); });
  field("eval_every", [&](const json& v) { c.eval_every = v.get<int64_t>(); });
  field("eval_method",
        [&](const json& v) { c.eval_method = v.get<std::string>(); });
  field("mc_rollouts", [&](const json& v) { c.mc_rollouts = v.get<int64_t>(); });
  field("observable_device",
        [&](const json& v) { c.observable_device = v.get<bool>(); });
  field("smoothing_window",
        [&](const json& v) { c.smoothing_window = v.get<int64_t>(); });
  field("burn_in", [&](const json& v) { c.burn_in = v.get<double>(); });
  field("output_dir",
        [&](const json& v) { c.output_dir = v.get<std::string>(); });
  field("save_traces", [&](const json& v) { c.save_traces = v.get<bool>(); });
  field("guards", [&](const json& v) {
    if (!v.is_object()) throw std::invalid_argument("guards");
    for (const auto& [key, value] : v.items()) {
      if (key == "max_episodes") {
        c.max_episodes = value.get<int64_t>();
      } else if (key == "max_joint_actions") {
        c.max_joint_actions = value.get<int64_t>();
      } else if (key == "max_eval_work") {
        c.max_eval_work = value.get<int64_t>();
      } else {
        throw std::invalid_argument(key);
      }
    }
  });
  if (!bad.empty()) throw ConfigError(bad);
  c.Validate();
  return c;
}

json ConfigToJson(const ExperimentConfig& c) {
  json j;
  j["name"] = c.name;
  j["game"] = GameToJson(c.game);
  j["series"] = json::array();
  for (const auto& s : c.series) j["series"].push_back(SeriesToJson(s));
  j["episodes"] = c.episodes;
  j["seeds"] = c.seeds;
  j["delta"] = c.delta;
  j["eval_every"] = c.eval_every;
  j["eval_method"] = c.eval_method;
  j["mc_rollouts"] = c.mc_rollouts;
  j["observable_device"] = c.observable_device;
  j["smoothing_window"] = c.smoothing_window;
  j["burn_in"] = c.burn_in;
  j["output_dir"] = c.output_dir;
  j["save_traces"] = c.save_traces;
  j["guards"] = {{"max_episodes", c.max_episodes},
                 {"max_joint_actions", c.max_joint_actions},
                 {"max_eval_work", c.max_eval_work}};
  return j;
}

// ---------------------------------------------------------------------------
// Running.

namespace {

void CheckGuards(const ExperimentConfig& c) {
  if (c.episodes > c.max_episodes) {
    throw GuardError("episodes " + std::to_string(c.episodes) +
                     " exceed the guard of " + std::to_string(c.max_episodes));
  }
  if (c.game.Codec().NumJointActions() > c.max_joint_actions) {
    throw GuardError("joint action space exceeds the guard of " +
                     std::to_string(c.max_joint_actions));
  }
}

void Accumulate(SkipAuditCounters& total, const SkipAuditCounters& add) {
  total.checks += add.checks;
  total.phi_violations += add.phi_violations;
  total.blocking_violations += add.blocking_violations;
  total.skipped_violations += add.skipped_violations;
  total.worst_phi_ratio = std::max(total.worst_phi_ratio, add.worst_phi_ratio);
  total.worst_blocking_ratio =
      std::max(total.worst_blocking_ratio, add.worst_blocking_ratio);
  total.worst_skipped_ratio =
      std::max(total.worst_skipped_ratio, add.worst_skipped_ratio);
}

json AuditJson(const SkipAuditCounters& a) {
  return {{"checks", a.checks},
          {"phi_violations", a.phi_violations},
          {"blocking_violations", a.blocking_violations},
          {"skipped_violations", a.skipped_violations},
          {"worst_phi_ratio", a.worst_phi_ratio},
          {"worst_blocking_ratio", a.worst_blocking_ratio},
          {"worst_skipped_ratio", a.worst_skipped_ratio}};
}

}  // namespace

std::string TraceFileName(const std::string& run_id) {
  std::string name = run_id;
  std::replace(name.begin(), name.end(), '/', '_');
  return "trace_" + name + ".json";
}

CellResult RunCell(const ExperimentConfig& config, size_t series_index,
                   uint64_t seed) {
  const SeriesSpec& spec = config.series.at(series_index);
  const MarkovGame& game = config.game;
  const int64_t num_episodes = config.episodes;
  const int num_agents = game.NumAgents();

  VariantConfig vc;
  vc.variant = spec.variant;
  vc.skip_metric = spec.skip_metric;
  vc.threshold_timing = spec.threshold_timing;
  const int64_t d_max =
      spec.max_delay.value_or(spec.delays.MaxFiniteDelay(num_episodes));
  const double c_bound =
      spec.skip_bound.value_or(static_cast<double>(num_episodes));
  vc.params = MakeParamContext(game, num_episodes, config.delta,
                               static_cast<double>(d_max), c_bound);
  vc.params.bonus_scale = spec.bonus_scale;

  CellResult out;
  out.series = spec.label;
  out.seed = seed;
  out.run_id = spec.label + "-s" + std::to_string(seed);

  auto t0 = std::chrono::steady_clock::now();
  TrainingRun run = RunTrainingFull(game, spec.delays, vc, num_episodes, seed);
  out.train_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  out.realized_skip_bound = RealizedSkipBound(run);
  for (int m = 0; m < num_agents; ++m) {
    const AgentTrace& at = run.trace.agents[m];
    out.max_pending.push_back(at.max_pending);
    if (m == 0) {
      for (int64_t x : at.skipped) out.skipped += x;
    }
    Accumulate(out.audits, at.audits);
  }
  if (spec.variant == Variant::kSkip) {
    out.audits_realized = AuditSkipBounds(
        run, static_cast<double>(std::max<int64_t>(1, out.realized_skip_bound)));
  }

  auto trace = std::make_shared<const TrainingTrace>(std::move(run.trace));
  run.agents.clear();
  CertifiedPolicy cert(trace);
  EvalOptions options;
  options.observable_device = config.observable_device;
  options.max_work = config.max_eval_work;
  Evaluator evaluator(cert, game, options);

  auto row = [&](int64_t k, int agent, const std::string& metric, double v) {
    out.rows.push_back({out.run_id, spec.label, seed, k, agent, metric, v});
  };

  std::vector<int64_t> optimism_hits(num_agents, 0);
  int64_t optimism_total = 0;
  t0 = std::chrono::steady_clock::now();
  std::vector<int64_t> points;
  for (int64_t k = config.eval_every; k <= num_episodes; k += config.eval_every) {
    points.push_back(k);
  }
  if (points.empty() || points.back() != num_episodes) {
    points.push_back(num_episodes);
  }
  for (int64_t k : points) {
    const EvalStart start =
        EvalStart::Subpolicy(k, 0, game.InitialState());
    GapReport rep;
    if (config.eval_method == "exact") {
      rep = evaluator.Gap(start);
    } else {
      const McEstimate mc =
          McValue(cert, game, start, config.mc_rollouts,
                  DeriveSeed(seed, "mc/" + std::to_string(k)));
      rep.method = "monte-carlo";
      rep.v_pi = mc.mean;
      rep.gap = -std::numeric_limits<double>::infinity();
      for (int m = 0; m < num_agents; ++m) {
        rep.v_br.push_back(evaluator.BestResponse(m, start));
        rep.gap = std::max(rep.gap, rep.v_br[m] - rep.v_pi[m]);
        rep.radius = std::max(rep.radius, 4.0 * mc.stderr_[m]);
      }
    }
    out.eval_episodes.push_back(k);
    out.gaps.push_back(rep.gap);
    row(k, -1, "gap", rep.gap);
    if (config.eval_method == "mc") row(k, -1, "gap_radius", rep.radius);
    const bool counted =
        static_cast<double>(k) > config.burn_in * static_cast<double>(num_episodes);
    if (counted) ++optimism_total;
    for (int m = 0; m < num_agents; ++m) {
      const double upper = trace->agents[m].upper_initial[k - 1];
      row(k, m, "v_pi", rep.v_pi[m]);
      row(k, m, "v_br", rep.v_br[m]);
      row(k, m, "v_upper", upper);
      row(k, m, "v_lower", trace->agents[m].lower_initial[k - 1]);
      if (counted && upper + 1e-9 >= rep.v_br[m]) ++optimism_hits[m];
    }
  }
  out.eval_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();

  double tail = 0.0;
  int64_t count = 0;
  for (size_t x = 0; x < points.size(); ++x) {
    if (points[x] > num_episodes - config.smoothing_window) {
      tail += out.gaps[x];
      ++count;
    }
  }
  out.final_gap = count > 0 ? tail / static_cast<double>(count) : out.gaps.back();
  row(num_episodes, -1, "final_gap", out.final_gap);
  row(num_episodes, -1, "skipped", static_cast<double>(out.skipped));
  for (int m = 0; m < num_agents; ++m) {
    const double frac =
        optimism_total > 0 ? static_cast<double>(optimism_hits[m]) /
                                 static_cast<double>(optimism_total)
                           : 1.0;
    out.optimism_fraction.push_back(frac);
    row(num_episodes, m, "optimism_fraction", frac);
    row(num_episodes, m, "max_pending",
        static_cast<double>(out.max_pending[m]));
  }
  if (config.save_traces) {
    std::filesystem::create_directories(config.output_dir);
    const auto path =
        std::filesystem::path(config.output_dir) / TraceFileName(out.run_id);
    std::ofstream f(path);
    f << TraceToJson(*trace).dump() << "\n";
    if (!f) throw std::runtime_error("cannot write " + path.string());
  }
  return out;
}

int WorkerCount() {
  if (const char* env = std::getenv("DAMAVL_WORKERS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) return static_cast<int>(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

std::vector<CellResult> RunCells(const ExperimentConfig& config) {
  config.Validate();
  CheckGuards(config);
  std::vector<std::pair<size_t, uint64_t>> tasks;
  for (size_t i = 0; i < config.series.size(); ++i) {
    for (uint64_t seed : config.seeds) tasks.push_back({i, seed});
  }
  std::vector<CellResult> results(tasks.size());
  std::vector<std::exception_ptr> errors(tasks.size());
  std::atomic<size_t> next{0};
  auto worker = [&] {
    while (true) {
      const size_t t = next.fetch_add(1);
      if (t >= tasks.size()) return;
      try {
        results[t] = RunCell(config, tasks[t].first, tasks[t].second);
      } catch (...) {
        errors[t] = std::current_exception();
      }
    }
  };
  const int workers =
      std::min<int>(WorkerCount(), static_cast<int>(tasks.size()));
  if (workers <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return results;
}

std::string FormatCsv(const std::vector<CsvRow>& rows) {
  std::string out = "run_id,variant,seed,episode,agent,metric,value\n";
  for (const auto& r : rows) {
    out += r.run_id + "," + r.variant + "," + std::to_string(r.seed) + "," +
           std::to_string(r.episode) + "," + std::to_string(r.agent) + "," +
           r.metric + "," + FormatDouble(r.value) + "\n";
  }
  return out;
}

std::vector<CsvRow> ParseCsv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) return {};
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "run_id,variant,seed,episode,agent,metric,value") {
    throw std::runtime_error("malformed CSV header");
  }
  std::vector<CsvRow> rows;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) f.push_back(cell);
    if (f.size() != 7) {
      throw std::runtime_error("malformed CSV line " + std::to_string(line_no));
    }
    try {
      CsvRow r;
      r.run_id = f[0];
      r.variant = f[1];
      size_t used = 0;
      r.seed = std::stoull(f[2], &used);
      if (used != f[2].size()) throw std::invalid_argument("seed");
      r.episode = std::stoll(f[3], &used);
      if (used != f[3].size()) throw std::invalid_argument("episode");
      r.agent = std::stoi(f[4], &used);
      if (used != f[4].size()) throw std::invalid_argument("agent");
      r.metric = f[5];
      r.value = std::stod(f[6], &used);
      if (used != f[6].size()) throw std::invalid_argument("value");
      rows.push_back(std::move(r));
    } catch (const std::exception&) {
      throw std::runtime_error("malformed CSV line " + std::to_string(line_no));
    }
  }
  return rows;
}

json SummaryJson(const ExperimentConfig& config,
                 const std::vector<CellResult>& cells) {
  json j;
  j["name"] = config.name;
  j["episodes"] = config.episodes;
  j["series"] = json::object();
  for (const auto& s : config.series) {
    json cells_json = json::array();
    double total = 0.0;
    int count = 0;
    for (const auto& c : cells) {
      if (c.series != s.label) continue;
      json cj = {{"run_id", c.run_id},
                 {"seed", c.seed},
                 {"final_gap", c.final_gap},
                 {"optimism_fraction", c.optimism_fraction},
                 {"max_pending", c.max_pending},
                 {"skipped", c.skipped},
                 {"realized_skip_bound", c.realized_skip_bound}};
      if (s.variant == Variant::kSkip) {
        cj["audits"] = AuditJson(c.audits);
        cj["audits_realized"] = AuditJson(c.audits_realized);
      }
      cells_json.push_back(cj);
      total += c.final_gap;
      ++count;
    }
    j["series"][s.label] = {
        {"variant", VariantName(s.variant)},
        {"mean_final_gap", count > 0 ? total / count : 0.0},
        {"cells", cells_json}};
  }
  return j;
}

RunManifest RunExperiment(const ExperimentConfig& config) {
  const auto wall0 = std::chrono::steady_clock::now();
  const std::vector<CellResult> cells = RunCells(config);
  namespace fs = std::filesystem;
  const fs::path dir(config.output_dir);
  fs::create_directories(dir);

  std::vector<CsvRow> rows;
  for (const auto& c : cells) {
    rows.insert(rows.end(), c.rows.begin(), c.rows.end());
  }
  RunManifest manifest;
  const json config_json = ConfigToJson(config);
  manifest.config_hash = Fnv1aHex(config_json.dump());
  manifest.code_version = DAMAVL_VERSION;

  auto write = [&](const std::string& name, const std::string& body) {
    std::ofstream f(dir / name, std::ios::binary);
    f << body;
    if (!f) throw std::runtime_error("cannot write " + (dir / name).string());
    manifest.files.push_back(name);
  };
  write("runs.csv", FormatCsv(rows));
  write("summary.json", SummaryJson(config, cells).dump(2) + "\n");
  write("config.json", config_json.dump(2) + "\n");
  PlotSpec plot;
  plot.title = config.name + ": CCE-gap";
  plot.window = std::max<int64_t>(1, config.smoothing_window / config.eval_every);
  write("gap.svg", RenderSvg(rows, plot));
  if (config.save_traces) {
    for (const auto& c : cells) {
      manifest.files.push_back(TraceFileName(c.run_id));
    }
  }

  for (const auto& c : cells) {
    manifest.runs.push_back({{"run_id", c.run_id},
                             {"series", c.series},
                             {"seed", c.seed},
                             {"final_gap", c.final_gap},
                             {"train_seconds", c.train_seconds},
                             {"eval_seconds", c.eval_seconds}});
  }
  manifest.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - wall0)
          .count();
  const std::time_t now = std::time(nullptr);
  char stamp[32];
  std::strftime(stamp, sizeof(stamp), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
  json m = {{"config_hash", manifest.config_hash},
            {"code_version", manifest.code_version},
            {"created", stamp},
            {"wall_seconds", manifest.wall_seconds},
            {"workers", WorkerCount()},
            {"defaults", {{"episodes", config.episodes},
                          {"delta", config.delta},
                          {"seeds", config.seeds}}},
            {"runs", manifest.runs},
            {"files", manifest.files}};
  std::ofstream f(dir / "manifest.json");
  f << m.dump(2) << "\n";
  if (!f) throw std::runtime_error("cannot write manifest.json");
  manifest.files.push_back("manifest.json");
  return manifest;
}

// ---------------------------------------------------------------------------
// Plotting.

std::vector<double> MovingAverage(const std::vector<double>& values,
                                  int64_t window) {
  if (window < 1) throw std::invalid_argument("window must be >= 1");
  std::vector<double> out(values.size());
  double sum = 0.0;
  for (size_t i = 0; i < values.size(); ++i) {
    sum += values[i];
    if (static_cast<int64_t>(i) >= window) sum -= values[i - window];
    const int64_t n = std::min<int64_t>(window, static_cast<int64_t>(i) + 1);
    out[i] = window == 1 ? values[i] : sum / static_cast<double>(n);
  }
  return out;
}

std::map<std::string, std::vector<std::pair<int64_t, double>>> SeriesFromRows(
    const std::vector<CsvRow>& rows, const PlotSpec& spec) {
  std::map<std::string, std::map<int64_t, std::pair<double, int>>> acc;
  for (const auto& r : rows) {
    if (r.metric != spec.metric || r.agent != spec.agent) continue;
    auto& cell = acc[r.variant][r.episode];
    cell.first += r.value;
    cell.second += 1;
  }
  std::map<std::string, std::vector<std::pair<int64_t, double>>> out;
  for (const auto& [label, points] : acc) {
    std::vector<double> ys;
    std::vector<int64_t> xs;
    for (const auto& [x, sc] : points) {
      xs.push_back(x);
      ys.push_back(sc.first / sc.second);
    }
    ys = MovingAverage(ys, spec.window);
    auto& series = out[label];
    for (size_t i = 0; i < xs.size(); ++i) series.push_back({xs[i], ys[i]});
  }
  return out;
}

namespace {

std::string Escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string Num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

}  // namespace

std::string RenderSvg(const std::vector<CsvRow>& rows, const PlotSpec& spec) {
  const auto series = SeriesFromRows(rows, spec);
  double x_lo = 0.0, x_hi = 1.0, y_lo = 0.0, y_hi = 1.0;
  bool any = false;
  for (const auto& [label, pts] : series) {
    for (const auto& [x, y] : pts) {
      if (!std::isfinite(y)) continue;
      if (!any) {
        x_lo = x_hi = static_cast<double>(x);
        y_hi = y;
        any = true;
      }
      x_lo = std::min(x_lo, static_cast<double>(x));
      x_hi = std::max(x_hi, static_cast<double>(x));
      y_lo = std::min(y_lo, y);
      y_hi = std::max(y_hi, y);
    }
  }
  if (x_hi <= x_lo) x_hi = x_lo + 1.0;
  if (y_hi <= y_lo) y_hi = y_lo + 1.0;

  const double left = 70, right = 170, top = 40, bottom = 50;
  const double pw = spec.width - left - right;
  const double ph = spec.height - top - bottom;
  auto px = [&](double x) { return left + (x - x_lo) / (x_hi - x_lo) * pw; };
  auto py = [&](double y) { return top + (1.0 - (y - y_lo) / (y_hi - y_lo)) * ph; };

  static const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                  "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};
  std::ostringstream s;
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << spec.width
    << "\" height=\"" << spec.height << "\" viewBox=\"0 0 " << spec.width << " "
    << spec.height << "\">\n";
  s << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  if (!spec.title.empty()) {
    s << "<text x=\"" << Num(left + pw / 2) << "\" y=\"22\" text-anchor=\"middle\""
      << " font-family=\"sans-serif\" font-size=\"15\">" << Escape(spec.title)
      << "</text>\n";
  }
  s << "<g stroke=\"black\" stroke-width=\"1\">\n";
  s << "<line x1=\"" << Num(left) << "\" y1=\"" << Num(top + ph) << "\" x2=\""
    << Num(left + pw) << "\" y2=\"" << Num(top + ph) << "\"/>\n";
  s << "<line x1=\"" << Num(left) << "\" y1=\"" << Num(top) << "\" x2=\""
    << Num(left) << "\" y2=\"" << Num(top + ph) << "\"/>\n";
  s << "</g>\n";
  s << "<g font-family=\"sans-serif\" font-size=\"11\">\n";
  for (int t = 0; t <= 5; ++t) {
    const double xv = x_lo + (x_hi - x_lo) * t / 5.0;
    const double yv = y_lo + (y_hi - y_lo) * t / 5.0;
    s << "<text x=\"" << Num(px(xv)) << "\" y=\"" << Num(top + ph + 16)
      << "\" text-anchor=\"middle\">" << Num(xv) << "</text>\n";
    s << "<text x=\"" << Num(left - 6) << "\" y=\"" << Num(py(yv) + 4)
      << "\" text-anchor=\"end\">" << Num(yv) << "</text>\n";
  }
  s << "<text x=\"" << Num(left + pw / 2) << "\" y=\"" << Num(spec.height - 10)
    << "\" text-anchor=\"middle\">episode</text>\n";
  s << "<text transform=\"translate(16," << Num(top + ph / 2)
    << ") rotate(-90)\" text-anchor=\"middle\">" << Escape(spec.metric)
    << "</text>\n";
  s << "</g>\n";
  int idx = 0;
  for (const auto& [label, pts] : series) {
    const char* color = kColors[idx % 8];
    s << "<polyline fill=\"none\" stroke=\"" << color
      << "\" stroke-width=\"1.5\" points=\"";
    bool first = true;
    for (const auto& [x, y] : pts) {
      if (!std::isfinite(y)) continue;
      if (!first) s << " ";
      s << Num(px(static_cast<double>(x))) << "," << Num(py(y));
      first = false;
    }
    s << "\"/>\n";
    const double ly = top + 14 + 18 * idx;
    s << "<line x1=\"" << Num(left + pw + 12) << "\" y1=\"" << Num(ly)
      << "\" x2=\"" << Num(left + pw + 36) << "\" y2=\"" << Num(ly)
      << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
    s << "<text x=\"" << Num(left + pw + 42) << "\" y=\"" << Num(ly + 4)
      << "\" font-family=\"sans-serif\" font-size=\"11\">" << Escape(label)
      << "</text>\n";
    ++idx;
  }
  s << "</svg>\n";
  return s.str();
}

}  // namespace damavl
