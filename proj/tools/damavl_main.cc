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

// Command-line front end: train, eval and plot.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "damavl/certify.h"
#include "damavl/eval.h"
#include "damavl/experiment.h"
#include "damavl/learners.h"
#include "json.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kConfigError = 2;
constexpr int kGuardBreach = 3;

using damavl::ConfigError;
using nlohmann::json;

std::string ReadFile(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError({"cannot read " + path});
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<uint64_t> ParseSeeds(const std::string& text) {
  std::vector<uint64_t> seeds;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      size_t used = 0;
      seeds.push_back(std::stoull(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw ConfigError({"--seeds ('" + item + "')"});
    }
  }
  return seeds;
}

struct TrainArgs {
  std::string config;
  std::string preset;
  int64_t episodes = 0;
  std::string seeds;
  int64_t eval_every = 0;
  std::string eval_method;
  std::string out;
  bool save_traces = false;
};

int Train(const TrainArgs& a) {
  damavl::ExperimentConfig config;
  if (!a.config.empty()) {
    json doc;
    try {
      doc = json::parse(ReadFile(a.config));
    } catch (const json::exception& e) {
      throw ConfigError({std::string("config (") + e.what() + ")"});
    }
    const std::string base =
        std::filesystem::path(a.config).parent_path().string();
    config = damavl::ConfigFromJson(doc, base.empty() ? "." : base);
  } else {
    config = damavl::PresetConfig(a.preset);
  }
  if (a.episodes != 0) config.episodes = a.episodes;
  if (!a.seeds.empty()) config.seeds = ParseSeeds(a.seeds);
  if (a.eval_every != 0) config.eval_every = a.eval_every;
  if (!a.eval_method.empty()) config.eval_method = a.eval_method;
  if (!a.out.empty()) config.output_dir = a.out;
  if (a.save_traces) config.save_traces = true;
  config.Validate();

  const damavl::RunManifest manifest = damavl::RunExperiment(config);
  std::printf("%-20s %6s %12s %10s\n", "series", "seed", "final_gap",
              "seconds");
  for (const auto& r : manifest.runs) {
    std::printf("%-20s %6llu %12.6f %10.1f\n",
                r["series"].get<std::string>().c_str(),
                static_cast<unsigned long long>(r["seed"].get<uint64_t>()),
                r["final_gap"].get<double>(), r["train_seconds"].get<double>() +
                        r["eval_seconds"].get<double>());
  }
  const json summary =
      json::parse(ReadFile(config.output_dir + "/summary.json"));
  for (const auto& [label, s] : summary["series"].items()) {
    std::printf("%-20s mean final gap %.6f\n", label.c_str(),
                s["mean_final_gap"].get<double>());
  }
  std::printf("wrote %s (config %s)\n", config.output_dir.c_str(),
              manifest.config_hash.c_str());
  return kOk;
}

struct EvalArgs {
  std::string trace;
  std::string game = "appendix-b";
  std::string method = "exact";
  int64_t k = 0;
  int h = 0;
  int s = -1;
  int64_t rollouts = 10000;
  uint64_t seed = 1;
  bool observable = false;
  int64_t max_work = 4'000'000'000;
};

int Eval(const EvalArgs& a) {
  if (a.method != "exact" && a.method != "mc") {
    throw ConfigError({"--method"});
  }
  damavl::MarkovGame game = damavl::AppendixBGame();
  if (a.game != "appendix-b") {
    game = damavl::GameFromJson(json::parse(ReadFile(a.game)));
  }
  auto trace = std::make_shared<const damavl::TrainingTrace>(
      damavl::TraceFromJson(json::parse(ReadFile(a.trace))));
  damavl::CertifiedPolicy cert(trace);
  damavl::EvalOptions options;
  options.observable_device = a.observable;
  options.max_work = a.max_work;
  const damavl::EvalStart start =
      a.k == 0 ? damavl::EvalStart::Output()
               : damavl::EvalStart::Subpolicy(
                     a.k, a.h, a.s < 0 ? game.InitialState() : a.s);
  damavl::Evaluator evaluator(cert, game, options);
  damavl::GapReport rep;
  if (a.method == "exact") {
    rep = evaluator.Gap(start);
  } else {
    const auto mc = damavl::McValue(cert, game, start, a.rollouts, a.seed);
    rep.method = "monte-carlo";
    rep.v_pi = mc.mean;
    rep.gap = -1e300;
    for (int m = 0; m < cert.NumAgents(); ++m) {
      rep.v_br.push_back(evaluator.BestResponse(m, start));
      rep.gap = std::max(rep.gap, rep.v_br[m] - rep.v_pi[m]);
      rep.radius = std::max(rep.radius, 4.0 * mc.stderr_[m]);
    }
  }
  json out = {{"method", rep.method},
              {"v_pi", rep.v_pi},
              {"v_br", rep.v_br},
              {"gap", rep.gap}};
  if (a.method == "mc") out["radius"] = rep.radius;
  std::cout << out.dump(2) << "\n";
  return kOk;
}

struct PlotArgs {
  std::string csv;
  std::string out;
  std::string metric = "gap";
  int agent = -1;
  int64_t window = 1;
  std::string title;
};

int Plot(const PlotArgs& a) {
  std::vector<damavl::CsvRow> rows;
  try {
    rows = damavl::ParseCsv(ReadFile(a.csv));
  } catch (const std::runtime_error& e) {
    throw ConfigError({a.csv + " (" + e.what() + ")"});
  }
  if (a.window < 1) throw ConfigError({"--window"});
  damavl::PlotSpec spec;
  spec.metric = a.metric;
  spec.agent = a.agent;
  spec.window = a.window;
  spec.title = a.title;
  std::ofstream f(a.out);
  f << damavl::RenderSvg(rows, spec);
  if (!f) throw ConfigError({"cannot write " + a.out});
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Delay-aware multi-agent V-learning experiments"};
  app.require_subcommand(1);

  TrainArgs train;
  auto* t = app.add_subcommand("train", "Train and evaluate an experiment");
  auto* src = t->add_option_group("source");
  src->add_option("--config", train.config, "Experiment JSON file");
  src->add_option("--preset", train.preset, "fig1-left, fig1-center or fig1-right");
  src->require_option(1);
  t->add_option("--episodes", train.episodes, "Episodes K");
  t->add_option("--seeds", train.seeds, "Comma separated seeds");
  t->add_option("--eval-every", train.eval_every, "Evaluation cadence");
  t->add_option("--eval-method", train.eval_method, "exact or mc");
  t->add_option("--out", train.out, "Output directory");
  t->add_flag("--save-traces", train.save_traces, "Write training traces");

  EvalArgs eval;
  auto* e = app.add_subcommand("eval", "CCE-gap of a saved training trace");
  e->add_option("--trace", eval.trace, "Trace JSON")->required();
  e->add_option("--game", eval.game, "Game JSON or appendix-b");
  e->add_option("--method", eval.method, "exact or mc");
  e->add_option("--k", eval.k, "Start episode; 0 evaluates the full output");
  e->add_option("--step", eval.h, "Start step (0-based)");
  e->add_option("--state", eval.s, "Start state; defaults to the initial state");
  e->add_option("--rollouts", eval.rollouts, "Monte-Carlo rollouts");
  e->add_option("--seed", eval.seed, "Monte-Carlo seed");
  e->add_flag("--observable-device", eval.observable,
              "Let the deviator see the device");
  e->add_option("--max-work", eval.max_work, "Best-response work guard");

  PlotArgs plot;
  auto* p = app.add_subcommand("plot", "Render a run CSV as SVG");
  p->add_option("--csv", plot.csv, "runs.csv")->required();
  p->add_option("--out", plot.out, "Output SVG")->required();
  p->add_option("--metric", plot.metric, "Metric column value");
  p->add_option("--agent", plot.agent, "Agent, -1 for joint metrics");
  p->add_option("--window", plot.window, "Moving-average window in points");
  p->add_option("--title", plot.title, "Chart title");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& err) {
    return app.exit(err);
  } catch (const CLI::CallForAllHelp& err) {
    return app.exit(err);
  } catch (const CLI::ParseError& err) {
    app.exit(err);
    return kConfigError;
  }

  try {
    if (t->parsed()) return Train(train);
    if (e->parsed()) return Eval(eval);
    if (p->parsed()) return Plot(plot);
  } catch (const damavl::GuardError& err) {
    std::fprintf(stderr, "guard: %s\n", err.what());
    return kGuardBreach;
  } catch (const ConfigError& err) {
    std::fprintf(stderr, "%s\n", err.what());
    return kConfigError;
  } catch (const json::exception& err) {
    std::fprintf(stderr, "invalid input: %s\n", err.what());
    return kConfigError;
  } catch (const std::invalid_argument& err) {
    std::fprintf(stderr, "invalid input: %s\n", err.what());
    return kConfigError;
  } catch (const std::out_of_range& err) {
    std::fprintf(stderr, "invalid input: %s\n", err.what());
    return kConfigError;
  } catch (const std::exception& err) {
    std::fprintf(stderr, "error: %s\n", err.what());
    return 1;
  }
  return kOk;
}
