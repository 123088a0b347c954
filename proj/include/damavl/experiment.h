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

#ifndef DAMAVL_EXPERIMENT_H_
#define DAMAVL_EXPERIMENT_H_

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "damavl/delay.h"
#include "damavl/eval.h"
#include "damavl/game.h"
#include "damavl/learners.h"
#include "json.hpp"

namespace damavl {

// Invalid configuration. `fields` names every offending entry.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(std::vector<std::string> fields);
  const std::vector<std::string>& fields() const { return fields_; }

 private:
  std::vector<std::string> fields_;
};

// One learner setup plotted as one curve.
struct SeriesSpec {
  std::string label;
  Variant variant = Variant::kDamavl;
  std::optional<SkipMetric> skip_metric;
  std::optional<ThresholdTiming> threshold_timing;
  DelayModel delays;
  // d_max for the finite-delay bonus; taken from the schedule when unset.
  std::optional<int64_t> max_delay;
  // C for the skipping bonus; K when unset.
  std::optional<double> skip_bound;
  double bonus_scale = 1.0;
};

struct ExperimentConfig {
  std::string name = "custom";
  MarkovGame game = AppendixBGame();
  std::vector<SeriesSpec> series;
  int64_t episodes = 50000;
  std::vector<uint64_t> seeds = {1, 2, 3, 4, 5};
  double delta = 0.01;
  int64_t eval_every = 100;
  std::string eval_method = "exact";  // or "mc"
  int64_t mc_rollouts = 2000;
  bool observable_device = false;
  // Episodes averaged for the final gap, and the plot smoothing window.
  int64_t smoothing_window = 1000;
  // Episodes before this fraction of K are ignored by the optimism report.
  double burn_in = 0.1;
  std::string output_dir = "out";
  bool save_traces = false;
  // Size guards.
  int64_t max_episodes = 10'000'000;
  int64_t max_joint_actions = 4096;
  int64_t max_eval_work = 4'000'000'000;

  // Throws ConfigError listing every problem.
  void Validate() const;
};

std::vector<std::string> PresetNames();
ExperimentConfig PresetConfig(const std::string& name);
// Delay model of the reference game: seq1 scaled by `factor`.
DelayModel DelaySequence(int64_t factor);
DelayModel InfinitePatternDelays();

// Accepts {"preset": name, ...overrides} or a full description. Relative
// game file references resolve against `base_dir`.
ExperimentConfig ConfigFromJson(const nlohmann::json& doc,
                                const std::string& base_dir = ".");
nlohmann::json ConfigToJson(const ExperimentConfig& config);

struct CsvRow {
  std::string run_id;
  std::string variant;
  uint64_t seed = 0;
  int64_t episode = 0;
  int agent = -1;  // -1 for joint metrics
  std::string metric;
  double value = 0.0;
};

// Outcome of one (series, seed) cell.
struct CellResult {
  std::string run_id;
  std::string series;
  uint64_t seed = 0;
  std::vector<CsvRow> rows;
  std::vector<int64_t> eval_episodes;
  std::vector<double> gaps;
  double final_gap = 0.0;  // mean gap over the last smoothing window
  std::vector<double> optimism_fraction;  // per agent
  std::vector<int64_t> max_pending;       // per agent
  int64_t skipped = 0;
  int64_t realized_skip_bound = 0;
  SkipAuditCounters audits;  // runtime checks, skip variant only
  SkipAuditCounters audits_realized;  // re-check with the realized C
  double train_seconds = 0.0;
  double eval_seconds = 0.0;
};

CellResult RunCell(const ExperimentConfig& config, size_t series_index,
                   uint64_t seed);
// File written for a run when traces are saved; '/' in labels becomes '_'.
std::string TraceFileName(const std::string& run_id);

struct RunManifest {
  std::string config_hash;
  std::string code_version;
  std::vector<std::string> files;
  nlohmann::json runs = nlohmann::json::array();
  double wall_seconds = 0.0;
};

// Runs every (series, seed) cell on DAMAVL_WORKERS threads and writes
// runs.csv, summary.json, gap.svg and manifest.json under output_dir.
RunManifest RunExperiment(const ExperimentConfig& config);
// Same, without touching the file system.
std::vector<CellResult> RunCells(const ExperimentConfig& config);

int WorkerCount();
std::string FormatCsv(const std::vector<CsvRow>& rows);
std::vector<CsvRow> ParseCsv(const std::string& text);
nlohmann::json SummaryJson(const ExperimentConfig& config,
                           const std::vector<CellResult>& cells);

struct PlotSpec {
  std::string metric = "gap";
  int agent = -1;
  // Moving-average window in evaluation points; 1 leaves data unchanged.
  int64_t window = 1;
  std::string title;
  int width = 720;
  int height = 440;
};

// Per-series (seed-averaged) curves of `spec.metric`.
std::map<std::string, std::vector<std::pair<int64_t, double>>> SeriesFromRows(
    const std::vector<CsvRow>& rows, const PlotSpec& spec);
std::vector<double> MovingAverage(const std::vector<double>& values,
                                  int64_t window);
std::string RenderSvg(const std::vector<CsvRow>& rows, const PlotSpec& spec);

}  // namespace damavl

#endif  // DAMAVL_EXPERIMENT_H_
