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

#ifndef DAMAVL_SCHEDULE_MATH_H_
#define DAMAVL_SCHEDULE_MATH_H_

#include <cstdint>
#include <vector>

namespace damavl {

// Problem sizes and confidence level shared by every parameter formula.
struct ParamContext {
  int num_steps = 1;     // H
  int num_agents = 1;    // M
  int num_states = 1;    // S
  int max_actions = 1;   // A = max_m |A_m|
  int64_t episodes = 1;  // K, the planned horizon
  double delta = 0.01;
  double max_delay = 0.0;   // d_max, finite-delay bonuses
  double skip_bound = 1.0;  // C, reward-skipping bonuses
  // Multiplies both bonuses; 1 keeps the default constants.
  double bonus_scale = 1.0;

  double Iota() const;
  void Validate() const;
};

// log(4 M H S A K / delta).
double Iota(int num_agents, int num_steps, int num_states, int max_actions,
            int64_t episodes, double delta);

// Learning rate (H + 1) / (H + n), n >= 1.
double Alpha(int64_t n, int num_steps);

// Mixture weights (alpha_n^0, ..., alpha_n^n), built from the product
// definition alpha_n^i = alpha_i * prod_{j=i+1}^{n} (1 - alpha_j).
std::vector<double> AlphaWeights(int64_t n, int num_steps);

// sum_{j=2}^{n} log(1 - alpha_j); zero for n <= 1.
double LogOneMinusAlphaProduct(int64_t n, int num_steps);

// log w_n with w_n = alpha_n * prod_{i=2}^{n} (1 - alpha_i)^{-1}, w_1 = 1.
double LogW(int64_t n, int num_steps);
double W(int64_t n, int num_steps);

// Shared exploration and learning rate sqrt(iota / (n A + T)).
double EtaGamma(int64_t n, int max_actions, double holding, double iota);

struct Bonus {
  double upper = 0.0;
  double lower = 0.0;
};

Bonus BonusesFinite(int64_t n, int max_actions, double holding,
                    double max_delay, int num_steps, double iota);

// holding is the holding counter at the happened count n'.
Bonus BonusesSkip(int64_t n, double holding, double skip_bound,
                  int max_actions, int num_steps, double iota);

// Cached alpha_n and log w_n for n = 1..capacity. Values are produced by the
// same sequential accumulation as the free functions, so they agree bit for
// bit.
class AlphaTable {
 public:
  AlphaTable(int num_steps, int64_t capacity);

  int NumSteps() const { return num_steps_; }
  int64_t Capacity() const { return static_cast<int64_t>(alpha_.size()) - 1; }
  double Alpha(int64_t n) const { return alpha_.at(n); }
  double LogW(int64_t n) const { return log_w_.at(n); }
  // 1 - alpha_n computed as (n - 1) / (H + n).
  double OneMinusAlpha(int64_t n) const { return one_minus_alpha_.at(n); }
  // sum_{j=2}^{n} log(1 - alpha_j); zero for n <= 1.
  double LogTail(int64_t n) const { return log_tail_.at(n); }
  // P(I <= i) for I ~ alpha_n^I, that is prod_{j=i+1}^{n} (1 - alpha_j).
  double MixtureCdf(int64_t n, int64_t i) const;
  // Inverse-CDF draw of a component index in [1, n] for u in [0, 1).
  int64_t SampleComponent(int64_t n, double u) const;

 private:
  int num_steps_;
  std::vector<double> alpha_;
  std::vector<double> one_minus_alpha_;
  std::vector<double> log_w_;
  std::vector<double> log_tail_;
};

}  // namespace damavl

#endif  // DAMAVL_SCHEDULE_MATH_H_
