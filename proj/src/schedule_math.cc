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

#include "damavl/schedule_math.h"

#include <cmath>
#include <stdexcept>

namespace damavl {
namespace {

double OneMinusAlphaAt(int64_t j, int num_steps) {
  return static_cast<double>(j - 1) / static_cast<double>(num_steps + j);
}

void CheckSteps(int num_steps) {
  if (num_steps < 1) throw std::domain_error("H must be at least 1");
}

}  // namespace

double Iota(int num_agents, int num_steps, int num_states, int max_actions,
            int64_t episodes, double delta) {
  if (!(delta > 0.0 && delta < 1.0)) {
    throw std::domain_error("delta must lie in (0, 1)");
  }
  const double product = 4.0 * num_agents * num_steps * num_states *
                         max_actions * static_cast<double>(episodes);
  return std::log(product / delta);
}

double ParamContext::Iota() const {
  return damavl::Iota(num_agents, num_steps, num_states, max_actions, episodes,
                      delta);
}

void ParamContext::Validate() const {
  if (num_steps < 1 || num_agents < 1 || num_states < 1 || max_actions < 1) {
    throw std::invalid_argument("problem sizes must be positive");
  }
  if (episodes < 1) throw std::invalid_argument("K must be at least 1");
  if (!(delta > 0.0 && delta < 1.0)) {
    throw std::invalid_argument("delta must lie in (0, 1)");
  }
  if (max_delay < 0.0 || skip_bound < 0.0 || bonus_scale < 0.0) {
    throw std::invalid_argument("d_max, C and bonus scale must be >= 0");
  }
  if (!(Iota() > 0.0)) throw std::invalid_argument("iota must be positive");
}

double Alpha(int64_t n, int num_steps) {
  CheckSteps(num_steps);
  if (n < 1) throw std::domain_error("alpha_n needs n >= 1");
  return static_cast<double>(num_steps + 1) /
         static_cast<double>(num_steps + n);
}

std::vector<double> AlphaWeights(int64_t n, int num_steps) {
  CheckSteps(num_steps);
  if (n < 0) throw std::domain_error("alpha weights need n >= 0");
  std::vector<double> weights(n + 1, 0.0);
  if (n == 0) {
    weights[0] = 1.0;
    return weights;
  }
  double tail = 1.0;  // prod_{j=i+1}^{n} (1 - alpha_j)
  for (int64_t i = n; i >= 1; --i) {
    weights[i] = Alpha(i, num_steps) * tail;
    tail *= OneMinusAlphaAt(i, num_steps);
  }
  return weights;
}

double LogOneMinusAlphaProduct(int64_t n, int num_steps) {
  CheckSteps(num_steps);
  double total = 0.0;
  for (int64_t j = 2; j <= n; ++j) {
    total += std::log(OneMinusAlphaAt(j, num_steps));
  }
  return total;
}

double LogW(int64_t n, int num_steps) {
  if (n < 1) throw std::domain_error("w_n needs n >= 1");
  if (n == 1) return 0.0;
  return std::log(Alpha(n, num_steps)) -
         LogOneMinusAlphaProduct(n, num_steps);
}

double W(int64_t n, int num_steps) { return std::exp(LogW(n, num_steps)); }

double EtaGamma(int64_t n, int max_actions, double holding, double iota) {
  if (n < 1) throw std::domain_error("eta/gamma need n >= 1");
  if (holding < 0.0) throw std::domain_error("holding counter is negative");
  return std::sqrt(iota / (static_cast<double>(n) * max_actions + holding));
}

Bonus BonusesFinite(int64_t n, int max_actions, double holding,
                    double max_delay, int num_steps, double iota) {
  if (n <= 0) return {};
  const double h = num_steps;
  const double nd = static_cast<double>(n);
  Bonus b;
  b.upper = 12.0 * h * h *
                std::sqrt((nd * max_actions + holding) / (nd * nd) * iota) +
            4.0 * h * h * (max_delay / nd) * iota;
  b.lower = 2.0 * std::sqrt(h * h * h / nd * iota) +
            2.0 * h * h * (max_delay / nd) * iota;
  return b;
}

Bonus BonusesSkip(int64_t n, double holding, double skip_bound,
                  int max_actions, int num_steps, double iota) {
  if (n <= 0) return {};
  const double h = num_steps;
  const double nd = static_cast<double>(n);
  Bonus b;
  b.upper = 24.0 * h * h * skip_bound * std::sqrt(holding / (nd * nd)) * iota +
            18.0 * h * h * std::sqrt(max_actions / nd) * iota;
  b.lower = 2.0 * h * h * (std::sqrt(std::sqrt(4.0 * holding)) + 2.0) / nd +
            2.0 * std::sqrt(h * h * h / nd * iota);
  return b;
}

AlphaTable::AlphaTable(int num_steps, int64_t capacity)
    : num_steps_(num_steps),
      alpha_(capacity + 1, 0.0),
      one_minus_alpha_(capacity + 1, 0.0),
      log_w_(capacity + 1, 0.0),
      log_tail_(capacity + 1, 0.0) {
  CheckSteps(num_steps);
  double log_prod = 0.0;
  for (int64_t n = 1; n <= capacity; ++n) {
    alpha_[n] = damavl::Alpha(n, num_steps);
    one_minus_alpha_[n] = OneMinusAlphaAt(n, num_steps);
    if (n >= 2) log_prod += std::log(one_minus_alpha_[n]);
    log_w_[n] = n == 1 ? 0.0 : std::log(alpha_[n]) - log_prod;
    log_tail_[n] = log_prod;
  }
}

double AlphaTable::MixtureCdf(int64_t n, int64_t i) const {
  if (i <= 0) return 0.0;
  if (i >= n) return 1.0;
  return std::exp(log_tail_.at(n) - log_tail_.at(i));
}

int64_t AlphaTable::SampleComponent(int64_t n, double u) const {
  if (n < 1) throw std::domain_error("mixture needs n >= 1");
  int64_t lo = 1;
  int64_t hi = n;
  while (lo < hi) {
    const int64_t mid = lo + (hi - lo) / 2;
    if (MixtureCdf(n, mid) > u) {
      hi = mid;
    } else {
      lo = mid + 1;
    }
  }
  return lo;
}

}  // namespace damavl
