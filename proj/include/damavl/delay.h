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

#ifndef DAMAVL_DELAY_H_
#define DAMAVL_DELAY_H_

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <tuple>
#include <vector>

#include "json.hpp"

namespace damavl {

// Reward delay in episodes, or the infinite sentinel. Infinite delays never
// take part in arithmetic.
class Delay {
 public:
  static Delay Finite(int64_t episodes);
  static Delay Infinite() { return Delay(kInfiniteTag); }

  bool IsInfinite() const { return value_ == kInfiniteTag; }
  int64_t Episodes() const;

  // Episode at whose end the reward of a visit made in visit_episode arrives.
  std::optional<int64_t> ArrivalEpisode(int64_t visit_episode) const {
    if (IsInfinite()) return std::nullopt;
    return visit_episode + value_;
  }

  bool operator==(const Delay&) const = default;

 private:
  static constexpr int64_t kInfiniteTag = -1;
  explicit Delay(int64_t value) : value_(value) {}
  int64_t value_;
};

nlohmann::json DelayToJson(const Delay& d);
Delay DelayFromJson(const nlohmann::json& node);

// Delay as a function of the happening order n (1-based) of visits to one
// (agent, step, state) triple.
class DelaySchedule {
 public:
  enum class Kind {
    kZero,
    kConstant,
    kAffinePeriodic,  // c0 - c1 * (n mod period)
    kScaled,          // factor * base(n)
    kInfinitePattern, // infinite when n mod period <= cutoff, else fixed
    kExplicitTable,   // values[n - 1], then fallback
  };

  DelaySchedule() = default;
  static DelaySchedule Zero() { return {}; }
  static DelaySchedule Constant(int64_t d);
  static DelaySchedule AffinePeriodic(int64_t c0, int64_t c1, int64_t period);
  static DelaySchedule Scaled(DelaySchedule base, int64_t factor);
  static DelaySchedule InfinitePattern(int64_t period, int64_t cutoff,
                                       Delay otherwise);
  static DelaySchedule ExplicitTable(std::vector<Delay> values,
                                     Delay fallback);

  Kind kind() const { return kind_; }
  Delay At(int64_t n) const;

  // Largest finite delay the schedule can produce for n <= horizon, and
  // whether any infinite delay occurs there.
  int64_t MaxFiniteDelay(int64_t horizon) const;
  bool HasInfinite(int64_t horizon) const;

  static DelaySchedule FromJson(const nlohmann::json& node);
  nlohmann::json ToJson() const;

 private:
  Kind kind_ = Kind::kZero;
  int64_t a_ = 0;
  int64_t b_ = 0;
  int64_t period_ = 1;
  Delay other_ = Delay::Finite(0);
  std::shared_ptr<const DelaySchedule> base_;
  std::shared_ptr<const std::vector<Delay>> table_;
};

// Delay schedules for every (agent, step, state); unlisted triples use the
// default schedule.
class DelayModel {
 public:
  DelayModel() = default;
  explicit DelayModel(DelaySchedule fallback) : default_(std::move(fallback)) {}

  void Set(int agent, int step, int state, DelaySchedule schedule);
  const DelaySchedule& Get(int agent, int step, int state) const;
  Delay At(int agent, int step, int state, int64_t n) const {
    return Get(agent, step, state).At(n);
  }

  int64_t MaxFiniteDelay(int64_t horizon) const;
  bool HasInfinite(int64_t horizon) const;
  const std::map<std::tuple<int, int, int>, DelaySchedule>& Entries() const {
    return entries_;
  }

  static DelayModel FromJson(const nlohmann::json& node);
  nlohmann::json ToJson() const;

 private:
  DelaySchedule default_;
  std::map<std::tuple<int, int, int>, DelaySchedule> entries_;
};

}  // namespace damavl

#endif  // DAMAVL_DELAY_H_
