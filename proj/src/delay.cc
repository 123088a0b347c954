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

#include "damavl/delay.h"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace damavl {

Delay Delay::Finite(int64_t episodes) {
  if (episodes < 0) throw std::invalid_argument("delays are non-negative");
  return Delay(episodes);
}

int64_t Delay::Episodes() const {
  if (IsInfinite()) throw std::logic_error("infinite delay has no length");
  return value_;
}

nlohmann::json DelayToJson(const Delay& d) {
  if (d.IsInfinite()) return "inf";
  return d.Episodes();
}

Delay DelayFromJson(const nlohmann::json& node) {
  if (node.is_string()) {
    const std::string text = node.get<std::string>();
    if (text == "inf" || text == "infinite" || text == "infinity") {
      return Delay::Infinite();
    }
    throw std::invalid_argument("unknown delay literal '" + text + "'");
  }
  if (node.is_number_integer() || node.is_number_unsigned()) {
    return Delay::Finite(node.get<int64_t>());
  }
  throw std::invalid_argument("delay must be an integer or \"inf\"");
}

DelaySchedule DelaySchedule::Constant(int64_t d) {
  if (d < 0) throw std::invalid_argument("constant delay must be >= 0");
  DelaySchedule s;
  s.kind_ = Kind::kConstant;
  s.a_ = d;
  return s;
}

DelaySchedule DelaySchedule::AffinePeriodic(int64_t c0, int64_t c1,
                                            int64_t period) {
  if (period < 1) throw std::invalid_argument("period must be positive");
  if (c0 < 0 || c0 - std::max<int64_t>(c1, 0) * (period - 1) < 0 ||
      c0 - std::min<int64_t>(c1, 0) * (period - 1) < 0) {
    throw std::invalid_argument("affine-periodic schedule goes negative");
  }
  DelaySchedule s;
  s.kind_ = Kind::kAffinePeriodic;
  s.a_ = c0;
  s.b_ = c1;
  s.period_ = period;
  return s;
}

DelaySchedule DelaySchedule::Scaled(DelaySchedule base, int64_t factor) {
  if (factor < 0) throw std::invalid_argument("scale factor must be >= 0");
  DelaySchedule s;
  s.kind_ = Kind::kScaled;
  s.a_ = factor;
  s.base_ = std::make_shared<const DelaySchedule>(std::move(base));
  return s;
}

DelaySchedule DelaySchedule::InfinitePattern(int64_t period, int64_t cutoff,
                                             Delay otherwise) {
  if (period < 1) throw std::invalid_argument("period must be positive");
  DelaySchedule s;
  s.kind_ = Kind::kInfinitePattern;
  s.period_ = period;
  s.a_ = cutoff;
  s.other_ = otherwise;
  return s;
}

DelaySchedule DelaySchedule::ExplicitTable(std::vector<Delay> values,
                                           Delay fallback) {
  DelaySchedule s;
  s.kind_ = Kind::kExplicitTable;
  s.table_ = std::make_shared<const std::vector<Delay>>(std::move(values));
  s.other_ = fallback;
  return s;
}

Delay DelaySchedule::At(int64_t n) const {
  if (n < 1) throw std::out_of_range("happening order starts at 1");
  switch (kind_) {
    case Kind::kZero:
      return Delay::Finite(0);
    case Kind::kConstant:
      return Delay::Finite(a_);
    case Kind::kAffinePeriodic:
      return Delay::Finite(a_ - b_ * (n % period_));
    case Kind::kScaled: {
      const Delay d = base_->At(n);
      if (d.IsInfinite()) return d;
      return Delay::Finite(d.Episodes() * a_);
    }
    case Kind::kInfinitePattern:
      return n % period_ <= a_ ? Delay::Infinite() : other_;
    case Kind::kExplicitTable:
      if (n <= static_cast<int64_t>(table_->size())) return (*table_)[n - 1];
      return other_;
  }
  return Delay::Finite(0);
}

int64_t DelaySchedule::MaxFiniteDelay(int64_t horizon) const {
  switch (kind_) {
    case Kind::kZero:
      return 0;
    case Kind::kConstant:
      return a_;
    case Kind::kExplicitTable: {
      int64_t best = 0;
      const int64_t limit =
          std::min<int64_t>(horizon, static_cast<int64_t>(table_->size()));
      for (int64_t i = 0; i < limit; ++i) {
        if (!(*table_)[i].IsInfinite()) {
          best = std::max(best, (*table_)[i].Episodes());
        }
      }
      if (horizon > limit && !other_.IsInfinite()) {
        best = std::max(best, other_.Episodes());
      }
      return best;
    }
    default: {
      int64_t best = 0;
      const int64_t limit = std::min<int64_t>(horizon, 4 * period_ + 64);
      for (int64_t n = 1; n <= limit; ++n) {
        const Delay d = At(n);
        if (!d.IsInfinite()) best = std::max(best, d.Episodes());
      }
      return best;
    }
  }
}

bool DelaySchedule::HasInfinite(int64_t horizon) const {
  switch (kind_) {
    case Kind::kZero:
    case Kind::kConstant:
    case Kind::kAffinePeriodic:
      return false;
    case Kind::kScaled:
      return base_->HasInfinite(horizon);
    case Kind::kInfinitePattern:
      return a_ >= 0 && horizon >= 1;
    case Kind::kExplicitTable: {
      const int64_t limit =
          std::min<int64_t>(horizon, static_cast<int64_t>(table_->size()));
      for (int64_t i = 0; i < limit; ++i) {
        if ((*table_)[i].IsInfinite()) return true;
      }
      return horizon > limit && other_.IsInfinite();
    }
  }
  return false;
}

DelaySchedule DelaySchedule::FromJson(const nlohmann::json& node) {
  if (node.is_array()) {
    std::vector<Delay> values;
    for (const auto& v : node) values.push_back(DelayFromJson(v));
    return ExplicitTable(std::move(values), Delay::Finite(0));
  }
  const std::string kind = node.at("kind").get<std::string>();
  if (kind == "zero") return Zero();
  if (kind == "constant") return Constant(node.at("d").get<int64_t>());
  if (kind == "affine-periodic") {
    return AffinePeriodic(node.at("c0").get<int64_t>(),
                          node.at("c1").get<int64_t>(),
                          node.at("period").get<int64_t>());
  }
  if (kind == "scaled") {
    return Scaled(FromJson(node.at("base")), node.at("factor").get<int64_t>());
  }
  if (kind == "infinite-pattern") {
    return InfinitePattern(node.at("period").get<int64_t>(),
                           node.at("infinite-if-mod-leq").get<int64_t>(),
                           DelayFromJson(node.value("else", nlohmann::json(0))));
  }
  if (kind == "explicit-table") {
    std::vector<Delay> values;
    for (const auto& v : node.at("values")) values.push_back(DelayFromJson(v));
    return ExplicitTable(std::move(values),
                         DelayFromJson(node.value("default", nlohmann::json(0))));
  }
  throw std::invalid_argument("unknown delay schedule kind '" + kind + "'");
}

nlohmann::json DelaySchedule::ToJson() const {
  switch (kind_) {
    case Kind::kZero:
      return {{"kind", "zero"}};
    case Kind::kConstant:
      return {{"kind", "constant"}, {"d", a_}};
    case Kind::kAffinePeriodic:
      return {{"kind", "affine-periodic"},
              {"c0", a_},
              {"c1", b_},
              {"period", period_}};
    case Kind::kScaled:
      return {{"kind", "scaled"}, {"base", base_->ToJson()}, {"factor", a_}};
    case Kind::kInfinitePattern:
      return {{"kind", "infinite-pattern"},
              {"period", period_},
              {"infinite-if-mod-leq", a_},
              {"else", DelayToJson(other_)}};
    case Kind::kExplicitTable: {
      nlohmann::json values = nlohmann::json::array();
      for (const Delay& d : *table_) values.push_back(DelayToJson(d));
      return {{"kind", "explicit-table"},
              {"values", values},
              {"default", DelayToJson(other_)}};
    }
  }
  return {};
}

void DelayModel::Set(int agent, int step, int state, DelaySchedule schedule) {
  entries_[{agent, step, state}] = std::move(schedule);
}

const DelaySchedule& DelayModel::Get(int agent, int step, int state) const {
  auto it = entries_.find({agent, step, state});
  return it == entries_.end() ? default_ : it->second;
}

int64_t DelayModel::MaxFiniteDelay(int64_t horizon) const {
  int64_t best = default_.MaxFiniteDelay(horizon);
  for (const auto& [key, schedule] : entries_) {
    best = std::max(best, schedule.MaxFiniteDelay(horizon));
  }
  return best;
}

bool DelayModel::HasInfinite(int64_t horizon) const {
  if (default_.HasInfinite(horizon)) return true;
  for (const auto& [key, schedule] : entries_) {
    if (schedule.HasInfinite(horizon)) return true;
  }
  return false;
}

DelayModel DelayModel::FromJson(const nlohmann::json& node) {
  DelayModel model;
  if (node.contains("default")) {
    model.default_ = DelaySchedule::FromJson(node.at("default"));
  }
  if (node.contains("entries")) {
    for (const auto& e : node.at("entries")) {
      model.Set(e.at("agent").get<int>(), e.at("step").get<int>(),
                e.at("state").get<int>(),
                DelaySchedule::FromJson(e.at("schedule")));
    }
  }
  return model;
}

nlohmann::json DelayModel::ToJson() const {
  nlohmann::json entries = nlohmann::json::array();
  for (const auto& [key, schedule] : entries_) {
    entries.push_back({{"agent", std::get<0>(key)},
                       {"step", std::get<1>(key)},
                       {"state", std::get<2>(key)},
                       {"schedule", schedule.ToJson()}});
  }
  return {{"default", default_.ToJson()}, {"entries", entries}};
}

}  // namespace damavl
