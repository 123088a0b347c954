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

#include "damavl/ledger.h"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace damavl {
namespace {

// phi > sqrt(threshold) on integers, without overflow.
bool ExceedsSqrt(int64_t value, int64_t threshold) {
  if (value <= 0) return false;
  const unsigned __int128 v = static_cast<unsigned __int128>(value);
  return v * v > static_cast<unsigned __int128>(threshold);
}

FedRecord ToFed(const VisitRecord& r) {
  FedRecord f;
  f.order = r.order;
  f.action = r.action;
  f.prob = r.prob;
  f.upper_next = r.upper_next;
  f.lower_next = r.lower_next;
  f.reward = r.reward;
  f.gamma = r.gamma;
  return f;
}

}  // namespace

VisitLedger::VisitLedger(LedgerOptions options) : options_(options) {}

double VisitLedger::Threshold(int64_t happened) const {
  const int64_t committed = holding_.back();
  if (options_.timing == ThresholdTiming::kCommitted) {
    return static_cast<double>(committed);
  }
  const int64_t earliest =
      unreceived_.empty() ? happened : *unreceived_.begin();
  return static_cast<double>(committed + (happened - earliest));
}

PrepareResult VisitLedger::BeginVisit(int64_t episode) {
  if (static_cast<int64_t>(records_.size()) != prepared_) {
    throw std::logic_error("previous visit was prepared but never recorded");
  }
  if (!records_.empty() && records_.back().episode >= episode) {
    throw std::logic_error("visit episodes must be strictly increasing");
  }
  PrepareResult out;
  const int64_t happened = prepared_ + 1;
  out.happened = happened;

  if (options_.mode == LedgerMode::kSkip) {
    const double threshold = Threshold(happened);
    const int64_t theta = static_cast<int64_t>(threshold);
    out.threshold = threshold;
    for (auto it = unreceived_.begin(); it != unreceived_.end();) {
      VisitRecord& rec = records_[*it - 1];
      const int64_t age = happened - rec.order;
      rec.phi += age;
      phi_sum_ += age;
      ++rec.unreceived_scans;
      max_blocking_ = std::max(max_blocking_, rec.unreceived_scans);
      const bool skip = options_.metric == SkipMetric::kPhi
                            ? ExceedsSqrt(rec.phi, theta)
                            : ExceedsSqrt(age, theta);
      if (!skip) {
        ++it;
        continue;
      }
      rec.status = VisitStatus::kSkipped;
      FedRecord f;
      f.order = rec.order;
      f.action = rec.action;
      f.prob = rec.prob;
      f.upper_next = options_.skipped_upper;
      f.lower_next = 0.0;
      f.reward = 0.0;
      f.gamma = rec.gamma;
      f.skipped = true;
      out.fed.push_back(f);
      out.newly_skipped.push_back(rec.order);
      ++skipped_count_;
      it = unreceived_.erase(it);
    }
  }

  int64_t pending = 0;
  if (options_.mode == LedgerMode::kNaive) {
    for (int64_t order : naive_buffer_) {
      VisitRecord& rec = records_[order - 1];
      rec.status = VisitStatus::kConsumed;
      out.fed.push_back(ToFed(rec));
    }
    naive_buffer_.clear();
    usable_ += static_cast<int64_t>(out.fed.size());
    pending = static_cast<int64_t>(unreceived_.size());
    out.earliest = unreceived_.empty() ? happened : *unreceived_.begin();
  } else {
    while (next_feed_ < happened) {
      VisitRecord& rec = records_[next_feed_ - 1];
      if (rec.status == VisitStatus::kUnreceived) break;
      if (rec.status == VisitStatus::kReceivedUnusable) {
        rec.status = VisitStatus::kConsumed;
        out.fed.push_back(ToFed(rec));
      }
      ++next_feed_;
    }
    std::sort(out.fed.begin(), out.fed.end(),
              [](const FedRecord& a, const FedRecord& b) {
                return a.order < b.order;
              });
    usable_ += static_cast<int64_t>(out.fed.size());
    pending = (happened - 1) - usable_;
    out.earliest = next_feed_;
  }
  for (const FedRecord& f : out.fed) consumed_.push_back(f.order);

  last_pending_ = pending;
  holding_.push_back(holding_.back() + pending);
  earliest_.push_back(out.earliest);
  usable_after_.push_back(usable_);
  prepared_ = happened;
  out.usable = usable_;
  out.holding = holding_.back();
  if (options_.mode == LedgerMode::kSkip && options_.audit) {
    SkipAuditPoint point;
    point.threshold = out.threshold;
    point.phi_sum = phi_sum_;
    point.max_blocking = max_blocking_;
    point.skipped = skipped_count_;
    audit_history_.push_back(point);
    AccumulateSkipAudit(point, options_.skip_bound, audits_);
  }
  return out;
}

void AccumulateSkipAudit(const SkipAuditPoint& point, double skip_bound,
                         SkipAuditCounters& counters) {
  const double t = point.threshold;
  ++counters.checks;
  const double phi_bound = skip_bound * t;
  if (static_cast<double>(point.phi_sum) > phi_bound) ++counters.phi_violations;
  if (phi_bound > 0) {
    counters.worst_phi_ratio =
        std::max(counters.worst_phi_ratio,
                 static_cast<double>(point.phi_sum) / phi_bound);
  }
  const double blocking_bound = std::pow(4.0 * t, 0.25) + 1.0;
  if (static_cast<double>(point.max_blocking) > blocking_bound) {
    ++counters.blocking_violations;
  }
  counters.worst_blocking_ratio =
      std::max(counters.worst_blocking_ratio,
               static_cast<double>(point.max_blocking) / blocking_bound);
  const double skipped_bound = 2.0 * skip_bound * std::sqrt(t);
  if (static_cast<double>(point.skipped) > skipped_bound) {
    ++counters.skipped_violations;
  }
  if (skipped_bound > 0) {
    counters.worst_skipped_ratio =
        std::max(counters.worst_skipped_ratio,
                 static_cast<double>(point.skipped) / skipped_bound);
  }
}

int64_t VisitLedger::RecordVisit(int64_t episode, int action, double prob,
                                 double upper_next, double lower_next,
                                 double gamma, double reward, Delay delay) {
  if (static_cast<int64_t>(records_.size()) + 1 != prepared_) {
    throw std::logic_error("RecordVisit without a matching BeginVisit");
  }
  VisitRecord rec;
  rec.order = prepared_;
  rec.episode = episode;
  rec.action = action;
  rec.prob = prob;
  rec.upper_next = upper_next;
  rec.lower_next = lower_next;
  rec.reward = reward;
  rec.gamma = gamma;
  rec.delay = delay;
  records_.push_back(rec);
  unreceived_.insert(rec.order);
  if (auto arrival = delay.ArrivalEpisode(episode)) {
    arrivals_.push({*arrival, rec.order});
  }
  return rec.order;
}

void VisitLedger::Deliver(int64_t episode) {
  while (!arrivals_.empty() && arrivals_.top().first <= episode) {
    const int64_t order = arrivals_.top().second;
    arrivals_.pop();
    VisitRecord& rec = records_[order - 1];
    if (rec.status == VisitStatus::kSkipped) {
      rec.arrived_after_skip = true;
      continue;
    }
    rec.status = VisitStatus::kReceivedUnusable;
    unreceived_.erase(order);
    ++delivered_;
    if (options_.mode == LedgerMode::kNaive) naive_buffer_.push_back(order);
  }
}

int64_t BruteForceEarliest(std::span<const Delay> delays,
                           std::span<const int64_t> episodes, int64_t i,
                           const std::set<int64_t>& excluded) {
  const int64_t k_i = episodes[i - 1];
  for (int64_t j = 1; j < i; ++j) {
    if (excluded.count(j)) continue;
    const Delay& d = delays[j - 1];
    if (d.IsInfinite() || d.Episodes() + episodes[j - 1] > k_i - 1) return j;
  }
  return i;
}

int64_t BruteForceHolding(std::span<const Delay> delays,
                          std::span<const int64_t> episodes, int64_t n,
                          const std::set<int64_t>& excluded) {
  int64_t total = 0;
  for (int64_t i = 1; i <= n; ++i) {
    total += i - BruteForceEarliest(delays, episodes, i, excluded);
  }
  return total;
}

int64_t RealizedSkipBound(std::span<const Delay> delays,
                          std::span<const int64_t> episodes) {
  std::priority_queue<int64_t, std::vector<int64_t>, std::greater<int64_t>>
      open;
  int64_t infinite = 0;
  int64_t best = 0;
  for (size_t n = 0; n < delays.size(); ++n) {
    const int64_t k_n = episodes[n];
    if (delays[n].IsInfinite()) {
      ++infinite;
    } else {
      open.push(delays[n].Episodes() + k_n);
    }
    while (!open.empty() && open.top() < k_n) open.pop();
    best = std::max<int64_t>(best, infinite + static_cast<int64_t>(open.size()));
  }
  return best;
}

}  // namespace damavl
