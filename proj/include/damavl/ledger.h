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

#ifndef DAMAVL_LEDGER_H_
#define DAMAVL_LEDGER_H_

#include <cstdint>
#include <functional>
#include <queue>
#include <set>
#include <span>
#include <utility>
#include <vector>

#include "damavl/delay.h"

namespace damavl {

// How received rewards reach the learning subroutines.
enum class LedgerMode {
  kUsable,  // only usable visits, in happening order
  kNaive,   // every reward as soon as it arrives
  kSkip,    // usable visits plus skipping of long-unreceived rewards
};

enum class SkipMetric {
  kPhi,       // accumulated n' - i over the scans a record stays unreceived
  kPrevious,  // the age n' - i alone
};

// Holding value compared against the skip metric at visit n'.
enum class ThresholdTiming {
  // T(n'-1) + (n' - e) with e the earliest unreceived record before the scan.
  kPostUpdate,
  // The last committed value T(n'-1).
  kCommitted,
};

enum class VisitStatus {
  kUnreceived,
  kReceivedUnusable,
  kConsumed,
  kSkipped,
};

struct VisitRecord {
  int64_t order = 0;
  int64_t episode = 0;
  int action = 0;
  double prob = 0.0;
  double upper_next = 0.0;
  double lower_next = 0.0;
  double reward = 0.0;  // meaningful once received
  double gamma = 0.0;   // exploration rate frozen at visit time
  Delay delay = Delay::Finite(0);
  VisitStatus status = VisitStatus::kUnreceived;
  int64_t phi = 0;
  // Number of skip scans that found the record unreceived.
  int64_t unreceived_scans = 0;
  bool arrived_after_skip = false;
};

// A tuple handed to the learning subroutines.
struct FedRecord {
  int64_t order = 0;
  int action = 0;
  double prob = 0.0;
  double upper_next = 0.0;
  double lower_next = 0.0;
  double reward = 0.0;
  double gamma = 0.0;
  bool skipped = false;
};

struct PrepareResult {
  int64_t happened = 0;  // n', including the visit being prepared
  int64_t usable = 0;    // n after this preparation
  int64_t holding = 0;   // T(n')
  int64_t earliest = 0;  // e after the skip scan
  double threshold = 0;  // skip threshold used in this scan
  std::vector<FedRecord> fed;
  std::vector<int64_t> newly_skipped;
};

struct SkipAuditCounters {
  int64_t checks = 0;
  int64_t phi_violations = 0;       // sum phi > C * T~
  int64_t blocking_violations = 0;  // max blocking > (4 T~)^(1/4) + 1
  int64_t skipped_violations = 0;   // |O| > 2 C sqrt(T~)
  double worst_phi_ratio = 0.0;
  double worst_blocking_ratio = 0.0;
  double worst_skipped_ratio = 0.0;
};

// Quantities the skip lemmas relate, captured after one preparation.
struct SkipAuditPoint {
  double threshold = 0.0;  // T~ used by the scan
  int64_t phi_sum = 0;
  int64_t max_blocking = 0;
  int64_t skipped = 0;
};

// Adds the outcome of checking `point` against constant C to `counters`.
void AccumulateSkipAudit(const SkipAuditPoint& point, double skip_bound,
                         SkipAuditCounters& counters);

struct LedgerOptions {
  LedgerMode mode = LedgerMode::kUsable;
  SkipMetric metric = SkipMetric::kPhi;
  ThresholdTiming timing = ThresholdTiming::kPostUpdate;
  double skip_bound = 1.0;  // C, used by the audits
  // Bootstrap value stored in the synthetic tuple of a skipped record.
  double skipped_upper = 0.0;
  bool audit = true;
};

// Visit bookkeeping for one (agent, step, state) triple.
class VisitLedger {
 public:
  explicit VisitLedger(LedgerOptions options = {});

  // Preparation for the visit happening in `episode`: skip scan (skip mode),
  // promotion of usable records, counter updates. Returns F.
  PrepareResult BeginVisit(int64_t episode);

  // Saves the tuple of the visit prepared last. Returns its order.
  int64_t RecordVisit(int64_t episode, int action, double prob,
                      double upper_next, double lower_next, double gamma,
                      double reward, Delay delay);

  // Delivers every reward whose arrival episode is <= episode.
  void Deliver(int64_t episode);

  int64_t Happened() const { return static_cast<int64_t>(records_.size()); }
  int64_t Usable() const { return usable_; }
  int64_t Holding() const { return holding_.back(); }
  // T(n) for 0 <= n <= number of prepared visits.
  int64_t HoldingAt(int64_t n) const { return holding_.at(n); }
  const std::vector<int64_t>& HoldingHistory() const { return holding_; }
  // e at the preparation of visit i, 1-based.
  int64_t EarliestAt(int64_t i) const { return earliest_.at(i); }
  // n after the preparation of visit i, 1-based.
  int64_t UsableAfterVisit(int64_t i) const { return usable_after_.at(i); }
  const std::vector<int64_t>& UsableAfterHistory() const {
    return usable_after_;
  }
  // Orders handed to the subroutines, in feeding sequence.
  const std::vector<int64_t>& ConsumptionOrder() const { return consumed_; }

  const VisitRecord& Record(int64_t order) const {
    return records_.at(order - 1);
  }
  const std::vector<VisitRecord>& Records() const { return records_; }
  int64_t SkippedCount() const { return skipped_count_; }
  int64_t MaxBlocking() const { return max_blocking_; }
  int64_t PhiSum() const { return phi_sum_; }
  // |M| after the last preparation.
  int64_t LastPending() const { return last_pending_; }
  const SkipAuditCounters& Audits() const { return audits_; }
  const std::vector<SkipAuditPoint>& AuditHistory() const {
    return audit_history_;
  }
  const LedgerOptions& Options() const { return options_; }

 private:
  double Threshold(int64_t happened) const;

  LedgerOptions options_;
  std::vector<VisitRecord> records_;
  std::vector<int64_t> holding_{0};
  std::vector<int64_t> earliest_{0};
  std::vector<int64_t> usable_after_{0};
  std::vector<int64_t> consumed_;
  int64_t usable_ = 0;
  int64_t delivered_ = 0;      // records received or skipped
  int64_t next_feed_ = 1;      // smallest order not yet handed over
  int64_t prepared_ = 0;       // visits prepared so far
  int64_t skipped_count_ = 0;
  int64_t max_blocking_ = 0;
  int64_t phi_sum_ = 0;
  int64_t last_pending_ = 0;
  std::vector<int64_t> naive_buffer_;
  std::set<int64_t> unreceived_;
  using Arrival = std::pair<int64_t, int64_t>;  // (episode, order)
  std::priority_queue<Arrival, std::vector<Arrival>, std::greater<Arrival>>
      arrivals_;
  SkipAuditCounters audits_;
  std::vector<SkipAuditPoint> audit_history_;
};

// Oracles evaluating the definitions directly from a full delay record.
// delays[i-1] and episodes[i-1] describe visit i.

// Earliest visit j < i, outside `excluded`, still unreceived when visit i
// happens (d_j + k_j > k_i - 1); i when there is none.
int64_t BruteForceEarliest(std::span<const Delay> delays,
                           std::span<const int64_t> episodes, int64_t i,
                           const std::set<int64_t>& excluded = {});

// sum_{i=1}^{n} (i - e^i), optionally with the visits in `excluded` ignored.
int64_t BruteForceHolding(std::span<const Delay> delays,
                          std::span<const int64_t> episodes, int64_t n,
                          const std::set<int64_t>& excluded = {});

// max_n |{i <= n : d_i + k_i >= k_n}|, the smallest constant satisfying the
// bounded-unreceived assumption on this record.
int64_t RealizedSkipBound(std::span<const Delay> delays,
                          std::span<const int64_t> episodes);

}  // namespace damavl

#endif  // DAMAVL_LEDGER_H_
