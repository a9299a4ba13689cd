#pragma once
// Brute-force reference: enumerates every event trend of a query by
// exhaustive depth-first expansion over the template transitions, then
// aggregates the trends literally. Exponential by construction; guarded by a
// matched-event cap. This is the ground truth the engine is validated
// against, so it deliberately shares no propagation logic with the engine.

#include <functional>
#include <vector>

#include "hamlet/partition.hpp"
#include "hamlet/queries.hpp"
#include "hamlet/results.hpp"

namespace hamlet {

struct OracleCapError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline constexpr std::size_t kDefaultOracleCap = 20;

struct Trend {
  std::vector<const Event*> events;  // arrival order
};

// All trends of `q` over the given events (already restricted to one window
// and partition; local-predicate filtering happens inside). Throws
// OracleCapError when more than `cap` events match.
std::vector<Trend> enumerate_trends(const Query& q, const std::vector<const Event*>& events,
                                    std::size_t cap = kDefaultOracleCap);

// Visitor form used by aggregation to avoid materializing 2^n trends.
void visit_trends(const Query& q, const std::vector<const Event*>& events, std::size_t cap,
                  const std::function<void(const std::vector<const Event*>&)>& visit);

// Literal two-step aggregation over the enumerated trends of one context.
AggOutcome aggregate_trends(const Query& q, const std::vector<const Event*>& events,
                            std::size_t cap = kDefaultOracleCap);

// Full small-scale reference run: same partitioning, window-emission and
// group-merge rules as the engine, but trend counting by enumeration.
ResultTable oracle_run(const std::vector<Query>& workload, const std::vector<Event>& events,
                       std::size_t cap = kDefaultOracleCap);

}  // namespace hamlet
