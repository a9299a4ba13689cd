#pragma once
// Result tables: exact per-(query, window, group) aggregate values plus the
// CSV serialization shared by every execution strategy and the oracle.

#include <map>
#include <optional>
#include <string>
#include <tuple>

#include "hamlet/numeric.hpp"

namespace hamlet {

struct ResultKey {
  std::string query;
  Time window_start = 0;
  std::string group;

  bool operator<(const ResultKey& o) const {
    return std::tie(query, window_start, group) < std::tie(o.query, o.window_start, o.group);
  }
  bool operator==(const ResultKey& o) const {
    return query == o.query && window_start == o.window_start && group == o.group;
  }
};

struct ResultCell {
  Time window_end = 0;
  std::string aggregate;  // e.g. "COUNT(*)"
  Rat value = 0;          // exact; counts are integer rationals

  bool operator==(const ResultCell& o) const {
    return window_end == o.window_end && aggregate == o.aggregate && value == o.value;
  }
};

// Rows that would be empty MIN/MAX/AVG are omitted entirely; empty COUNT/SUM
// windows carry value 0. Map equality is the strategy-equivalence check.
using ResultTable = std::map<ResultKey, ResultCell>;

std::string result_csv(const ResultTable& table);

// Aggregate outcome of one (query, window, partition) context before rows are
// merged up to the grouping key (partitions may be finer than groups when
// equivalence predicates extend the partitioning).
struct AggOutcome {
  Payload payload;
  bool any_agg_event = false;  // an aggregated-type event participates in a trend
  Rat min_value = 0;
  Rat max_value = 0;

  void merge(const AggOutcome& o);
  void note_agg_event(const Rat& v);
};

}  // namespace hamlet

#include "hamlet/queries.hpp"

namespace hamlet {

// Applies the emission rules for one query: COUNT/SUM always emit (0 for
// empty), AVG needs a positive event count, MIN/MAX need a participating
// aggregated-type event. Returns std::nullopt when the row is omitted.
std::optional<ResultCell> finalize_cell(const Query& q, Time window_end, const AggOutcome& out);

}  // namespace hamlet
