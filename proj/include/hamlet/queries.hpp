#pragma once
// Query model: pattern ASTs, the textual query grammar, per-query automaton
// templates over event types, the merged workload template, sharable-set
// detection, and execution units (connected components of sharing queries).

#include <map>
#include <set>
#include <string>
#include <vector>

#include "hamlet/events.hpp"

namespace hamlet {

enum class AggKind { CountStar, CountType, Sum, Avg, Min, Max };

struct AggregateSpec {
  AggKind kind = AggKind::CountStar;
  std::string type;  // aggregated event type (empty for COUNT(*))
  std::string attr;  // aggregated attribute (empty for COUNT(*), COUNT(E))
};

std::string aggregate_to_string(const AggregateSpec& a);

enum class Cmp { Lt, Le, Eq, Ge, Gt, Ne };

bool cmp_holds_int(std::int64_t lhs, Cmp cmp, std::int64_t rhs);
bool cmp_holds(const AttrValue& lhs, Cmp cmp, const AttrValue& rhs);

// attr <cmp> constant, restricted to one event type
struct LocalPredicate {
  std::string type;
  std::string attr;
  Cmp cmp = Cmp::Eq;
  AttrValue constant;
};

// NEXT(E).a <cmp> PREV(E).b between consecutive same-type trend events
struct AdjacentPredicate {
  std::string type;
  std::string next_attr;
  Cmp cmp = Cmp::Gt;
  std::string prev_attr;
};

struct Pattern {
  enum class Kind { Atom, Kleene, Seq, Or, And };
  Kind kind = Kind::Atom;
  std::string type;                // Atom only
  std::vector<Pattern> children;   // Kleene: 1, Seq: >=2, Or/And: 2
};

struct Query {
  std::string id;
  AggregateSpec agg;
  Pattern pattern;
  std::vector<LocalPredicate> locals;
  std::vector<AdjacentPredicate> adjacents;
  std::vector<std::string> equivalence;  // [attr] predicates
  std::vector<std::string> groupby;
  Time window_size = 0;
  Time window_slide = 0;

  // Derived during validation.
  std::vector<std::string> types;         // pattern types, first occurrence order
  std::vector<std::string> kleene_types;  // types under Kleene-plus over an atom
};

// Parses all query blocks in a file (each block starts with the QUERY
// keyword; clauses are separated by '/'). Throws ParseError with the block id
// or line, or SchemaError for unknown types/attributes.
std::vector<Query> parse_queries(const std::string& text, const Schema& schema);
Query parse_query(const std::string& text, const Schema& schema);

// Per-query automaton whose states are the event types of the pattern.
// A trend is a path start -> ... -> end through the edges with predicates
// holding; for AND queries the two operands form disconnected components
// executed independently and combined at emission time.
struct QueryTemplate {
  std::vector<std::string> states;
  std::set<std::pair<std::string, std::string>> edges;  // (from, to)
  std::set<std::string> start;
  std::set<std::string> end;
  std::map<std::string, int> operand;  // type -> operand index (0, or 1 for And/Or right side)
  bool is_and = false;
  bool is_or = false;

  bool has_edge(const std::string& from, const std::string& to) const {
    return edges.count({from, to}) > 0;
  }
};

QueryTemplate build_template(const Query& q);

// Merged workload template: every event type appears once; each transition is
// labeled with the set of query ids for which it holds.
struct MergedTemplate {
  std::set<std::string> states;
  std::map<std::pair<std::string, std::string>, std::set<std::string>> transitions;
  std::map<std::string, QueryTemplate> per_query;  // query id -> its template

  // pt(E,q): predecessor types of E for query q.
  std::set<std::string> pt(const std::string& type, const std::string& query_id) const;
  const std::set<std::string>& start_of(const std::string& query_id) const;
  const std::set<std::string>& end_of(const std::string& query_id) const;
};

MergedTemplate build_merged_template(const std::vector<Query>& workload);

// Maximal sets of queries sharing one Kleene sub-pattern type:
// compatible aggregates, overlapping windows, identical grouping keys.
struct SharableSet {
  std::string kleene_type;
  std::vector<std::string> query_ids;  // |.| > 1, sorted
};

std::vector<SharableSet> find_sharable(const std::vector<Query>& workload);

// Execution unit: connected component of queries linked by sharable sets
// (singleton unit for queries that share nothing). One merged template, one
// pane length, one partitioning key per unit.
struct Unit {
  std::vector<std::string> query_ids;           // sorted
  std::vector<SharableSet> shared;              // sharable sets inside the unit
  std::vector<std::string> partition_attrs;     // groupby + equivalence attrs
  Time pane = 1;                                // gcd of all sizes and slides
};

std::vector<Unit> build_units(const std::vector<Query>& workload);

// Pane length for an arbitrary query set: gcd of all window sizes and slides.
Time pane_of(const std::vector<const Query*>& queries);

// Event-level match: type occurs in the pattern and all local predicates on
// that type hold. Non-matching events are invisible to the query.
bool event_matches(const Query& q, const Event& e);

// Adjacent predicates between consecutive trend events: constrains pairs of
// the same type only; pairs of different types are unconstrained.
bool adjacent_ok(const Query& q, const Event& prev, const Event& next);

}  // namespace hamlet
