#pragma once
// Runtime sharing optimizer: per-burst cost model over a sharable query set
// and the greedy plan chooser. A plan keeps one shared group (two or more
// queries) and runs the rest as non-shared singletons; the all-singletons
// plan is the baseline. The greedy chooser examines one marginal plan per
// snapshot-introducing query plus one final comparison, and provably reaches
// the lattice minimum because plan cost is additive per included query.

#include <cstdint>
#include <string>
#include <vector>

#include "hamlet/events.hpp"

namespace hamlet {

// Two printings of the cost model. The primary one is used unless configured
// otherwise; the alternate adds a log2(g) probe term and weighs snapshot
// maintenance by predecessor-type count p instead of types-per-query t.
enum class CostModel { Primary, Alternate };

CostModel cost_model_from_string(const std::string& name);
std::string cost_model_to_string(CostModel m);

// Per-burst statistics fed to the optimizer. All counts are exact integers;
// products stay well inside 64 bits at supported scales (each factor < 2^20).
struct SharingStats {
  std::uint64_t b = 0;    // events in this burst (matched by any member)
  std::uint64_t n = 0;    // matched events in the newest window context, incl. burst
  std::uint64_t g = 1;    // graphlets in the newest window context, incl. this one
  std::uint64_t t = 1;    // max types-per-query over the set
  std::uint64_t p = 1;    // max predecessor types of the burst type over the set
  std::uint64_t s_p = 1;  // live snapshot ids in the previous graphlet's newest expression + 1
  std::vector<std::string> query_ids;     // full sharable set, sorted
  std::vector<std::uint64_t> deviations;  // d_q per query: burst pairs whose
                                          // adjacent predicates fail for q
};

struct PlanChoice {
  bool share = false;
  std::vector<std::uint32_t> members;  // indices into query_ids; >= 2 when share
  std::uint64_t s_c = 0;               // predicted snapshots of the evaluated plan
  std::uint64_t shared_cost = 0;       // cost of the best candidate plan
  std::uint64_t nonshared_cost = 0;    // all-singletons baseline
  std::uint64_t plans_examined = 0;
};

// Cost of running the queries marked true as one shared group and the rest
// as singletons. Fewer than two marks means the all-singletons baseline.
std::uint64_t plan_cost(const SharingStats& st, const std::vector<bool>& in_set, CostModel model);

// Greedy chooser: the zero-deviation core always shares; each
// snapshot-introducing query joins when its marginal gain is positive; the
// final test compares the best candidate against all-singletons (ties keep
// the singletons). Examines exactly (#introducers + 1) plans.
PlanChoice choose_query_set(const SharingStats& st, CostModel model = CostModel::Primary);

// Exhaustive minimum over the full plan lattice (every subset of size >= 2
// plus the baseline); reference for optimality tests.
PlanChoice exhaustive_choice(const SharingStats& st, CostModel model = CostModel::Primary);

// One decision-log line; serialized as JSON-lines by the runner.
struct DecisionRecord {
  Time pane = 0;
  std::string burst_type;
  std::uint64_t b = 0, n = 0, s_c = 0, s_p = 0;
  std::uint64_t shared_cost = 0, nonshared_cost = 0;
  std::string action;  // keep-shared | merge | split | keep-separate
  std::vector<std::string> shared_set;
};

std::string decision_to_json(const DecisionRecord& d);

}  // namespace hamlet
