#pragma once
// Snapshot expressions: the shared intermediate aggregate of an event in a
// shared graphlet. An expression is a linear combination of snapshot
// variables plus a constant; evaluating it under a query and window instance
// plugs in that query's snapshot values.
//
// Each snapshot term carries three coefficients: `a` applies slot-wise to the
// snapshot payload (counts, event counts, sums); `beta` and `gamma` are the
// cnt->esum and cnt->ecnt cross terms produced when an event of the
// aggregated type seeds its own attribute into the running sum.

#include <cstdint>
#include <functional>
#include <vector>

#include "hamlet/numeric.hpp"

namespace hamlet {

using SnapshotId = std::uint32_t;

struct SnapTerm {
  SnapshotId snap = 0;
  Int a = 0;
  Rat beta = 0;
  Int gamma = 0;
};

class Expression {
 public:
  // terms sorted by snapshot id; no zero terms stored
  const std::vector<SnapTerm>& terms() const { return terms_; }
  const Payload& constant() const { return const_; }

  std::size_t live_snapshots() const { return terms_.size(); }
  bool empty() const { return terms_.empty() && const_.is_zero(); }

  void clear() {
    terms_.clear();
    const_ = Payload{};
  }

  // expr += coefficient 1 on `snap` (the graphlet-snapshot seed)
  void add_snapshot(SnapshotId snap, const Int& a = 1);
  // expr += other
  void add(const Expression& other);
  // expr += fixed payload (constant-only expressions carry exact values)
  void add_constant(const Payload& p) { const_.add(p); }
  // expr.constant.cnt += 1 (uniform start-flag seed)
  void add_start_flag() { const_.cnt += 1; }

  // Self-seed for an event of the aggregated type with attribute value v:
  //   esum += v * cnt  and  ecnt += cnt
  // applied to the expression's own linear form of cnt.
  void seed_self(const Rat& v);

  // Evaluates under one query/window: lookup(s) must return the snapshot
  // payload S(s, q, w).
  Payload evaluate(const std::function<const Payload&(SnapshotId)>& lookup) const;
  // Same, accumulated into `acc` without a temporary.
  void add_value_into(Payload& acc,
                      const std::function<const Payload&(SnapshotId)>& lookup) const;

  // Rendering for traces/tests: coefficients applied to names, e.g. "4x + z".
  std::string render(const std::function<std::string(SnapshotId)>& name) const;

  std::size_t memory_terms() const { return terms_.size(); }

 private:
  std::vector<SnapTerm> terms_;
  Payload const_;
};

}  // namespace hamlet
