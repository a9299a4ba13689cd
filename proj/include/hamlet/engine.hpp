#pragma once
// Execution engine: shared and non-shared trend-count propagation over
// pane-aligned graphlets, per-burst sharing decisions, incremental window
// emission, and the traces/metrics the harness reports.
//
// All strategies produce byte-identical result tables; they differ only in
// how intermediate counts are computed (per-query propagation vs snapshot
// expressions shared across the query set, with the dynamic strategy
// choosing per burst).

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "hamlet/events.hpp"
#include "hamlet/optimizer.hpp"
#include "hamlet/queries.hpp"
#include "hamlet/results.hpp"

namespace hamlet {

enum class Strategy { Dynamic, StaticShared, NonShared };

Strategy strategy_from_string(const std::string& name);  // "dynamic" | "static-shared" | "non-shared"
std::string strategy_to_string(Strategy s);

struct EngineConfig {
  Strategy strategy = Strategy::Dynamic;
  CostModel cost_model = CostModel::Primary;
  std::size_t compaction_cap = 64;  // max snapshot ids one expression may reference
  bool trace = false;               // record expressions and snapshot values
  bool collect_decisions = false;   // keep per-burst decision records
};

// Rendered per-event snapshot expression, recorded in burst order.
struct TraceExpression {
  Time pane = 0;
  std::string partition;
  std::string burst_type;
  std::uint64_t seq = 0;  // event arrival position
  std::string expr;
};

// Snapshot value at capture time, one record per (snapshot, query, window).
struct TraceSnapshot {
  std::string name;
  std::string query;
  Time window_start = 0;
  std::string cnt;  // exact decimal trend count
};

struct LatencySample {
  std::string query;
  Time window_start = 0;
  double ms = 0.0;  // emission wall time minus arrival of last contributing event
};

struct EngineStats {
  std::uint64_t events = 0;
  std::uint64_t bursts = 0;
  std::uint64_t decisions = 0;
  std::uint64_t merges = 0, splits = 0, keep_shared = 0, keep_separate = 0;
  std::uint64_t plans_examined = 0;
  std::uint64_t snapshots_created = 0;
  std::uint64_t compactions = 0;
  std::uint64_t peak_state_bytes = 0;
  std::uint64_t decision_ns = 0;  // stats gathering + plan choice only
};

class Engine {
 public:
  explicit Engine(std::vector<Query> workload, EngineConfig cfg = {});
  ~Engine();
  Engine(Engine&&) noexcept;
  Engine& operator=(Engine&&) noexcept;

  // Feed one event in arrival order (non-decreasing time).
  void process(const Event& e);

  // Flush buffers, emit every window instance that started by the last event
  // time, and return the final table. Call once.
  ResultTable finish();

  const EngineStats& stats() const;
  const std::vector<DecisionRecord>& decisions() const;
  const std::vector<TraceExpression>& expression_trace() const;
  const std::vector<TraceSnapshot>& snapshot_trace() const;
  const std::vector<LatencySample>& latency_samples() const;

 private:
  struct State;
  std::unique_ptr<State> state_;
};

// Convenience wrapper used by tests: stream every event through an Engine.
ResultTable engine_run(const std::vector<Query>& workload, const std::vector<Event>& events,
                       EngineConfig cfg = {});

}  // namespace hamlet
