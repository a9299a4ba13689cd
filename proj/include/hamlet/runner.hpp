#pragma once
// Harness layer: loads schema/queries/events (or generates a stream), runs a
// strategy, writes the results CSV, metrics JSON, and the optional decision
// log, and drives the benchmark matrix.
//
// When every query in the workload groups by the same non-empty attribute
// list, engine runs can shard the stream by group key and process shards in
// parallel (OpenMP when compiled in); group partitions are independent, so
// the merged table is byte-identical to the serial run, which remains the
// reference path for testing.

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "hamlet/engine.hpp"
#include "hamlet/events.hpp"
#include "hamlet/oracle.hpp"
#include "hamlet/queries.hpp"
#include "hamlet/results.hpp"

namespace hamlet {

struct RunError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct RunConfig {
  std::string schema_path;
  std::string queries_path;
  std::string events_path;    // exactly one of events_path / generator_path
  std::string generator_path;
  std::string strategy = "dynamic";  // dynamic | static-shared | non-shared | oracle
  std::string cost_model = "primary";
  std::string out_dir;            // empty: keep everything in memory
  std::string decision_log_path;  // empty: no decision log
  std::optional<std::uint64_t> seed;  // overrides the generator spec's seed
  std::size_t oracle_cap = kDefaultOracleCap;
  std::size_t compaction_cap = 64;
  int threads = 1;  // > 1 enables sharded engine runs when the workload allows
};

struct RunOutcome {
  ResultTable table;
  std::string metrics_json;  // pretty-printed metrics document
  std::size_t events = 0;
  std::size_t decision_count = 0;
  double wall_ms = 0.0;
  double mean_latency_ms = 0.0;  // 0 when no windows carried events
};

// Loads inputs, executes, and writes results.csv / metrics.json (and the
// decision log) under out_dir when set.
RunOutcome run(const RunConfig& cfg);

// In-memory core used by run() and the benchmark: no file IO.
RunOutcome execute(const std::vector<Query>& workload, const std::vector<Event>& events,
                   const std::string& strategy, CostModel model, std::size_t oracle_cap,
                   std::size_t compaction_cap, bool collect_decisions, int threads,
                   std::vector<DecisionRecord>* decisions_out = nullptr);

// Benchmark matrix: strategies x streams x workloads x thread counts.
// Returns the comparison CSV (also written to <out_dir>/comparison.csv when
// out_dir is non-empty) with one row per cell.
std::string bench(const std::string& matrix_path, const std::string& out_dir);

}  // namespace hamlet
