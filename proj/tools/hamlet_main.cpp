#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"

#include "hamlet/runner.hpp"

int main(int argc, char** argv) {
  CLI::App app{"hamlet — multi-query event trend aggregation over shared Kleene runs"};
  app.require_subcommand(1);

  hamlet::RunConfig cfg;
  std::optional<std::uint64_t> seed;

  auto* run = app.add_subcommand("run", "run a workload over an event stream");
  run->add_option("--schema", cfg.schema_path, "event schema JSON")->required();
  run->add_option("--queries", cfg.queries_path, "query workload file")->required();
  auto* ev = run->add_option("--events", cfg.events_path, "event stream (JSON lines)");
  auto* gen = run->add_option("--generate", cfg.generator_path, "generator spec JSON");
  ev->excludes(gen);
  gen->excludes(ev);
  run->add_option("--strategy", cfg.strategy,
                  "dynamic | static-shared | non-shared | oracle (default dynamic)");
  run->add_option("--cost-model", cfg.cost_model, "primary | alternate (default primary)");
  run->add_option("--decision-log", cfg.decision_log_path,
                  "write per-burst sharing decisions as JSON lines");
  run->add_option("--out", cfg.out_dir, "directory for results.csv and metrics.json")
      ->required();
  run->add_option("--seed", seed, "override the generator spec's seed");
  run->add_option("--threads", cfg.threads, "shard group partitions across threads (default 1)");
  run->add_option("--oracle-cap", cfg.oracle_cap,
                  "max matched events per window context for the oracle (default 20)");
  run->add_option("--compaction-cap", cfg.compaction_cap,
                  "max snapshot ids per expression before compaction (default 64)");

  std::string matrix_path, bench_out;
  auto* bench = app.add_subcommand("bench", "run a strategy/stream/workload comparison matrix");
  bench->add_option("--matrix", matrix_path, "benchmark matrix JSON")->required();
  bench->add_option("--out", bench_out, "directory for comparison.csv")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) {
      cfg.seed = seed;
      hamlet::RunOutcome out = hamlet::run(cfg);
      std::cout << "events: " << out.events << "\n"
                << "rows: " << out.table.size() << "\n"
                << "wall_ms: " << out.wall_ms << "\n";
      if (cfg.strategy != "oracle")
        std::cout << "mean_latency_ms: " << out.mean_latency_ms << "\n"
                  << "decisions: " << out.decision_count << "\n";
      std::cout << "outputs: " << cfg.out_dir << "/results.csv, " << cfg.out_dir
                << "/metrics.json\n";
    } else {
      std::string csv = hamlet::bench(matrix_path, bench_out);
      std::cout << "rows: " << std::count(csv.begin(), csv.end(), '\n') - 1 << "\n"
                << "output: " << bench_out << "/comparison.csv\n";
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
