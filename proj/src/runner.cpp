#include "hamlet/runner.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include "json.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

#include "hamlet/generator.hpp"
#include "hamlet/optimizer.hpp"

namespace hamlet {

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

// The workload shards by group key when every query groups by the same
// non-empty attribute list; group partitions never interact.
std::vector<std::string> common_groupby(const std::vector<Query>& workload) {
  if (workload.empty() || workload.front().groupby.empty()) return {};
  for (const auto& q : workload)
    if (q.groupby != workload.front().groupby) return {};
  return workload.front().groupby;
}

struct EngineBundle {
  ResultTable table;
  EngineStats stats;
  std::vector<DecisionRecord> decisions;
  std::vector<LatencySample> latencies;
};

EngineBundle run_engine(const std::vector<Query>& workload, const std::vector<Event>& events,
                        const EngineConfig& cfg) {
  Engine eng(workload, cfg);
  for (const auto& e : events) eng.process(e);
  EngineBundle out;
  out.table = eng.finish();
  out.stats = eng.stats();
  out.decisions = eng.decisions();
  out.latencies = eng.latency_samples();
  return out;
}

EngineBundle run_sharded(const std::vector<Query>& workload, const std::vector<Event>& events,
                         const EngineConfig& cfg, const std::vector<std::string>& groupby,
                         int shards) {
  std::set<std::string> relevant;
  for (const auto& q : workload) relevant.insert(q.types.begin(), q.types.end());

  std::vector<std::vector<Event>> buckets(static_cast<std::size_t>(shards));
  for (const auto& e : events) {
    std::size_t shard = 0;
    if (relevant.count(e.type)) {
      std::string key;
      for (const auto& a : groupby) {
        key += attr_value_to_string(e.attrs.at(a));
        key += '|';
      }
      shard = std::hash<std::string>{}(key) % static_cast<std::size_t>(shards);
    }
    buckets[shard].push_back(e);
  }

  std::vector<EngineBundle> parts(buckets.size());
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic, 1)
#endif
  for (std::int64_t i = 0; i < static_cast<std::int64_t>(buckets.size()); ++i)
    parts[static_cast<std::size_t>(i)] = run_engine(workload, buckets[static_cast<std::size_t>(i)], cfg);

  EngineBundle merged;
  for (auto& part : parts) {
    merged.table.insert(part.table.begin(), part.table.end());
    merged.stats.events += part.stats.events;
    merged.stats.bursts += part.stats.bursts;
    merged.stats.decisions += part.stats.decisions;
    merged.stats.merges += part.stats.merges;
    merged.stats.splits += part.stats.splits;
    merged.stats.keep_shared += part.stats.keep_shared;
    merged.stats.keep_separate += part.stats.keep_separate;
    merged.stats.plans_examined += part.stats.plans_examined;
    merged.stats.snapshots_created += part.stats.snapshots_created;
    merged.stats.compactions += part.stats.compactions;
    merged.stats.peak_state_bytes += part.stats.peak_state_bytes;
    merged.stats.decision_ns += part.stats.decision_ns;
    merged.decisions.insert(merged.decisions.end(), part.decisions.begin(), part.decisions.end());
    merged.latencies.insert(merged.latencies.end(), part.latencies.begin(),
                            part.latencies.end());
  }

  // windows past a shard's local horizon: fill the zero rows the serial run
  // would have emitted
  Time t_max = 0;
  bool any = false;
  for (const auto& e : events) {
    t_max = std::max(t_max, e.time);
    any = true;
  }
  if (any) {
    std::map<std::string, std::set<std::string>> groups_of;  // query -> groups
    for (const auto& [key, cell] : merged.table) groups_of[key.query].insert(key.group);
    for (const auto& q : workload) {
      auto git = groups_of.find(q.id);
      if (git == groups_of.end()) continue;
      for (const auto& group : git->second)
        for (Time ws = 0; ws <= t_max; ws += q.window_slide) {
          ResultKey rk{q.id, ws, group};
          if (merged.table.count(rk)) continue;
          auto cell = finalize_cell(q, ws + q.window_size, AggOutcome{});
          if (cell) merged.table.emplace(std::move(rk), std::move(*cell));
        }
    }
  }
  return merged;
}

nlohmann::ordered_json latency_summary(const std::vector<LatencySample>& samples,
                                       double* overall_mean) {
  std::map<std::string, std::vector<double>> per_query;
  for (const auto& s : samples) per_query[s.query].push_back(s.ms);
  nlohmann::ordered_json out = nlohmann::ordered_json::object();
  double total = 0.0;
  std::size_t count = 0;
  for (const auto& [q, vals] : per_query) {
    double sum = std::accumulate(vals.begin(), vals.end(), 0.0);
    double mx = *std::max_element(vals.begin(), vals.end());
    out[q] = {{"mean_ms", sum / static_cast<double>(vals.size())},
              {"max_ms", mx},
              {"windows", vals.size()}};
    total += sum;
    count += vals.size();
  }
  *overall_mean = count ? total / static_cast<double>(count) : 0.0;
  return out;
}

nlohmann::ordered_json pane_accounting(const std::vector<Query>& workload,
                                       const std::vector<Event>& events) {
  std::vector<const Query*> qs;
  for (const auto& q : workload) qs.push_back(&q);
  const Time pane = qs.empty() ? 1 : pane_of(qs);
  std::map<Time, std::uint64_t> counts;
  for (const auto& e : events) ++counts[(e.time / pane) * pane];
  nlohmann::ordered_json out = nlohmann::ordered_json::object();
  out["pane"] = pane;
  nlohmann::ordered_json per = nlohmann::ordered_json::object();
  for (const auto& [start, c] : counts) per[std::to_string(start)] = c;
  out["events_per_pane"] = std::move(per);
  return out;
}

}  // namespace

RunOutcome execute(const std::vector<Query>& workload, const std::vector<Event>& events,
                   const std::string& strategy, CostModel model, std::size_t oracle_cap,
                   std::size_t compaction_cap, bool collect_decisions, int threads,
                   std::vector<DecisionRecord>* decisions_out) {
  RunOutcome out;
  out.events = events.size();
  nlohmann::ordered_json m;
  m["strategy"] = strategy;
  m["events"] = events.size();

  const auto t0 = Clock::now();
  if (strategy == "oracle") {
    try {
      out.table = oracle_run(workload, events, oracle_cap);
    } catch (const OracleCapError& e) {
      throw RunError(std::string(e.what()) +
                     " — the oracle strategy is for small reference runs; raise --oracle-cap or "
                     "use dynamic/static-shared/non-shared");
    }
    out.wall_ms = ms_since(t0);
    m["wall_ms"] = out.wall_ms;
    m["throughput_eps"] =
        out.wall_ms > 0.0 ? static_cast<double>(events.size()) * 1000.0 / out.wall_ms : 0.0;
    m["oracle_cap"] = oracle_cap;
  } else {
    EngineConfig cfg;
    cfg.strategy = strategy_from_string(strategy);
    cfg.cost_model = model;
    cfg.compaction_cap = compaction_cap;
    cfg.collect_decisions = collect_decisions;

    const auto groupby = common_groupby(workload);
    const bool sharded = threads > 1 && !groupby.empty();
    EngineBundle bundle = sharded ? run_sharded(workload, events, cfg, groupby, threads)
                                  : run_engine(workload, events, cfg);
    out.wall_ms = ms_since(t0);
    out.table = std::move(bundle.table);
    out.decision_count = bundle.decisions.size();
    if (decisions_out) *decisions_out = std::move(bundle.decisions);

    m["cost_model"] = cost_model_to_string(model);
    m["threads"] = sharded ? threads : 1;
    m["sharded"] = sharded;
    m["wall_ms"] = out.wall_ms;
    m["throughput_eps"] =
        out.wall_ms > 0.0 ? static_cast<double>(events.size()) * 1000.0 / out.wall_ms : 0.0;
    m["latency"] = latency_summary(bundle.latencies, &out.mean_latency_ms);
    m["mean_latency_ms"] = out.mean_latency_ms;
    m["peak_state_bytes"] = bundle.stats.peak_state_bytes;
    m["bursts"] = bundle.stats.bursts;
    m["snapshots_created"] = bundle.stats.snapshots_created;
    m["compactions"] = bundle.stats.compactions;
    m["decisions"] = bundle.stats.decisions;
    m["decision_ns"] = bundle.stats.decision_ns;
    m["decision_fraction"] =
        out.wall_ms > 0.0 ? static_cast<double>(bundle.stats.decision_ns) / (out.wall_ms * 1e6)
                          : 0.0;
    m["plans_examined"] = bundle.stats.plans_examined;
    m["actions"] = {{"merge", bundle.stats.merges},
                    {"split", bundle.stats.splits},
                    {"keep-shared", bundle.stats.keep_shared},
                    {"keep-separate", bundle.stats.keep_separate}};
  }
  m["panes"] = pane_accounting(workload, events);
  out.metrics_json = m.dump(2) + "\n";
  return out;
}

RunOutcome run(const RunConfig& cfg) {
  if (cfg.schema_path.empty() || cfg.queries_path.empty())
    throw RunError("run: schema and queries paths are required");
  if (cfg.events_path.empty() == cfg.generator_path.empty())
    throw RunError("run: provide exactly one event source (--events or --generate)");

  Schema schema = Schema::load_file(cfg.schema_path);

  std::ifstream qin(cfg.queries_path);
  if (!qin) throw RunError("run: cannot open query file '" + cfg.queries_path + "'");
  std::ostringstream qbuf;
  qbuf << qin.rdbuf();
  std::vector<Query> workload = parse_queries(qbuf.str(), schema);

  std::vector<Event> events;
  if (!cfg.events_path.empty()) {
    StreamSource src = StreamSource::from_file(cfg.events_path, schema);
    while (auto e = src.next_ordered()) events.push_back(std::move(*e));
  } else {
    GeneratorSpec spec = GeneratorSpec::load_file(cfg.generator_path);
    if (cfg.seed) spec.seed = *cfg.seed;
    events = generate_stream(spec);
  }

  const bool want_decisions = !cfg.decision_log_path.empty();
  std::vector<DecisionRecord> decisions;
  RunOutcome out = execute(workload, events, cfg.strategy,
                           cost_model_from_string(cfg.cost_model), cfg.oracle_cap,
                           cfg.compaction_cap, want_decisions, cfg.threads,
                           want_decisions ? &decisions : nullptr);

  if (!cfg.out_dir.empty()) {
    std::filesystem::create_directories(cfg.out_dir);
    const auto dir = std::filesystem::path(cfg.out_dir);
    std::ofstream rcsv(dir / "results.csv");
    rcsv << result_csv(out.table);
    std::ofstream mjson(dir / "metrics.json");
    mjson << out.metrics_json;
    if (!rcsv || !mjson) throw RunError("run: cannot write outputs under '" + cfg.out_dir + "'");
  }
  if (want_decisions) {
    std::filesystem::path p(cfg.decision_log_path);
    if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
    std::ofstream dlog(p);
    for (const auto& d : decisions) dlog << decision_to_json(d) << "\n";
    if (!dlog) throw RunError("run: cannot write decision log '" + cfg.decision_log_path + "'");
  }
  return out;
}

std::string bench(const std::string& matrix_path, const std::string& out_dir) {
  std::ifstream min(matrix_path);
  if (!min) throw RunError("bench: cannot open matrix '" + matrix_path + "'");
  nlohmann::json j;
  try {
    std::ostringstream buf;
    buf << min.rdbuf();
    j = nlohmann::json::parse(buf.str());
  } catch (const nlohmann::json::exception& e) {
    throw RunError(std::string("bench: invalid matrix JSON: ") + e.what());
  }
  const auto base = std::filesystem::path(matrix_path).parent_path();
  auto resolve = [&](const std::string& rel) { return (base / rel).string(); };

  if (!j.contains("schema") || !j.contains("workloads") || !j.contains("streams"))
    throw RunError("bench: matrix requires 'schema', 'workloads', and 'streams'");
  Schema schema = Schema::load_file(resolve(j["schema"].get<std::string>()));

  std::vector<std::string> strategies = {"dynamic", "static-shared", "non-shared"};
  if (j.contains("strategies")) strategies = j["strategies"].get<std::vector<std::string>>();
  std::vector<int> threads = {1};
  if (j.contains("threads")) threads = j["threads"].get<std::vector<int>>();
  std::optional<std::uint64_t> seed;
  if (j.contains("seed")) seed = j["seed"].get<std::uint64_t>();

  struct Workload {
    std::string name;
    std::vector<Query> queries;
  };
  std::vector<Workload> workloads;
  for (const auto& w : j["workloads"]) {
    std::ifstream qin(resolve(w["queries"].get<std::string>()));
    if (!qin) throw RunError("bench: cannot open workload '" + w["queries"].get<std::string>() + "'");
    std::ostringstream qbuf;
    qbuf << qin.rdbuf();
    workloads.push_back(
        {w.value("name", w["queries"].get<std::string>()), parse_queries(qbuf.str(), schema)});
  }

  struct StreamCell {
    std::string name;
    std::uint64_t events_per_min;
    std::vector<Event> events;
  };
  std::vector<StreamCell> streams;
  for (const auto& sj : j["streams"]) {
    GeneratorSpec spec = GeneratorSpec::load_file(resolve(sj["generator"].get<std::string>()));
    if (seed) spec.seed = *seed;
    std::uint64_t epm = sj.value("events_per_min", std::uint64_t{60});
    if (epm == 0) throw RunError("bench: events_per_min must be positive");
    auto events = generate_stream(spec);
    // one event per minute-fraction: rescale arrival times around the
    // 60-units-per-minute baseline
    if (epm != 60)
      for (std::size_t i = 0; i < events.size(); ++i)
        events[i].time = static_cast<Time>(i * 60 / epm);
    streams.push_back({sj.value("name", sj["generator"].get<std::string>()), epm,
                       std::move(events)});
  }

  std::ostringstream csv;
  csv << "strategy,workload,queries,stream,events_per_min,threads,events,wall_ms,"
         "throughput_eps,mean_latency_ms,peak_state_bytes,snapshots,decisions,"
         "decision_fraction\n";
  for (const auto& strategy : strategies)
    for (const auto& sc : streams)
      for (const auto& wl : workloads)
        for (int th : threads) {
          RunOutcome r = execute(wl.queries, sc.events, strategy, CostModel::Primary,
                                 kDefaultOracleCap, 64, false, th);
          nlohmann::json m = nlohmann::json::parse(r.metrics_json);
          csv << strategy << ',' << wl.name << ',' << wl.queries.size() << ',' << sc.name << ','
              << sc.events_per_min << ',' << th << ',' << r.events << ',' << r.wall_ms << ','
              << m.value("throughput_eps", 0.0) << ',' << r.mean_latency_ms << ','
              << m.value("peak_state_bytes", std::uint64_t{0}) << ','
              << m.value("snapshots_created", std::uint64_t{0}) << ','
              << m.value("decisions", std::uint64_t{0}) << ','
              << m.value("decision_fraction", 0.0) << "\n";
        }

  std::string text = csv.str();
  if (!out_dir.empty()) {
    std::filesystem::create_directories(out_dir);
    std::ofstream f(std::filesystem::path(out_dir) / "comparison.csv");
    f << text;
    if (!f) throw RunError("bench: cannot write comparison CSV under '" + out_dir + "'");
  }
  return text;
}

}  // namespace hamlet
