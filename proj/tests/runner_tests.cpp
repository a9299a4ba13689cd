#include "doctest.h"

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "hamlet/generator.hpp"
#include "hamlet/runner.hpp"

using namespace hamlet;
namespace fs = std::filesystem;

namespace {

Schema abc_schema() {
  return Schema::parse_json(R"({
    "A": {"v": "integer", "g": "integer"},
    "B": {"v": "integer", "g": "integer"},
    "C": {"v": "integer", "g": "integer"}
  })");
}

const char* kSchemaJson = R"({
  "A": {"v": "integer", "g": "integer"},
  "B": {"v": "integer", "g": "integer"},
  "C": {"v": "integer", "g": "integer"}
})";

GeneratorSpec spec_from(const std::string& text) { return GeneratorSpec::parse_json(text); }

std::int64_t int_attr(const Event& e, const std::string& name) {
  return std::get<std::int64_t>(e.attrs.at(name));
}

fs::path fresh_dir(const std::string& leaf) {
  fs::path dir = fs::temp_directory_path() / leaf;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

void write_file(const fs::path& p, const std::string& text) {
  std::ofstream out(p);
  out << text;
  REQUIRE(static_cast<bool>(out));
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p);
  REQUIRE(static_cast<bool>(in));
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void check_tables_equal(const ResultTable& got, const ResultTable& want) {
  REQUIRE(got.size() == want.size());
  auto gi = got.begin();
  for (auto wi = want.begin(); wi != want.end(); ++wi, ++gi) {
    CAPTURE(wi->first.query);
    CAPTURE(wi->first.window_start);
    CAPTURE(wi->first.group);
    CHECK(gi->first == wi->first);
    CHECK(gi->second.window_end == wi->second.window_end);
    CHECK(gi->second.aggregate == wi->second.aggregate);
    CHECK(gi->second.value == wi->second.value);
  }
}

}  // namespace

TEST_CASE("generator is deterministic and covers the spec") {
  GeneratorSpec spec = spec_from(R"({
    "duration": 240,
    "types": {"A": 1, "B": 3, "C": 1},
    "burst_length": {"min": 1, "max": 5},
    "attributes": {"v": {"min": 0, "max": 100000}, "g": {"min": 1, "max": 3}},
    "divergence": 0.5,
    "divergence_attr": "v",
    "seed": 42
  })");
  auto a = generate_stream(spec);
  auto b = generate_stream(spec);
  REQUIRE(a.size() == 240);  // one event per time unit
  REQUIRE(b.size() == a.size());
  std::set<std::string> seen;
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].time == static_cast<Time>(i));
    CHECK(serialize_event(a[i]) == serialize_event(b[i]));
    seen.insert(a[i].type);
    const auto v = int_attr(a[i], "v");
    const auto g = int_attr(a[i], "g");
    CHECK(v >= 0);
    CHECK(v <= 100000);
    CHECK(g >= 1);
    CHECK(g <= 3);
  }
  CHECK(seen == std::set<std::string>{"A", "B", "C"});

  GeneratorSpec reseeded = spec;
  reseeded.seed = 43;
  auto c = generate_stream(reseeded);
  bool differs = false;
  for (std::size_t i = 0; i < c.size() && !differs; ++i)
    differs = serialize_event(c[i]) != serialize_event(a[i]);
  CHECK(differs);
}

TEST_CASE("generator shapes divergent and uniform bursts on the marked attribute") {
  // One type and a fixed burst length pin the burst grid; the value range is
  // wider than the stream so the uniform ramp never wraps.
  const char* base = R"({
    "duration": 12,
    "types": {"B": 1},
    "burst_length": {"min": 4, "max": 4},
    "attributes": {"v": {"min": 0, "max": 1000000}},
    "divergence": %DIV%,
    "divergence_attr": "v",
    "seed": 7
  })";
  auto with_div = [&](const std::string& d) {
    std::string text = base;
    text.replace(text.find("%DIV%"), 5, d);
    return generate_stream(spec_from(text));
  };

  SUBCASE("divergence 1: every burst oscillates between the range ends") {
    auto events = with_div("1.0");
    REQUIRE(events.size() == 12);
    const std::vector<std::int64_t> burst = {1000000, 1, 999999, 2};
    for (std::size_t i = 0; i < events.size(); ++i)
      CHECK(int_attr(events[i], "v") == burst[i % 4]);
    // the oscillation breaks NEXT.v > PREV.v inside every burst
    std::size_t drops = 0;
    for (std::size_t i = 1; i < events.size(); ++i)
      if (int_attr(events[i], "v") <= int_attr(events[i - 1], "v")) ++drops;
    CHECK(drops >= 3);
  }

  SUBCASE("divergence 0: the marked attribute rises with event time") {
    auto events = with_div("0.0");
    REQUIRE(events.size() == 12);
    for (std::size_t i = 0; i < events.size(); ++i)
      CHECK(int_attr(events[i], "v") == static_cast<std::int64_t>(i));
  }

  SUBCASE("divergence 0.5: alternating bursts diverge") {
    auto events = with_div("0.5");
    REQUIRE(events.size() == 12);
    // burst 1 uniform, burst 2 divergent, burst 3 uniform
    CHECK(int_attr(events[0], "v") == 0);
    CHECK(int_attr(events[3], "v") == 3);
    CHECK(int_attr(events[4], "v") == 1000000);
    CHECK(int_attr(events[5], "v") == 1);
    CHECK(int_attr(events[8], "v") == 8);
    CHECK(int_attr(events[11], "v") == 11);
  }
}

TEST_CASE("generator rejects malformed specs") {
  CHECK_THROWS_AS(spec_from("not json"), ParseError);
  CHECK_THROWS_AS(spec_from("[]"), ParseError);
  CHECK_THROWS_AS(spec_from(R"({"types": {"A": 1}})"), ParseError);  // no duration
  CHECK_THROWS_AS(spec_from(R"({"duration": 0, "types": {"A": 1}})"), ParseError);
  CHECK_THROWS_AS(spec_from(R"({"duration": 10})"), ParseError);  // no types
  CHECK_THROWS_AS(spec_from(R"({"duration": 10, "types": {}})"), ParseError);
  CHECK_THROWS_AS(spec_from(R"({"duration": 10, "types": {"A": 0}})"), ParseError);
  CHECK_THROWS_AS(spec_from(R"({"duration": 10, "types": {"A": "fast"}})"), ParseError);
  CHECK_THROWS_AS(
      spec_from(R"({"duration": 10, "types": {"A": 1}, "burst_length": {"min": 0, "max": 3}})"),
      ParseError);
  CHECK_THROWS_AS(
      spec_from(R"({"duration": 10, "types": {"A": 1}, "burst_length": {"min": 4, "max": 3}})"),
      ParseError);
  CHECK_THROWS_AS(
      spec_from(
          R"({"duration": 10, "types": {"A": 1}, "attributes": {"v": {"min": 5, "max": 1}}})"),
      ParseError);
  CHECK_THROWS_AS(spec_from(R"({"duration": 10, "types": {"A": 1}, "divergence": 1.5})"),
                  ParseError);
  CHECK_THROWS_AS(spec_from(R"({"duration": 10, "types": {"A": 1}, "divergence_attr": "v"})"),
                  ParseError);
  CHECK_THROWS_AS(GeneratorSpec::load_file("/nonexistent/gen.json"), ParseError);

  // the error text names the component so CLI users can locate the bad input
  try {
    spec_from(R"({"duration": -3, "types": {"A": 1}})");
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()).find("generator:") == 0);
  }
}

TEST_CASE("execute agrees with the oracle strategy on a small stream") {
  Schema s = abc_schema();
  // windows of 20 time units hold at most 20 events, so the oracle's matched-
  // event cap (20) can never trip regardless of the draw
  auto workload = parse_queries(
      "QUERY q1 / RETURN COUNT(*) / PATTERN SEQ(A, B+) / WITHIN 20 SLIDE 20\n"
      "QUERY q2 / RETURN COUNT(*) / PATTERN B+ / WHERE NEXT(B).v > PREV(B).v / "
      "WITHIN 20 SLIDE 20\n",
      s);
  auto events = generate_stream(spec_from(R"({
    "duration": 60,
    "types": {"A": 2, "B": 1, "C": 2},
    "burst_length": {"min": 1, "max": 2},
    "attributes": {"v": {"min": 0, "max": 9}, "g": {"min": 1, "max": 2}},
    "divergence": 0.25,
    "divergence_attr": "v",
    "seed": 5
  })"));

  RunOutcome want =
      execute(workload, events, "oracle", CostModel::Primary, kDefaultOracleCap, 64, false, 1);
  for (const char* st : {"dynamic", "static-shared", "non-shared"}) {
    CAPTURE(st);
    RunOutcome got = execute(workload, events, st, CostModel::Primary, kDefaultOracleCap, 64,
                             false, 1);
    check_tables_equal(got.table, want.table);
    CHECK(got.events == events.size());
  }
}

TEST_CASE("sharded runs reproduce the serial tables on grouped workloads") {
  Schema s = abc_schema();
  auto workload = parse_queries(
      "QUERY q1 / RETURN COUNT(*) / PATTERN SEQ(A, B+) / GROUPBY g / WITHIN 60 SLIDE 60\n"
      "QUERY q2 / RETURN COUNT(*) / PATTERN B+ / GROUPBY g / WITHIN 120 SLIDE 60\n",
      s);
  auto events = generate_stream(spec_from(R"({
    "duration": 400,
    "types": {"A": 1, "B": 3, "C": 1},
    "burst_length": {"min": 1, "max": 5},
    "attributes": {"v": {"min": 0, "max": 100000}, "g": {"min": 1, "max": 4}},
    "divergence": 0.5,
    "divergence_attr": "v",
    "seed": 42
  })"));

  for (const char* st : {"dynamic", "static-shared", "non-shared"}) {
    CAPTURE(st);
    RunOutcome serial =
        execute(workload, events, st, CostModel::Primary, kDefaultOracleCap, 64, false, 1);
    RunOutcome sharded =
        execute(workload, events, st, CostModel::Primary, kDefaultOracleCap, 64, false, 4);
    check_tables_equal(sharded.table, serial.table);

    nlohmann::json ms = nlohmann::json::parse(serial.metrics_json);
    nlohmann::json mp = nlohmann::json::parse(sharded.metrics_json);
    CHECK(ms["sharded"] == false);
    CHECK(mp["sharded"] == true);
    CHECK(mp["threads"] == 4);
    CHECK(ms["events"] == events.size());
    CHECK(mp["events"] == events.size());
  }
}

TEST_CASE("metrics account for every event across panes") {
  Schema s = abc_schema();
  auto workload = parse_queries(
      "QUERY q1 / RETURN COUNT(*) / PATTERN SEQ(A, B+) / WITHIN 60 SLIDE 60\n"
      "QUERY q2 / RETURN COUNT(*) / PATTERN SEQ(C, B+) / WITHIN 120 SLIDE 60\n",
      s);
  auto events = generate_stream(spec_from(R"({
    "duration": 240,
    "types": {"A": 1, "B": 3, "C": 1},
    "burst_length": {"min": 1, "max": 5},
    "attributes": {"v": {"min": 0, "max": 100000}, "g": {"min": 1, "max": 3}},
    "divergence": 0.5,
    "divergence_attr": "v",
    "seed": 42
  })"));
  RunOutcome out =
      execute(workload, events, "dynamic", CostModel::Primary, kDefaultOracleCap, 64, false, 1);

  nlohmann::json m = nlohmann::json::parse(out.metrics_json);
  CHECK(m["strategy"] == "dynamic");
  CHECK(m["cost_model"] == "primary");
  std::uint64_t accounted = 0;
  for (const auto& [pane, count] : m["panes"]["events_per_pane"].items())
    accounted += count.get<std::uint64_t>();
  CHECK(accounted == events.size());
  CHECK(m["panes"]["pane"] == 60);  // gcd of the window slides
  CHECK(m["throughput_eps"].get<double>() > 0.0);
  CHECK(m["decision_fraction"].get<double>() >= 0.0);
  CHECK(m["decision_fraction"].get<double>() < 1.0);
  CHECK(m["decisions"].get<std::uint64_t>() > 0);
}

TEST_CASE("run loads inputs, writes outputs, and logs decisions") {
  fs::path dir = fresh_dir("hamlet_runner_io");
  write_file(dir / "schema.json", kSchemaJson);
  write_file(dir / "demo.queries",
             "QUERY q1 / RETURN COUNT(*) / PATTERN SEQ(A, B+) / WITHIN 100 SLIDE 100\n"
             "QUERY q2 / RETURN COUNT(*) / PATTERN SEQ(C, B+) / "
             "WHERE NEXT(B).v > PREV(B).v / WITHIN 100 SLIDE 100\n");

  std::ostringstream lines;
  const std::vector<std::tuple<Time, std::string, std::int64_t>> rows = {
      {1, "A", 0}, {2, "A", 0}, {3, "C", 0}, {4, "B", 1},  {5, "B", 5},
      {6, "B", 3}, {7, "B", 9}, {8, "A", 0}, {9, "A", 0},  {10, "C", 0},
      {11, "C", 0}, {12, "C", 0}, {13, "B", 10}};
  for (const auto& [t, type, v] : rows) {
    Event e;
    e.time = t;
    e.type = type;
    e.attrs["v"] = v;
    e.attrs["g"] = std::int64_t{0};
    lines << serialize_event(e) << "\n";
  }
  write_file(dir / "events.jsonl", lines.str());

  RunConfig cfg;
  cfg.schema_path = (dir / "schema.json").string();
  cfg.queries_path = (dir / "demo.queries").string();
  cfg.events_path = (dir / "events.jsonl").string();
  cfg.strategy = "dynamic";
  cfg.out_dir = (dir / "out").string();
  cfg.decision_log_path = (dir / "out" / "decisions.jsonl").string();
  RunOutcome out = run(cfg);

  CHECK(out.events == 13);
  CHECK(out.decision_count == 2);
  CHECK(out.table.size() == 2);

  // results.csv reproduces the in-memory table
  CHECK(read_file(dir / "out" / "results.csv") == result_csv(out.table));

  // metrics.json round-trips and matches the outcome
  nlohmann::json m = nlohmann::json::parse(read_file(dir / "out" / "metrics.json"));
  CHECK(m["events"] == 13);
  CHECK(m["strategy"] == "dynamic");
  CHECK(m["decisions"] == 2);

  // the decision log is one JSON object per line with a fixed field order
  std::istringstream dlog(read_file(dir / "out" / "decisions.jsonl"));
  const std::vector<std::string> want_keys = {"pane",        "burst_type",     "b",
                                              "n",           "s_c",            "s_p",
                                              "shared_cost", "nonshared_cost", "action",
                                              "shared_set"};
  std::string line;
  std::size_t nlines = 0;
  while (std::getline(dlog, line)) {
    ++nlines;
    auto rec = nlohmann::ordered_json::parse(line);
    std::vector<std::string> keys;
    for (const auto& [k, v] : rec.items()) keys.push_back(k);
    CHECK(keys == want_keys);
    CHECK(rec["burst_type"] == "B");
  }
  CHECK(nlines == 2);
}

TEST_CASE("run validates its configuration") {
  fs::path dir = fresh_dir("hamlet_runner_cfg");
  write_file(dir / "schema.json", kSchemaJson);
  write_file(dir / "w.queries",
             "QUERY q1 / RETURN COUNT(*) / PATTERN B+ / WITHIN 10 SLIDE 10\n");
  write_file(dir / "gen.json", R"({"duration": 20, "types": {"B": 1}, "seed": 1})");

  RunConfig good;
  good.schema_path = (dir / "schema.json").string();
  good.queries_path = (dir / "w.queries").string();
  good.generator_path = (dir / "gen.json").string();
  CHECK(run(good).events == 20);

  SUBCASE("two event sources") {
    RunConfig c = good;
    c.events_path = (dir / "missing.jsonl").string();
    CHECK_THROWS_AS(run(c), RunError);
  }
  SUBCASE("no event source") {
    RunConfig c = good;
    c.generator_path.clear();
    CHECK_THROWS_AS(run(c), RunError);
  }
  SUBCASE("missing schema path") {
    RunConfig c = good;
    c.schema_path.clear();
    CHECK_THROWS_AS(run(c), RunError);
  }
  SUBCASE("unreadable query file") {
    RunConfig c = good;
    c.queries_path = (dir / "absent.queries").string();
    CHECK_THROWS_AS(run(c), RunError);
  }
  SUBCASE("seed override changes the generated stream") {
    RunConfig c = good;
    c.seed = 1u;  // same as the spec: identical table
    ResultTable base = run(good).table;
    check_tables_equal(run(c).table, base);
  }
}

TEST_CASE("oracle strategy refuses oversized runs with actionable guidance") {
  Schema s = abc_schema();
  auto workload =
      parse_queries("QUERY q1 / RETURN COUNT(*) / PATTERN B+ / WITHIN 100 SLIDE 100\n", s);
  std::vector<Event> events;
  for (Time t = 1; t <= 25; ++t) {
    Event e;
    e.time = t;
    e.type = "B";
    e.attrs["v"] = std::int64_t{0};
    e.attrs["g"] = std::int64_t{0};
    e.seq = static_cast<std::uint64_t>(t - 1);
    events.push_back(std::move(e));
  }
  try {
    execute(workload, events, "oracle", CostModel::Primary, kDefaultOracleCap, 64, false, 1);
    FAIL("expected RunError");
  } catch (const RunError& e) {
    const std::string what = e.what();
    CHECK(what.find("--oracle-cap") != std::string::npos);
  }
  // raising the cap makes the same run succeed: 2^25 - 1 trends
  RunOutcome out = execute(workload, events, "oracle", CostModel::Primary, 25, 64, false, 1);
  REQUIRE(out.table.size() == 1);
  CHECK(out.table.begin()->second.value == Rat(33554431));
}

TEST_CASE("bench runs the full matrix and writes the comparison CSV") {
  fs::path dir = fresh_dir("hamlet_runner_bench");
  write_file(dir / "schema.json", kSchemaJson);
  write_file(dir / "w.queries",
             "QUERY q1 / RETURN COUNT(*) / PATTERN SEQ(A, B+) / GROUPBY g / WITHIN 60 SLIDE 60\n"
             "QUERY q2 / RETURN COUNT(*) / PATTERN B+ / GROUPBY g / WITHIN 60 SLIDE 60\n");
  write_file(dir / "gen.json", R"({
    "duration": 120,
    "types": {"A": 1, "B": 2, "C": 1},
    "burst_length": {"min": 1, "max": 3},
    "attributes": {"v": {"min": 0, "max": 50}, "g": {"min": 1, "max": 2}},
    "seed": 3
  })");
  write_file(dir / "matrix.json", R"({
    "schema": "schema.json",
    "seed": 3,
    "strategies": ["dynamic", "non-shared"],
    "threads": [1, 2],
    "workloads": [{"name": "w", "queries": "w.queries"}],
    "streams": [
      {"name": "s60", "generator": "gen.json"},
      {"name": "s240", "generator": "gen.json", "events_per_min": 240}
    ]
  })");

  std::string csv = bench((dir / "matrix.json").string(), (dir / "out").string());
  CHECK(read_file(dir / "out" / "comparison.csv") == csv);

  std::istringstream in(csv);
  std::string line;
  REQUIRE(std::getline(in, line));
  CHECK(line ==
        "strategy,workload,queries,stream,events_per_min,threads,events,wall_ms,"
        "throughput_eps,mean_latency_ms,peak_state_bytes,snapshots,decisions,decision_fraction");
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    ++rows;
    std::size_t cols = 1;
    for (char ch : line)
      if (ch == ',') ++cols;
    CHECK(cols == 14);
    CHECK(line.find(",w,2,") != std::string::npos);   // workload name and size
    CHECK(line.find(",120,") != std::string::npos);   // events echoed
  }
  CHECK(rows == 8);  // 2 strategies x 2 streams x 1 workload x 2 thread counts

  SUBCASE("matrix validation") {
    CHECK_THROWS_AS(bench((dir / "absent.json").string(), ""), RunError);
    write_file(dir / "bad.json", "{}");
    CHECK_THROWS_AS(bench((dir / "bad.json").string(), ""), RunError);
    write_file(dir / "badjson.json", "not json");
    CHECK_THROWS_AS(bench((dir / "badjson.json").string(), ""), RunError);
  }
}
