#include "doctest.h"

#include <algorithm>

#include "hamlet/queries.hpp"

using namespace hamlet;

namespace {

Schema wide_schema() {
  return Schema::parse_json(R"({
    "A": {"v": "integer", "g": "integer"},
    "B": {"v": "integer", "w": "integer", "g": "integer"},
    "C": {"v": "integer", "g": "integer"},
    "D": {"v": "integer", "g": "integer"}
  })");
}

std::vector<Query> parse_two_kleene_workload() {
  // Two queries over a common Kleene sub-pattern B+.
  return parse_queries(
      "QUERY q1 / RETURN COUNT(*) / PATTERN SEQ(A, B+) / WITHIN 100 SLIDE 100\n"
      "QUERY q2 / RETURN COUNT(*) / PATTERN SEQ(C, B+) / WITHIN 100 SLIDE 100\n",
      wide_schema());
}

}  // namespace

TEST_CASE("full query block parses every clause") {
  Query q = parse_query(
      "QUERY q7 / RETURN SUM(B.v) / PATTERN SEQ(A, B+) /\n"
      "WHERE A.v >= 10 AND NEXT(B).v > PREV(B).w AND [g] /\n"
      "GROUPBY g / WITHIN 30 SLIDE 10\n",
      wide_schema());
  CHECK(q.id == "q7");
  CHECK(q.agg.kind == AggKind::Sum);
  CHECK(q.agg.type == "B");
  CHECK(q.agg.attr == "v");
  REQUIRE(q.locals.size() == 1);
  CHECK(q.locals[0].type == "A");
  CHECK(q.locals[0].cmp == Cmp::Ge);
  REQUIRE(q.adjacents.size() == 1);
  CHECK(q.adjacents[0].type == "B");
  CHECK(q.adjacents[0].next_attr == "v");
  CHECK(q.adjacents[0].prev_attr == "w");
  CHECK(q.equivalence == std::vector<std::string>{"g"});
  CHECK(q.groupby == std::vector<std::string>{"g"});
  CHECK(q.window_size == 30);
  CHECK(q.window_slide == 10);
  CHECK(q.types == std::vector<std::string>{"A", "B"});
  CHECK(q.kleene_types == std::vector<std::string>{"B"});
}

TEST_CASE("parser rejections") {
  Schema s = wide_schema();
  auto parse1 = [&](const std::string& text) { return parse_query(text, s); };

  SUBCASE("negation is unsupported") {
    CHECK_THROWS_WITH_AS(
        parse1("QUERY q / RETURN COUNT(*) / PATTERN SEQ(A, NOT(B), C) / WITHIN 10 SLIDE 10"),
        "query: NOT patterns (negation) are unsupported", ParseError);
  }
  SUBCASE("type may appear only once in a pattern") {
    CHECK_THROWS_AS(parse1("QUERY q / RETURN COUNT(*) / PATTERN SEQ(A, B+, A) / WITHIN 10 SLIDE 10"),
                    ParseError);
  }
  SUBCASE("window well-formedness") {
    CHECK_THROWS_AS(parse1("QUERY q / RETURN COUNT(*) / PATTERN B+ / WITHIN 5 SLIDE 10"), ParseError);
    CHECK_THROWS_AS(parse1("QUERY q / RETURN COUNT(*) / PATTERN B+ / WITHIN 5 SLIDE 0"), ParseError);
  }
  SUBCASE("unknown pattern type") {
    CHECK_THROWS_AS(parse1("QUERY q / RETURN COUNT(*) / PATTERN Z+ / WITHIN 10 SLIDE 10"), SchemaError);
  }
  SUBCASE("aggregate type must occur in the pattern") {
    CHECK_THROWS_AS(parse1("QUERY q / RETURN SUM(C.v) / PATTERN SEQ(A, B+) / WITHIN 10 SLIDE 10"),
                    ParseError);
  }
  SUBCASE("unknown predicate attribute") {
    CHECK_THROWS_AS(
        parse1("QUERY q / RETURN COUNT(*) / PATTERN B+ / WHERE B.zz > 1 / WITHIN 10 SLIDE 10"),
        SchemaError);
  }
  SUBCASE("AND limited to COUNT(*)") {
    CHECK_THROWS_AS(parse1("QUERY q / RETURN SUM(B.v) / PATTERN AND(B+, C+) / WITHIN 10 SLIDE 10"),
                    ParseError);
  }
  SUBCASE("OR operands must use disjoint types") {
    CHECK_THROWS_AS(
        parse1("QUERY q / RETURN COUNT(*) / PATTERN OR(SEQ(A, B+), SEQ(C, B)) / WITHIN 10 SLIDE 10"),
        ParseError);
  }
  SUBCASE("OR must be top-level") {
    CHECK_THROWS_AS(
        parse1("QUERY q / RETURN COUNT(*) / PATTERN SEQ(A, OR(B, C)) / WITHIN 10 SLIDE 10"),
        ParseError);
  }
}

TEST_CASE("per-query template: Kleene closure edges") {
  Schema s = wide_schema();

  SUBCASE("SEQ with trailing Kleene") {
    Query q = parse_query("QUERY q / RETURN COUNT(*) / PATTERN SEQ(A, B+) / WITHIN 10 SLIDE 10", s);
    QueryTemplate t = build_template(q);
    CHECK(t.start == std::set<std::string>{"A"});
    CHECK(t.end == std::set<std::string>{"B"});
    CHECK(t.has_edge("A", "B"));
    CHECK(t.has_edge("B", "B"));
    CHECK_FALSE(t.has_edge("B", "A"));
  }
  SUBCASE("nested Kleene adds the loop-back edge") {
    Query q = parse_query("QUERY q / RETURN COUNT(*) / PATTERN SEQ(A, B+)+ / WITHIN 10 SLIDE 10", s);
    QueryTemplate t = build_template(q);
    CHECK(t.has_edge("A", "B"));
    CHECK(t.has_edge("B", "B"));
    CHECK(t.has_edge("B", "A"));  // restart of the outer iteration
    CHECK(t.start == std::set<std::string>{"A"});
    CHECK(t.end == std::set<std::string>{"B"});
  }
  SUBCASE("disjunction unions two components") {
    Query q = parse_query("QUERY q / RETURN COUNT(*) / PATTERN OR(SEQ(A, B+), C+) / WITHIN 10 SLIDE 10", s);
    QueryTemplate t = build_template(q);
    CHECK(t.is_or);
    CHECK(t.start == std::set<std::string>{"A", "C"});
    CHECK(t.end == std::set<std::string>{"B", "C"});
    CHECK(t.operand.at("A") == 0);
    CHECK(t.operand.at("C") == 1);
    CHECK_FALSE(t.has_edge("B", "C"));
  }
}

TEST_CASE("merged template labels transitions with query sets") {
  auto workload = parse_two_kleene_workload();
  MergedTemplate m = build_merged_template(workload);
  CHECK(m.states == std::set<std::string>{"A", "B", "C"});
  CHECK(m.transitions.at({"B", "B"}) == std::set<std::string>{"q1", "q2"});
  CHECK(m.transitions.at({"A", "B"}) == std::set<std::string>{"q1"});
  CHECK(m.transitions.at({"C", "B"}) == std::set<std::string>{"q2"});
  CHECK(m.pt("B", "q1") == std::set<std::string>{"A", "B"});
  CHECK(m.pt("B", "q2") == std::set<std::string>{"B", "C"});
  CHECK(m.start_of("q1") == std::set<std::string>{"A"});
  CHECK(m.end_of("q2") == std::set<std::string>{"B"});
}

TEST_CASE("sharable sets respect aggregate compatibility") {
  Schema s = wide_schema();
  auto wl = [&](const std::string& text) { return parse_queries(text, s); };

  SUBCASE("two COUNT(*) queries over B+ share") {
    auto sets = find_sharable(parse_two_kleene_workload());
    REQUIRE(sets.size() == 1);
    CHECK(sets[0].kleene_type == "B");
    CHECK(sets[0].query_ids == std::vector<std::string>{"q1", "q2"});
  }
  SUBCASE("SUM, AVG over one attribute and COUNT(E) share") {
    auto sets = find_sharable(wl(
        "QUERY a / RETURN SUM(B.v) / PATTERN SEQ(A, B+) / WITHIN 10 SLIDE 10\n"
        "QUERY b / RETURN AVG(B.v) / PATTERN SEQ(C, B+) / WITHIN 10 SLIDE 10\n"
        "QUERY c / RETURN COUNT(B) / PATTERN SEQ(D, B+) / WITHIN 10 SLIDE 10\n"));
    REQUIRE(sets.size() == 1);
    CHECK(sets[0].query_ids == std::vector<std::string>{"a", "b", "c"});
  }
  SUBCASE("sums over different attributes do not share") {
    auto sets = find_sharable(wl(
        "QUERY a / RETURN SUM(B.v) / PATTERN SEQ(A, B+) / WITHIN 10 SLIDE 10\n"
        "QUERY b / RETURN SUM(B.w) / PATTERN SEQ(C, B+) / WITHIN 10 SLIDE 10\n"));
    CHECK(sets.empty());
  }
  SUBCASE("MIN and MAX do not share with each other") {
    auto sets = find_sharable(wl(
        "QUERY a / RETURN MIN(B.v) / PATTERN SEQ(A, B+) / WITHIN 10 SLIDE 10\n"
        "QUERY b / RETURN MAX(B.v) / PATTERN SEQ(C, B+) / WITHIN 10 SLIDE 10\n"));
    CHECK(sets.empty());
  }
  SUBCASE("different grouping keys split the set") {
    auto sets = find_sharable(wl(
        "QUERY a / RETURN COUNT(*) / PATTERN SEQ(A, B+) / GROUPBY g / WITHIN 10 SLIDE 10\n"
        "QUERY b / RETURN COUNT(*) / PATTERN SEQ(C, B+) / WITHIN 10 SLIDE 10\n"));
    CHECK(sets.empty());
  }
  SUBCASE("three sharing plus one loner") {
    auto sets = find_sharable(wl(
        "QUERY a / RETURN COUNT(*) / PATTERN SEQ(A, B+) / WITHIN 10 SLIDE 10\n"
        "QUERY b / RETURN COUNT(*) / PATTERN SEQ(C, B+) / WITHIN 10 SLIDE 10\n"
        "QUERY c / RETURN COUNT(*) / PATTERN SEQ(D, B+) / WITHIN 10 SLIDE 10\n"
        "QUERY d / RETURN MIN(B.v) / PATTERN B+ / WITHIN 10 SLIDE 10\n"));
    REQUIRE(sets.size() == 1);
    CHECK(sets[0].query_ids == std::vector<std::string>{"a", "b", "c"});
  }
}

TEST_CASE("pane length is the gcd of sizes and slides") {
  Schema s = wide_schema();
  Query a = parse_query("QUERY a / RETURN COUNT(*) / PATTERN B+ / WITHIN 10 SLIDE 5", s);
  Query b = parse_query("QUERY b / RETURN COUNT(*) / PATTERN C+ / WITHIN 15 SLIDE 5", s);
  Query c = parse_query("QUERY c / RETURN COUNT(*) / PATTERN D+ / WITHIN 4 SLIDE 2", s);
  Query d = parse_query("QUERY d / RETURN COUNT(*) / PATTERN A+ / WITHIN 6 SLIDE 3", s);
  CHECK(pane_of({&a, &b}) == 5);
  CHECK(pane_of({&c, &d}) == 1);
  CHECK(pane_of({&a}) == 5);
}

TEST_CASE("units are connected components of sharing") {
  Schema s = wide_schema();
  auto workload = parse_queries(
      "QUERY a / RETURN COUNT(*) / PATTERN SEQ(A, B+) / WITHIN 10 SLIDE 5\n"
      "QUERY b / RETURN COUNT(*) / PATTERN SEQ(C, B+) / WITHIN 20 SLIDE 10\n"
      "QUERY c / RETURN MIN(D.v) / PATTERN D+ / WITHIN 8 SLIDE 8\n",
      s);
  auto units = build_units(workload);
  REQUIRE(units.size() == 2);
  CHECK(units[0].query_ids == std::vector<std::string>{"a", "b"});
  REQUIRE(units[0].shared.size() == 1);
  CHECK(units[0].pane == 5);
  CHECK(units[1].query_ids == std::vector<std::string>{"c"});
  CHECK(units[1].shared.empty());
  CHECK(units[1].pane == 8);
}

TEST_CASE("event matching and adjacency checks") {
  Schema s = wide_schema();
  Query q = parse_query(
      "QUERY q / RETURN COUNT(*) / PATTERN SEQ(A, B+) / WHERE B.v > 2 AND NEXT(B).v > PREV(B).v / "
      "WITHIN 10 SLIDE 10",
      s);
  Event a{1, "A", {{"v", std::int64_t{0}}, {"g", std::int64_t{0}}}, 0};
  Event b_lo{2, "B", {{"v", std::int64_t{1}}, {"w", std::int64_t{0}}, {"g", std::int64_t{0}}}, 1};
  Event b3{3, "B", {{"v", std::int64_t{3}}, {"w", std::int64_t{0}}, {"g", std::int64_t{0}}}, 2};
  Event b9{4, "B", {{"v", std::int64_t{9}}, {"w", std::int64_t{0}}, {"g", std::int64_t{0}}}, 3};
  Event c{5, "C", {{"v", std::int64_t{1}}, {"g", std::int64_t{0}}}, 4};

  CHECK(event_matches(q, a));        // no local predicate on A
  CHECK_FALSE(event_matches(q, b_lo));
  CHECK(event_matches(q, b3));
  CHECK_FALSE(event_matches(q, c));  // C not in the pattern

  CHECK(adjacent_ok(q, b3, b9));
  CHECK_FALSE(adjacent_ok(q, b9, b3));
  CHECK(adjacent_ok(q, a, b3));  // cross-type pairs unconstrained
}
