#include "doctest.h"

#include "hamlet/events.hpp"

using namespace hamlet;

namespace {

const char* kSchemaJson = R"({
  "A": {"v": "integer"},
  "B": {"v": "integer", "x": "real"},
  "T": {"tag": "text"}
})";

Schema demo_schema() { return Schema::parse_json(kSchemaJson); }

}  // namespace

TEST_CASE("schema parses kinds and rejects unknown kind") {
  Schema s = demo_schema();
  REQUIRE(s.types.size() == 3);
  CHECK(s.find("A") != nullptr);
  CHECK(s.find("Z") == nullptr);
  CHECK(s.types.at("B").schema.at("x") == AttrKind::Real);
  CHECK(s.types.at("T").schema.at("tag") == AttrKind::Text);
  CHECK_THROWS_AS(Schema::parse_json(R"({"A":{"v":"decimal"}})"), SchemaError);
}

TEST_CASE("ingest_line validates against the schema") {
  Schema s = demo_schema();

  Event e = ingest_line(R"({"time": 7, "type": "B", "attrs": {"v": 3, "x": 1.5}})", s);
  CHECK(e.time == 7);
  CHECK(e.type == "B");
  CHECK(std::get<std::int64_t>(e.attrs.at("v")) == 3);
  CHECK(std::get<double>(e.attrs.at("x")) == 1.5);

  SUBCASE("integer literal accepted for a real attribute") {
    Event f = ingest_line(R"({"time": 1, "type": "B", "attrs": {"v": 3, "x": 2}})", s);
    CHECK(std::get<double>(f.attrs.at("x")) == 2.0);
  }
  SUBCASE("unknown type") {
    CHECK_THROWS_AS(ingest_line(R"({"time":1,"type":"Z","attrs":{}})", s), SchemaError);
  }
  SUBCASE("missing attribute") {
    CHECK_THROWS_AS(ingest_line(R"({"time":1,"type":"A","attrs":{}})", s), SchemaError);
  }
  SUBCASE("extra attribute") {
    CHECK_THROWS_AS(ingest_line(R"({"time":1,"type":"A","attrs":{"v":1,"w":2}})", s), SchemaError);
  }
  SUBCASE("wrong kind") {
    CHECK_THROWS_AS(ingest_line(R"({"time":1,"type":"A","attrs":{"v":"three"}})", s), SchemaError);
  }
  SUBCASE("negative time") {
    CHECK_THROWS_AS(ingest_line(R"({"time":-1,"type":"A","attrs":{"v":1}})", s), ParseError);
  }
  SUBCASE("malformed json") {
    CHECK_THROWS_AS(ingest_line("{nope", s), ParseError);
  }
}

TEST_CASE("serialize/ingest round-trips exactly") {
  Schema s = demo_schema();
  Event e = ingest_line(R"({"time": 42, "type": "T", "attrs": {"tag": "hi \"there\""}})", s);
  Event back = ingest_line(serialize_event(e), s);
  CHECK(back.time == e.time);
  CHECK(back.type == e.type);
  CHECK(back.attrs == e.attrs);
}

TEST_CASE("stream source assigns arrival order and enforces time order") {
  Schema s = demo_schema();
  StreamSource src = StreamSource::from_text(
      "{\"time\":1,\"type\":\"A\",\"attrs\":{\"v\":1}}\n"
      "\n"  // blank lines skipped
      "{\"time\":1,\"type\":\"A\",\"attrs\":{\"v\":2}}\n"
      "{\"time\":3,\"type\":\"T\",\"attrs\":{\"tag\":\"t\"}}\n",
      s);
  REQUIRE(src.size() == 3);
  auto a = src.next_ordered();
  auto b = src.next_ordered();
  auto c = src.next_ordered();
  REQUIRE(a);
  REQUIRE(b);
  REQUIRE(c);
  CHECK(a->seq < b->seq);
  CHECK(b->seq < c->seq);
  CHECK_FALSE(src.next_ordered());

  StreamSource bad = StreamSource::from_text(
      "{\"time\":5,\"type\":\"A\",\"attrs\":{\"v\":1}}\n"
      "{\"time\":4,\"type\":\"A\",\"attrs\":{\"v\":1}}\n",
      s);
  CHECK(bad.next_ordered());
  CHECK_THROWS_AS(bad.next_ordered(), OrderError);
}
