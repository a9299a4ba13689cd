#pragma once
// Event model: typed, timestamped tuples with attribute maps, workload
// schemas, and ordered stream ingestion from JSON-lines files.

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace hamlet {

using Time = std::int64_t;

enum class AttrKind { Integer, Real, Text };

// Attribute value as carried by an event. Integers stay exact; reals are
// converted to exact rationals only where aggregation needs them.
using AttrValue = std::variant<std::int64_t, double, std::string>;

std::string attr_kind_name(AttrKind kind);
std::string attr_value_to_string(const AttrValue& v);

struct EventType {
  std::string name;
  std::map<std::string, AttrKind> schema;  // attribute name -> kind
};

struct Schema {
  std::map<std::string, EventType> types;

  static Schema parse_json(const std::string& text);
  static Schema load_file(const std::string& path);
  const EventType* find(const std::string& name) const;
};

struct Event {
  Time time = 0;
  std::string type;
  std::map<std::string, AttrValue> attrs;
  // Arrival position assigned by the stream source. Trends are ordered
  // subsequences in arrival order; timestamps only gate window membership.
  std::uint64_t seq = 0;
};

struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct SchemaError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct OrderError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Parses and validates one JSON-lines event record against the schema.
Event ingest_line(const std::string& line, const Schema& schema);

// Canonical JSON-lines form; ingest(serialize(e)) round-trips unchanged.
std::string serialize_event(const Event& e);

// Ordered event source over a pre-loaded buffer or a JSON-lines file.
// Enforces non-decreasing timestamps (the engine does not reorder).
class StreamSource {
 public:
  explicit StreamSource(std::vector<Event> events);
  static StreamSource from_file(const std::string& path, const Schema& schema);
  static StreamSource from_text(const std::string& text, const Schema& schema);

  // Next event in arrival order, or nullopt at end of stream.
  std::optional<Event> next_ordered();
  std::size_t size() const { return events_.size(); }
  const std::vector<Event>& events() const { return events_; }

 private:
  std::vector<Event> events_;
  std::size_t pos_ = 0;
  Time last_time_ = -1;
};

}  // namespace hamlet
