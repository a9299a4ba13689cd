#include "hamlet/events.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

namespace hamlet {

using nlohmann::json;

std::string attr_kind_name(AttrKind kind) {
  switch (kind) {
    case AttrKind::Integer: return "integer";
    case AttrKind::Real: return "real";
    case AttrKind::Text: return "text";
  }
  return "?";
}

std::string attr_value_to_string(const AttrValue& v) {
  if (const auto* i = std::get_if<std::int64_t>(&v)) return std::to_string(*i);
  if (const auto* d = std::get_if<double>(&v)) {
    json j = *d;  // shortest round-trip formatting
    return j.dump();
  }
  return std::get<std::string>(v);
}

static AttrKind parse_kind(const std::string& s, const std::string& where) {
  if (s == "integer") return AttrKind::Integer;
  if (s == "real") return AttrKind::Real;
  if (s == "text") return AttrKind::Text;
  throw SchemaError("schema: unknown value kind '" + s + "' at " + where);
}

Schema Schema::parse_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ParseError(std::string("schema: invalid JSON: ") + e.what());
  }
  if (!j.is_object()) throw SchemaError("schema: top level must be an object mapping type name to attributes");
  Schema out;
  for (auto it = j.begin(); it != j.end(); ++it) {
    EventType et;
    et.name = it.key();
    if (!it.value().is_object())
      throw SchemaError("schema: type '" + et.name + "' must map attribute names to kinds");
    for (auto at = it.value().begin(); at != it.value().end(); ++at) {
      if (!at.value().is_string())
        throw SchemaError("schema: attribute '" + et.name + "." + at.key() + "' kind must be a string");
      et.schema[at.key()] = parse_kind(at.value().get<std::string>(), et.name + "." + at.key());
    }
    if (et.schema.empty())
      throw SchemaError("schema: type '" + et.name + "' declares no attributes; schemas must be non-empty");
    out.types[et.name] = std::move(et);
  }
  return out;
}

Schema Schema::load_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("schema: cannot open file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_json(ss.str());
}

const EventType* Schema::find(const std::string& name) const {
  auto it = types.find(name);
  return it == types.end() ? nullptr : &it->second;
}

Event ingest_line(const std::string& line, const Schema& schema) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::exception& e) {
    throw ParseError(std::string("event: invalid JSON record: ") + e.what());
  }
  if (!j.is_object()) throw ParseError("event: record must be a JSON object");
  if (!j.contains("time") || !j["time"].is_number_integer())
    throw ParseError("event: field 'time' missing or not an integer");
  if (!j.contains("type") || !j["type"].is_string())
    throw ParseError("event: field 'type' missing or not a string");

  Event e;
  e.time = j["time"].get<Time>();
  if (e.time < 0) throw ParseError("event: field 'time' must be non-negative");
  e.type = j["type"].get<std::string>();

  const EventType* et = schema.find(e.type);
  if (!et) throw SchemaError("event: unknown event type '" + e.type + "'");

  json attrs = j.contains("attrs") ? j["attrs"] : json::object();
  if (!attrs.is_object()) throw ParseError("event: field 'attrs' must be an object");

  for (auto it = attrs.begin(); it != attrs.end(); ++it) {
    auto kind_it = et->schema.find(it.key());
    if (kind_it == et->schema.end())
      throw SchemaError("event: attribute '" + it.key() + "' not declared for type '" + e.type + "'");
    const json& v = it.value();
    switch (kind_it->second) {
      case AttrKind::Integer:
        if (!v.is_number_integer())
          throw SchemaError("event: attribute '" + it.key() + "' of type '" + e.type + "' must be an integer");
        e.attrs[it.key()] = v.get<std::int64_t>();
        break;
      case AttrKind::Real:
        if (!v.is_number())
          throw SchemaError("event: attribute '" + it.key() + "' of type '" + e.type + "' must be numeric");
        e.attrs[it.key()] = v.get<double>();
        break;
      case AttrKind::Text:
        if (!v.is_string())
          throw SchemaError("event: attribute '" + it.key() + "' of type '" + e.type + "' must be text");
        e.attrs[it.key()] = v.get<std::string>();
        break;
    }
  }
  for (const auto& [name, kind] : et->schema) {
    (void)kind;
    if (!e.attrs.count(name))
      throw SchemaError("event: attribute '" + name + "' required by type '" + e.type + "' is missing");
  }
  return e;
}

std::string serialize_event(const Event& e) {
  json attrs = json::object();
  for (const auto& [k, v] : e.attrs) {
    if (const auto* i = std::get_if<std::int64_t>(&v)) attrs[k] = *i;
    else if (const auto* d = std::get_if<double>(&v)) attrs[k] = *d;
    else attrs[k] = std::get<std::string>(v);
  }
  json j;
  j["time"] = e.time;
  j["type"] = e.type;
  j["attrs"] = attrs;
  return j.dump();
}

StreamSource::StreamSource(std::vector<Event> events) : events_(std::move(events)) {
  for (std::size_t i = 0; i < events_.size(); ++i) events_[i].seq = i;
}

StreamSource StreamSource::from_file(const std::string& path, const Schema& schema) {
  std::ifstream in(path);
  if (!in) throw ParseError("events: cannot open file '" + path + "'");
  std::vector<Event> evs;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;
    try {
      evs.push_back(ingest_line(line, schema));
    } catch (const std::exception& e) {
      throw ParseError("events: line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return StreamSource(std::move(evs));
}

StreamSource StreamSource::from_text(const std::string& text, const Schema& schema) {
  std::vector<Event> evs;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;
    try {
      evs.push_back(ingest_line(line, schema));
    } catch (const std::exception& e) {
      throw ParseError("events: line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return StreamSource(std::move(evs));
}

std::optional<Event> StreamSource::next_ordered() {
  if (pos_ >= events_.size()) return std::nullopt;
  const Event& e = events_[pos_];
  if (e.time < last_time_)
    throw OrderError("stream: event at position " + std::to_string(pos_) + " has time " +
                     std::to_string(e.time) + " earlier than predecessor time " +
                     std::to_string(last_time_) + "; the engine does not reorder");
  last_time_ = e.time;
  ++pos_;
  return events_[pos_ - 1];
}

}  // namespace hamlet
