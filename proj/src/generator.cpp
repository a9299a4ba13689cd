#include "hamlet/generator.hpp"

#include <algorithm>
#include <fstream>
#include <random>
#include <sstream>

#include "json.hpp"

namespace hamlet {

namespace {

[[noreturn]] void fail(const std::string& what) { throw ParseError("generator: " + what); }

}  // namespace

GeneratorSpec GeneratorSpec::parse_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    fail(std::string("invalid JSON: ") + e.what());
  }
  if (!j.is_object()) fail("top level must be an object");

  GeneratorSpec spec;
  if (!j.contains("duration") || !j["duration"].is_number_integer())
    fail("'duration' (integer time units) is required");
  spec.duration = j["duration"].get<Time>();
  if (spec.duration <= 0) fail("'duration' must be positive");

  if (!j.contains("types") || !j["types"].is_object() || j["types"].empty())
    fail("'types' must map at least one event type to a rate");
  for (const auto& [name, val] : j["types"].items()) {
    double rate = 0.0;
    if (val.is_number())
      rate = val.get<double>();
    else if (val.is_object() && val.contains("rate") && val["rate"].is_number())
      rate = val["rate"].get<double>();
    else
      fail("type '" + name + "': rate must be a number or {\"rate\": number}");
    if (!(rate > 0.0)) fail("type '" + name + "': rate must be positive");
    spec.type_rates.emplace_back(name, rate);
  }
  std::sort(spec.type_rates.begin(), spec.type_rates.end());

  if (j.contains("burst_length")) {
    const auto& bl = j["burst_length"];
    if (!bl.is_object() || !bl.contains("min") || !bl.contains("max"))
      fail("'burst_length' must be {\"min\": int, \"max\": int}");
    spec.burst_min = bl["min"].get<std::uint64_t>();
    spec.burst_max = bl["max"].get<std::uint64_t>();
    if (spec.burst_min < 1 || spec.burst_min > spec.burst_max)
      fail("'burst_length' requires 1 <= min <= max");
  }

  if (j.contains("attributes")) {
    if (!j["attributes"].is_object()) fail("'attributes' must be an object");
    for (const auto& [name, val] : j["attributes"].items()) {
      if (!val.is_object() || !val.contains("min") || !val.contains("max"))
        fail("attribute '" + name + "' must be {\"min\": int, \"max\": int}");
      Range r{val["min"].get<std::int64_t>(), val["max"].get<std::int64_t>()};
      if (r.lo > r.hi) fail("attribute '" + name + "': min exceeds max");
      spec.attr_ranges.emplace_back(name, r);
    }
    std::sort(spec.attr_ranges.begin(), spec.attr_ranges.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
  }

  if (j.contains("divergence")) {
    if (!j["divergence"].is_number()) fail("'divergence' must be a number in [0,1]");
    spec.divergence = j["divergence"].get<double>();
    if (spec.divergence < 0.0 || spec.divergence > 1.0) fail("'divergence' must lie in [0,1]");
  }
  if (j.contains("divergence_attr")) {
    if (!j["divergence_attr"].is_string()) fail("'divergence_attr' must be a string");
    spec.divergence_attr = j["divergence_attr"].get<std::string>();
    bool known = std::any_of(spec.attr_ranges.begin(), spec.attr_ranges.end(),
                             [&](const auto& ar) { return ar.first == spec.divergence_attr; });
    if (!known) fail("'divergence_attr' names an attribute without a configured range");
  }
  if (j.contains("seed")) {
    if (!j["seed"].is_number_unsigned() && !j["seed"].is_number_integer())
      fail("'seed' must be an integer");
    spec.seed = j["seed"].get<std::uint64_t>();
  }
  return spec;
}

GeneratorSpec GeneratorSpec::load_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail("cannot open spec file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_json(buf.str());
}

std::vector<Event> generate_stream(const GeneratorSpec& spec) {
  std::mt19937_64 rng(spec.seed);
  // Portable draws: the raw mt19937_64 sequence is pinned by the standard,
  // unlike the library distributions.
  auto draw_u64 = [&](std::uint64_t lo, std::uint64_t hi) {
    return lo + rng() % (hi - lo + 1);
  };
  auto draw_i64 = [&](std::int64_t lo, std::int64_t hi) {
    return lo + static_cast<std::int64_t>(rng() % static_cast<std::uint64_t>(hi - lo + 1));
  };
  double total_rate = 0.0;
  for (const auto& [name, rate] : spec.type_rates) total_rate += rate;

  std::vector<Event> out;
  out.reserve(static_cast<std::size_t>(spec.duration));
  Time t = 0;
  std::uint64_t seq = 0;
  double div_acc = 0.0;

  while (t < spec.duration) {
    // burst type by rate weight
    double r = (rng() >> 11) * 0x1.0p-53 * total_rate;
    const std::string* type = &spec.type_rates.back().first;
    for (const auto& [name, rate] : spec.type_rates) {
      if (r < rate) {
        type = &name;
        break;
      }
      r -= rate;
    }
    std::uint64_t len = std::min<std::uint64_t>(draw_u64(spec.burst_min, spec.burst_max),
                                                static_cast<std::uint64_t>(spec.duration - t));
    div_acc += spec.divergence;
    const bool divergent = div_acc >= 1.0 - 1e-12;
    if (divergent) div_acc -= 1.0;

    std::vector<std::int64_t> burst_vals(spec.attr_ranges.size());
    for (std::size_t a = 0; a < spec.attr_ranges.size(); ++a)
      burst_vals[a] = draw_i64(spec.attr_ranges[a].second.lo, spec.attr_ranges[a].second.hi);

    for (std::uint64_t i = 0; i < len; ++i, ++t) {
      Event e;
      e.time = t;
      e.type = *type;
      e.seq = seq++;
      for (std::size_t a = 0; a < spec.attr_ranges.size(); ++a) {
        const auto& [name, range] = spec.attr_ranges[a];
        std::int64_t v = burst_vals[a];
        if (name == spec.divergence_attr) {
          const auto span = static_cast<std::uint64_t>(range.hi - range.lo + 1);
          if (divergent)
            v = i % 2 == 0 ? range.hi - static_cast<std::int64_t>((i / 2) % span)
                           : range.lo + static_cast<std::int64_t>((i / 2 + 1) % span);
          else
            v = range.lo + static_cast<std::int64_t>(static_cast<std::uint64_t>(t) % span);
        }
        e.attrs[name] = v;
      }
      out.push_back(std::move(e));
    }
  }
  return out;
}

}  // namespace hamlet
