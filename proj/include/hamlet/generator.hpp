#pragma once
// Deterministic synthetic stream generator. A stream is a sequence of bursts:
// each burst picks an event type by rate weight, a length from the configured
// range, and one value per attribute. Events arrive one per time unit.
//
// The divergence knob shapes the designated attribute so that a controlled
// fraction of bursts violate adjacent predicates of the form
// NEXT(E).a > PREV(E).a: divergent bursts oscillate between the top and
// bottom of the value range, every other burst pair failing; uniform bursts
// rise monotonically with event time.

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "hamlet/events.hpp"

namespace hamlet {

struct GeneratorSpec {
  Time duration = 0;  // stream length in time units; one event per unit
  std::vector<std::pair<std::string, double>> type_rates;  // sorted by type
  std::uint64_t burst_min = 1, burst_max = 1;

  struct Range {
    std::int64_t lo = 0;
    std::int64_t hi = 0;
  };
  std::vector<std::pair<std::string, Range>> attr_ranges;  // sorted by name

  double divergence = 0.0;      // fraction of bursts made predicate-divergent
  std::string divergence_attr;  // shaped per event when set; others are
                                // sampled once per burst
  std::uint64_t seed = 1;

  static GeneratorSpec parse_json(const std::string& text);
  static GeneratorSpec load_file(const std::string& path);
};

// Byte-identical output for identical specs (including the seed).
std::vector<Event> generate_stream(const GeneratorSpec& spec);

}  // namespace hamlet
