#pragma once
// Stream partitioner: group-partition keys, pane-aligned window instances,
// and per-partition burst buffering.

#include <optional>
#include <string>
#include <vector>

#include "hamlet/events.hpp"
#include "hamlet/queries.hpp"

namespace hamlet {

struct RoutingError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Deterministic composite key over the partition attributes (grouping plus
// equivalence attributes). Empty attribute list -> single global key "".
std::string partition_key(const Event& e, const std::vector<std::string>& attrs);

struct WindowInstance {
  Time start = 0;
  Time end = 0;  // exclusive

  bool operator==(const WindowInstance& o) const { return start == o.start && end == o.end; }
};

// All window instances [i*slide, i*slide+size), i >= 0, that fully contain
// the pane [pane_start, pane_start + pane). Pane length divides size and
// slide, so a pane is either inside a window or disjoint from it.
std::vector<WindowInstance> windows_containing_pane(Time size, Time slide, Time pane_start, Time pane);

// Emission rule shared by all strategies: every instance with start <= t_max.
std::vector<WindowInstance> windows_overlapping_span(Time size, Time slide, Time t_max);

// Same-type events buffered within one pane; completed by the arrival of a
// different relevant type, by the pane boundary, or by end of stream.
struct Burst {
  std::string type;
  Time pane_start = 0;
  std::vector<Event> events;

  bool empty() const { return events.empty(); }
  std::size_t size() const { return events.size(); }
};

// Per-partition burst buffer. The caller feeds relevant (matched) events and
// pane boundaries; completed bursts come back in arrival order.
class BurstBuffer {
 public:
  explicit BurstBuffer(Time pane) : pane_(pane) {}

  // Returns a completed burst if `e` closes the current one (different type
  // or new pane); the new event always starts/extends the current burst.
  std::optional<Burst> push(const Event& e);

  // Pane boundary or end of stream: flush whatever is buffered.
  std::optional<Burst> flush();

  const Burst& current() const { return current_; }
  Time pane_length() const { return pane_; }
  static Time pane_start_of(Time t, Time pane) { return (t / pane) * pane; }

 private:
  Time pane_;
  Burst current_;
};

}  // namespace hamlet
