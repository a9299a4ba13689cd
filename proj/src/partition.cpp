#include "hamlet/partition.hpp"

namespace hamlet {

std::string partition_key(const Event& e, const std::vector<std::string>& attrs) {
  std::string key;
  for (std::size_t i = 0; i < attrs.size(); ++i) {
    auto it = e.attrs.find(attrs[i]);
    if (it == e.attrs.end())
      throw RoutingError("partition: event of type '" + e.type + "' lacks grouping attribute '" +
                         attrs[i] + "'");
    if (i) key += '|';
    key += attr_value_to_string(it->second);
  }
  return key;
}

std::vector<WindowInstance> windows_containing_pane(Time size, Time slide, Time pane_start,
                                                    Time pane) {
  std::vector<WindowInstance> out;
  // need i*slide <= pane_start and pane_start + pane <= i*slide + size
  Time lo_num = pane_start + pane - size;  // i*slide >= lo_num
  Time lo = lo_num <= 0 ? 0 : (lo_num + slide - 1) / slide;
  Time hi = pane_start / slide;  // i*slide <= pane_start
  for (Time i = lo; i <= hi; ++i) out.push_back(WindowInstance{i * slide, i * slide + size});
  return out;
}

std::vector<WindowInstance> windows_overlapping_span(Time size, Time slide, Time t_max) {
  std::vector<WindowInstance> out;
  for (Time i = 0; i * slide <= t_max; ++i)
    out.push_back(WindowInstance{i * slide, i * slide + size});
  return out;
}

std::optional<Burst> BurstBuffer::push(const Event& e) {
  Time p = pane_start_of(e.time, pane_);
  std::optional<Burst> done;
  if (!current_.empty() && (current_.type != e.type || current_.pane_start != p)) {
    done = std::move(current_);
    current_ = Burst{};
  }
  if (current_.empty()) {
    current_.type = e.type;
    current_.pane_start = p;
  }
  current_.events.push_back(e);
  return done;
}

std::optional<Burst> BurstBuffer::flush() {
  if (current_.empty()) return std::nullopt;
  Burst done = std::move(current_);
  current_ = Burst{};
  return done;
}

}  // namespace hamlet
