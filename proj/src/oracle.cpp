#include "hamlet/oracle.hpp"

#include <algorithm>
#include <map>

namespace hamlet {

namespace {

struct Dfs {
  const Query& q;
  QueryTemplate tmpl;
  std::vector<const Event*> matched;
  const std::function<void(const std::vector<const Event*>&)>& visit;
  std::vector<const Event*> path;

  void run() {
    for (std::size_t i = 0; i < matched.size(); ++i) {
      if (!tmpl.start.count(matched[i]->type)) continue;
      path.push_back(matched[i]);
      step(i);
      path.pop_back();
    }
  }

  void step(std::size_t last_idx) {
    const Event* last = path.back();
    if (tmpl.end.count(last->type)) visit(path);
    for (std::size_t i = last_idx + 1; i < matched.size(); ++i) {
      const Event* next = matched[i];
      if (!tmpl.has_edge(last->type, next->type)) continue;
      if (!adjacent_ok(q, *last, *next)) continue;
      path.push_back(next);
      step(i);
      path.pop_back();
    }
  }
};

}  // namespace

void visit_trends(const Query& q, const std::vector<const Event*>& events, std::size_t cap,
                  const std::function<void(const std::vector<const Event*>&)>& visit) {
  std::vector<const Event*> matched;
  for (const Event* e : events)
    if (event_matches(q, *e)) matched.push_back(e);
  if (matched.size() > cap)
    throw OracleCapError("oracle: " + std::to_string(matched.size()) +
                         " matched events exceed the enumeration cap of " + std::to_string(cap));
  std::stable_sort(matched.begin(), matched.end(),
                   [](const Event* a, const Event* b) { return a->seq < b->seq; });
  Dfs dfs{q, build_template(q), std::move(matched), visit, {}};
  dfs.run();
}

std::vector<Trend> enumerate_trends(const Query& q, const std::vector<const Event*>& events,
                                    std::size_t cap) {
  std::vector<Trend> out;
  visit_trends(q, events, cap,
               [&](const std::vector<const Event*>& path) { out.push_back(Trend{path}); });
  return out;
}

AggOutcome aggregate_trends(const Query& q, const std::vector<const Event*>& events,
                            std::size_t cap) {
  AggOutcome out;
  const bool is_and = q.pattern.kind == Pattern::Kind::And;
  QueryTemplate tmpl = build_template(q);

  if (!is_and) {
    visit_trends(q, events, cap, [&](const std::vector<const Event*>& trend) {
      out.payload.cnt += 1;
      if (q.agg.kind == AggKind::CountStar) return;
      for (const Event* e : trend) {
        if (e->type != q.agg.type) continue;
        out.payload.ecnt += 1;
        if (q.agg.kind == AggKind::CountType) continue;
        Rat v = rat_from_attr(e->attrs.at(q.agg.attr));
        out.payload.esum += v;
        out.note_agg_event(v);
      }
    });
    return out;
  }

  // AND: trends of the two operands are combined pairwise (COUNT(*) only;
  // operands use disjoint types, so no trend matches both sides).
  Int c1 = 0, c2 = 0;
  visit_trends(q, events, cap, [&](const std::vector<const Event*>& trend) {
    if (tmpl.operand.at(trend.front()->type) == 0) c1 += 1;
    else c2 += 1;
  });
  out.payload.cnt = c1 * c2;
  return out;
}

ResultTable oracle_run(const std::vector<Query>& workload, const std::vector<Event>& events,
                       std::size_t cap) {
  ResultTable table;
  std::vector<Unit> units = build_units(workload);
  std::map<std::string, const Query*> by_id;
  for (const auto& q : workload) by_id[q.id] = &q;

  Time t_max = 0;
  for (const auto& e : events) t_max = std::max(t_max, e.time);

  for (const auto& unit : units) {
    std::vector<const Query*> qs;
    for (const auto& id : unit.query_ids) qs.push_back(by_id.at(id));

    // Partition the unit-relevant matched events.
    std::map<std::string, std::vector<const Event*>> partitions;
    std::map<std::string, std::map<std::string, AttrValue>> partition_values;
    for (const auto& e : events) {
      bool relevant = false;
      for (const Query* q : qs)
        if (event_matches(*q, e)) relevant = true;
      if (!relevant) continue;
      std::string key = partition_key(e, unit.partition_attrs);
      auto& vec = partitions[key];
      vec.push_back(&e);
      if (vec.size() == 1) {
        for (const auto& a : unit.partition_attrs) partition_values[key][a] = e.attrs.at(a);
      }
    }
    if (events.empty()) continue;

    for (const Query* q : qs) {
      for (const auto& w : windows_overlapping_span(q->window_size, q->window_slide, t_max)) {
        // group-key -> merged outcome across partitions
        std::map<std::string, AggOutcome> groups;
        for (const auto& [key, evs] : partitions) {
          std::vector<const Event*> in_window;
          for (const Event* e : evs)
            if (e->time >= w.start && e->time < w.end) in_window.push_back(e);
          std::string group;
          for (std::size_t i = 0; i < q->groupby.size(); ++i) {
            if (i) group += '|';
            group += attr_value_to_string(partition_values.at(key).at(q->groupby[i]));
          }
          groups[group].merge(aggregate_trends(*q, in_window, cap));
        }
        for (const auto& [group, outcome] : groups) {
          auto cell = finalize_cell(*q, w.end, outcome);
          if (!cell) continue;
          table[ResultKey{q->id, w.start, group}] = std::move(*cell);
        }
      }
    }
  }
  return table;
}

}  // namespace hamlet
