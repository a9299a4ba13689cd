#include "hamlet/engine.hpp"

#include <algorithm>
#include <cassert>
#include <chrono>
#include <functional>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <stdexcept>
#include <tuple>

#include "hamlet/expression.hpp"
#include "hamlet/partition.hpp"

namespace hamlet {

namespace {

using Clock = std::chrono::steady_clock;

// ---------------------------------------------------------------------------
// Blanket checks: can a predicate outcome against a whole set of previous
// values be certified from their running extremes alone?

struct MinMaxAttr {
  bool any = false;
  AttrValue lo, hi;

  void add(const AttrValue& v) {
    if (!any) {
      lo = hi = v;
      any = true;
      return;
    }
    if (cmp_holds(v, Cmp::Lt, lo)) lo = v;
    if (cmp_holds(v, Cmp::Gt, hi)) hi = v;
  }
};

enum class Blanket { Full, Fail, Mixed, Vacuous };

// Outcome of `cmp(next_val, prev)` over every summarized prev value.
// Mixed is conservative: uncertifiable cases fall back to exact work.
Blanket blanket_check(Cmp cmp, const AttrValue& next_val, const MinMaxAttr& mm) {
  if (!mm.any) return Blanket::Vacuous;
  const bool vs_lo = cmp_holds(next_val, cmp, mm.lo);
  const bool vs_hi = cmp_holds(next_val, cmp, mm.hi);
  const bool single = cmp_holds(mm.lo, Cmp::Eq, mm.hi);
  switch (cmp) {
    case Cmp::Lt:
    case Cmp::Le:
      if (vs_lo) return Blanket::Full;  // passes against the smallest prev
      if (!vs_hi) return Blanket::Fail;
      return Blanket::Mixed;
    case Cmp::Gt:
    case Cmp::Ge:
      if (vs_hi) return Blanket::Full;
      if (!vs_lo) return Blanket::Fail;
      return Blanket::Mixed;
    case Cmp::Eq:
      if (vs_lo && vs_hi) return Blanket::Full;  // lo == next == hi
      if (cmp_holds(next_val, Cmp::Lt, mm.lo) || cmp_holds(next_val, Cmp::Gt, mm.hi))
        return Blanket::Fail;
      if (!vs_lo && !vs_hi && single) return Blanket::Fail;
      return Blanket::Mixed;
    case Cmp::Ne:
      if (single) return vs_lo ? Blanket::Full : Blanket::Fail;
      if (cmp_holds(next_val, Cmp::Lt, mm.lo) || cmp_holds(next_val, Cmp::Gt, mm.hi))
        return Blanket::Full;
      return Blanket::Mixed;
  }
  return Blanket::Mixed;
}

// ---------------------------------------------------------------------------
// Runtime structures

struct StoredEvent {  // one closed matched event of a predicate-bearing type
  std::uint64_t seq = 0;
  // shared across the contexts of one graphlet close: the PREV-side attribute
  // values (aligned with the query's preds on this type) and the event's
  // expression, resolved on demand against the context's snapshot values
  std::shared_ptr<const std::vector<AttrValue>> prev_vals;
  std::shared_ptr<const Expression> expr;
};

struct WindowCtx {  // per (query, window-start) aggregation state
  std::map<std::string, Payload> closed;  // type -> totals over closed graphlets
  std::map<std::string, std::vector<StoredEvent>> stored;
  std::map<SnapshotId, Payload> snap_vals;  // values referenced by stored expressions
  std::map<std::string, std::vector<MinMaxAttr>> extremes;  // prev-attr extremes per pred
  std::uint64_t bytes_cache = 0;
};

std::uint64_t ctx_bytes(const WindowCtx& ctx) {
  std::uint64_t b = 64;
  b += 64 * ctx.closed.size();
  for (const auto& [t, vec] : ctx.stored)
    b += 32 + vec.size() * 64 +
         (vec.empty() ? 0 : vec.size() * 24 * vec.front().prev_vals->size());
  b += 96 * ctx.snap_vals.size();
  b += 64 * ctx.extremes.size();
  return b;
}

struct QueryRt {
  Query q;
  QueryTemplate tmpl;
  bool minmax = false;
  bool seeded = false;  // CountType/Sum/Avg on the aggregated type
  std::map<std::string, std::vector<const AdjacentPredicate*>> adj_by_type;
  std::map<std::string, std::vector<const LocalPredicate*>> locals_by_type;
  std::map<std::string, std::string> pred_sig_by_type;  // adjacent-pred shape key
  std::map<std::string, std::set<std::string>> pt_by_type;

  // match check for events whose type is already known to be one of q.types
  const std::vector<const LocalPredicate*>* locals_of(const std::string& type) const {
    auto it = locals_by_type.find(type);
    return it == locals_by_type.end() ? nullptr : &it->second;
  }
};

bool locals_pass(const std::vector<const LocalPredicate*>* locs, const Event& e) {
  if (!locs) return true;
  for (const auto* p : *locs) {
    auto it = e.attrs.find(p->attr);
    if (it == e.attrs.end() || !cmp_holds(it->second, p->cmp, p->constant)) return false;
  }
  return true;
}

struct SetRt {
  SharableSet set;
  std::vector<std::size_t> members;  // unit-member positions, sorted
  bool count_class = true;
  bool seed = false;          // the class aggregates the kleene type itself
  std::string seed_attr;      // may be empty (COUNT(E)-only class)
  std::uint64_t t = 1, p = 1; // cost factors over the full set
  bool b_shortcut = false;    // some member has no locals on the kleene type
  Time widest_size = 0, widest_slide = 1;  // widest member's window
  // set-member positions carrying adjacent predicates on the kleene type,
  // grouped by predicate shape: positions in one group share deviation counts
  std::vector<std::vector<std::size_t>> dev_groups;
  // event type -> set-member positions whose query mentions that type
  std::map<std::string, std::vector<std::size_t>> members_by_type;
  SharingStats scratch;       // reused per decision; query_ids filled once
};

struct PartitionRt {
  std::map<std::string, AttrValue> attr_values;
  BurstBuffer buffer;
  std::map<std::pair<std::size_t, Time>, WindowCtx> ctx;
  std::vector<Event> minmax_store;
  std::map<Time, double> pane_wall_ms;
  // set idx -> pane -> (matched events, closed graphlets); estimator inputs
  std::map<std::size_t, std::map<Time, std::pair<std::uint64_t, std::uint64_t>>> set_counts;
  std::map<std::size_t, bool> last_shared;
  std::map<std::string, std::uint32_t> last_expr_live;  // s_p estimator source
  std::vector<Time> created_next_emit;                  // emission watermark at creation
  std::uint64_t state_bytes = 0;
  std::uint32_t graphlet_snaps = 0, event_snaps = 0, compaction_snaps = 0;

  explicit PartitionRt(Time pane) : buffer(pane) {}
};

struct UnitRt {
  Unit unit;
  MergedTemplate merged;
  std::vector<QueryRt> queries;  // unit members, in unit.query_ids order
  std::vector<SetRt> sets;
  std::set<std::string> relevant;
  std::set<std::string> pred_types;
  std::set<std::string> minmax_types;
  std::map<std::string, std::vector<std::size_t>> queries_by_type;
  Time current_pane = -1;
  std::map<std::string, PartitionRt> partitions;
  std::vector<Time> next_emit;  // per member: next window start to emit
};

const char* kGraphletNames[] = {"x", "y", "u", "v", "w"};

}  // namespace

Strategy strategy_from_string(const std::string& name) {
  if (name == "dynamic") return Strategy::Dynamic;
  if (name == "static-shared") return Strategy::StaticShared;
  if (name == "non-shared") return Strategy::NonShared;
  throw std::invalid_argument("unknown strategy '" + name +
                              "' (use dynamic|static-shared|non-shared|oracle)");
}

std::string strategy_to_string(Strategy s) {
  switch (s) {
    case Strategy::Dynamic: return "dynamic";
    case Strategy::StaticShared: return "static-shared";
    case Strategy::NonShared: return "non-shared";
  }
  return "?";
}

// ---------------------------------------------------------------------------

struct Engine::State {
  EngineConfig cfg;
  std::vector<UnitRt> units;
  std::map<std::string, std::vector<std::size_t>> units_by_type;
  Time t_max = 0;
  bool any_event = false;
  bool finished = false;

  SnapshotId next_snap = 0;
  std::map<std::pair<std::size_t, std::string>, SnapshotId> sigma_ids;  // (unit, type)
  std::map<SnapshotId, std::vector<Payload>> sigma_vals;                // per unit member
  std::map<SnapshotId, std::string> snap_names;

  EngineStats stats;
  std::uint64_t current_bytes = 0;
  std::vector<DecisionRecord> decision_log;
  std::vector<TraceExpression> expr_trace;
  std::vector<TraceSnapshot> snap_trace;
  std::vector<LatencySample> latencies;
  Clock::time_point t0 = Clock::now();
  ResultTable table;

  double now_ms() const {
    return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
  }

  // --- construction -------------------------------------------------------
  explicit State(std::vector<Query> workload, EngineConfig config) : cfg(config) {
    auto built = build_units(workload);
    std::map<std::string, const Query*> by_id;
    for (const auto& q : workload) by_id[q.id] = &q;

    units.reserve(built.size());
    for (auto& unit : built) {
      UnitRt u;
      u.unit = unit;
      std::vector<Query> members;
      for (const auto& id : unit.query_ids) members.push_back(*by_id.at(id));
      u.merged = build_merged_template(members);
      u.next_emit.assign(members.size(), 0);
      for (std::size_t m = 0; m < members.size(); ++m) {
        QueryRt qr;
        qr.q = members[m];
        qr.tmpl = u.merged.per_query.at(qr.q.id);
        qr.minmax = qr.q.agg.kind == AggKind::Min || qr.q.agg.kind == AggKind::Max;
        qr.seeded = qr.q.agg.kind == AggKind::CountType || qr.q.agg.kind == AggKind::Sum ||
                    qr.q.agg.kind == AggKind::Avg;
        for (const auto& t : qr.q.types) {
          qr.pt_by_type[t] = u.merged.pt(t, qr.q.id);
          u.relevant.insert(t);
          u.queries_by_type[t].push_back(m);
        }
        for (const auto& ap : qr.q.adjacents) u.pred_types.insert(ap.type);
        if (qr.minmax)
          for (const auto& t : qr.q.types) u.minmax_types.insert(t);
        u.queries.push_back(std::move(qr));
      }
      // wire predicate pointers to the stored query copies
      for (auto& qr : u.queries) {
        for (const auto& ap : qr.q.adjacents) qr.adj_by_type[ap.type].push_back(&ap);
        for (const auto& lp : qr.q.locals) qr.locals_by_type[lp.type].push_back(&lp);
        for (const auto& [t, preds] : qr.adj_by_type) {
          std::string sig;
          for (const auto* ap : preds) {
            sig += std::to_string(static_cast<int>(ap->cmp));
            sig += '|';
            sig += ap->prev_attr;
            sig += '|';
            sig += ap->next_attr;
            sig += ';';
          }
          qr.pred_sig_by_type[t] = std::move(sig);
        }
      }
      for (const auto& s : unit.shared) {
        SetRt srt;
        srt.set = s;
        for (const auto& id : s.query_ids) {
          auto it = std::find(unit.query_ids.begin(), unit.query_ids.end(), id);
          srt.members.push_back(static_cast<std::size_t>(it - unit.query_ids.begin()));
        }
        const Query& first = u.queries[srt.members.front()].q;
        srt.count_class = first.agg.kind != AggKind::Min && first.agg.kind != AggKind::Max;
        for (std::size_t pos = 0; pos < srt.members.size(); ++pos) {
          const std::size_t m = srt.members[pos];
          const Query& q = u.queries[m].q;
          if (q.window_size > srt.widest_size) {
            srt.widest_size = q.window_size;
            srt.widest_slide = q.window_slide;
          }
          srt.t = std::max<std::uint64_t>(srt.t, q.types.size());
          srt.p = std::max<std::uint64_t>(srt.p, u.queries[m].pt_by_type.at(s.kleene_type).size());
          if (q.agg.kind != AggKind::CountStar && q.agg.type == s.kleene_type) {
            srt.seed = true;
            if (!q.agg.attr.empty()) srt.seed_attr = q.agg.attr;
          }
          for (const auto& t : q.types) srt.members_by_type[t].push_back(m);
          if (!u.queries[m].locals_of(s.kleene_type)) srt.b_shortcut = true;
        }
        std::map<std::string, std::size_t> sig_group;
        for (std::size_t pos = 0; pos < srt.members.size(); ++pos) {
          const QueryRt& mqr = u.queries[srt.members[pos]];
          auto sit = mqr.pred_sig_by_type.find(s.kleene_type);
          if (sit == mqr.pred_sig_by_type.end()) continue;
          // locals shape what the member matches, so they split the groups too
          std::string key = sit->second;
          key += '#';
          if (const auto* locs = mqr.locals_of(s.kleene_type))
            for (const auto* lp : *locs) {
              key += lp->attr;
              key += std::to_string(static_cast<int>(lp->cmp));
              key += attr_value_to_string(lp->constant);
              key += ';';
            }
          auto [git, fresh] = sig_group.emplace(std::move(key), srt.dev_groups.size());
          if (fresh) srt.dev_groups.emplace_back();
          srt.dev_groups[git->second].push_back(pos);
        }
        srt.scratch.query_ids = s.query_ids;
        srt.scratch.t = srt.t;
        srt.scratch.p = srt.p;
        srt.scratch.deviations.assign(srt.members.size(), 0);
        u.sets.push_back(std::move(srt));
      }
      std::size_t idx = units.size();
      units.push_back(std::move(u));
      for (const auto& t : units[idx].relevant) units_by_type[t].push_back(idx);
    }
  }

  // --- small helpers ------------------------------------------------------

  SnapshotId alloc_snap(PartitionRt& p, char kind) {
    SnapshotId id = next_snap++;
    ++stats.snapshots_created;
    if (cfg.trace) {
      std::string name;
      if (kind == 'g') {
        std::uint32_t i = p.graphlet_snaps++;
        name = kGraphletNames[i % 5];
        if (i >= 5) name += std::to_string(i / 5 + 1);
      } else if (kind == 'z') {
        std::uint32_t i = p.event_snaps++;
        name = "z";
        if (i) name += std::to_string(i + 1);
      } else {
        std::uint32_t i = p.compaction_snaps++;
        name = "c";
        if (i) name += std::to_string(i + 1);
      }
      snap_names[id] = name;
    }
    return id;
  }

  std::string snap_name(SnapshotId id) const {
    auto it = snap_names.find(id);
    return it == snap_names.end() ? "s" + std::to_string(id) : it->second;
  }

  SnapshotId sigma_for(std::size_t unit_idx, const std::string& type) {
    auto key = std::make_pair(unit_idx, type);
    auto it = sigma_ids.find(key);
    if (it != sigma_ids.end()) return it->second;
    SnapshotId id = next_snap++;
    ++stats.snapshots_created;
    UnitRt& u = units[unit_idx];
    std::vector<Payload> vals(u.queries.size());
    for (std::size_t m = 0; m < u.queries.size(); ++m)
      if (u.queries[m].tmpl.start.count(type)) vals[m].cnt = 1;
    sigma_vals[id] = std::move(vals);
    snap_names[id] = "s_" + type;
    sigma_ids[key] = id;
    return id;
  }

  static void seed_payload(Payload& pl, const Query& q, const Event& e) {
    Rat v = q.agg.attr.empty() ? Rat(0) : rat_from_attr(e.attrs.at(q.agg.attr));
    pl.esum += v * Rat(pl.cnt);
    pl.ecnt += pl.cnt;
  }

  static bool prevs_ok(const std::vector<const AdjacentPredicate*>& preds,
                       const std::vector<AttrValue>& prev_vals, const Event& next) {
    for (std::size_t i = 0; i < preds.size(); ++i)
      if (!cmp_holds(next.attrs.at(preds[i]->next_attr), preds[i]->cmp, prev_vals[i]))
        return false;
    return true;
  }

  static std::vector<AttrValue> prev_vals_of(const std::vector<const AdjacentPredicate*>& preds,
                                             const Event& e) {
    std::vector<AttrValue> out;
    out.reserve(preds.size());
    for (const auto* ap : preds) out.push_back(e.attrs.at(ap->prev_attr));
    return out;
  }

  // Resolves snapshots referenced by stored (closed-graphlet) expressions:
  // per-member start snapshots live globally, everything else was persisted
  // into the owning window context when its graphlet closed.
  std::function<const Payload&(SnapshotId)> ctx_lookup_for(std::size_t m, const WindowCtx& ctx) {
    return [this, m, &ctx](SnapshotId id) -> const Payload& {
      auto sit = sigma_vals.find(id);
      if (sit != sigma_vals.end()) return sit->second[m];
      return ctx.snap_vals.at(id);
    };
  }

  void bump_bytes(PartitionRt& p, std::uint64_t before_partition) {
    if (p.state_bytes >= before_partition)
      current_bytes += p.state_bytes - before_partition;
    else
      current_bytes -= before_partition - p.state_bytes;
    stats.peak_state_bytes = std::max(stats.peak_state_bytes, current_bytes);
  }

  // --- event intake -------------------------------------------------------

  void process(const Event& e) {
    if (finished) throw std::logic_error("engine: process() after finish()");
    ++stats.events;
    t_max = std::max(t_max, e.time);
    any_event = true;
    const double wall = now_ms();
    auto it = units_by_type.find(e.type);
    if (it == units_by_type.end()) return;
    for (std::size_t ui : it->second) {
      UnitRt& u = units[ui];
      bool matched_any = false;
      for (std::size_t m : u.queries_by_type.at(e.type))
        if (locals_pass(u.queries[m].locals_of(e.type), e)) {
          matched_any = true;
          break;
        }
      if (!matched_any) continue;

      const Time pane_start = BurstBuffer::pane_start_of(e.time, u.unit.pane);
      if (u.current_pane < 0)
        u.current_pane = pane_start;
      else if (pane_start > u.current_pane)
        advance_pane(ui, pane_start);

      const std::string key = partition_key(e, u.unit.partition_attrs);
      auto pit = u.partitions.find(key);
      if (pit == u.partitions.end()) {
        PartitionRt p(u.unit.pane);
        for (const auto& a : u.unit.partition_attrs) p.attr_values[a] = e.attrs.at(a);
        p.created_next_emit = u.next_emit;
        pit = u.partitions.emplace(key, std::move(p)).first;
      }
      PartitionRt& p = pit->second;
      p.pane_wall_ms[pane_start] = wall;
      if (auto burst = p.buffer.push(e)) process_burst(ui, p, *burst);
      // count the event after the push: a burst it closes is decided on the
      // stream as it stood before this arrival
      for (std::size_t si = 0; si < u.sets.size(); ++si) {
        const SetRt& s = u.sets[si];
        if (!s.count_class) continue;
        auto mit = s.members_by_type.find(e.type);
        if (mit == s.members_by_type.end()) continue;
        for (std::size_t m : mit->second)
          if (locals_pass(u.queries[m].locals_of(e.type), e)) {
            p.set_counts[si][pane_start].first += 1;
            break;
          }
      }
    }
  }

  // --- pane advance and emission -----------------------------------------

  void advance_pane(std::size_t ui, Time new_pane) {
    UnitRt& u = units[ui];
    for (auto& [key, p] : u.partitions)
      if (auto burst = p.buffer.flush()) process_burst(ui, p, *burst);
    emit_closed(u, new_pane);
    u.current_pane = new_pane;
    prune(u);
  }

  void emit_closed(UnitRt& u, Time bound) {
    for (std::size_t m = 0; m < u.queries.size(); ++m) {
      const Query& q = u.queries[m].q;
      while (u.next_emit[m] + q.window_size <= bound) {
        emit_window(u, m, u.next_emit[m]);
        u.next_emit[m] += q.window_slide;
      }
    }
  }

  void emit_window(UnitRt& u, std::size_t m, Time ws) {
    const QueryRt& qr = u.queries[m];
    const Query& q = qr.q;
    const Time we = ws + q.window_size;
    std::map<std::string, AggOutcome> groups;
    double max_wall = -1.0;
    for (auto& [key, p] : u.partitions) {
      AggOutcome out = qr.minmax ? minmax_outcome(qr, p, ws, we) : count_outcome(u, qr, p, m, ws);
      std::string group;
      for (std::size_t i = 0; i < q.groupby.size(); ++i) {
        if (i) group += '|';
        group += attr_value_to_string(p.attr_values.at(q.groupby[i]));
      }
      groups[group].merge(out);
      for (auto wit = p.pane_wall_ms.lower_bound(ws);
           wit != p.pane_wall_ms.end() && wit->first < we; ++wit)
        max_wall = std::max(max_wall, wit->second);
      // retire the window's state
      auto cit = p.ctx.find({m, ws});
      if (cit != p.ctx.end()) {
        std::uint64_t before = p.state_bytes;
        p.state_bytes -= cit->second.bytes_cache;
        p.ctx.erase(cit);
        bump_bytes(p, before);
      }
    }
    for (const auto& [group, outcome] : groups) {
      auto cell = finalize_cell(q, we, outcome);
      if (!cell) continue;
      table.emplace(ResultKey{q.id, ws, group}, std::move(*cell));
    }
    if (max_wall >= 0) latencies.push_back({q.id, ws, now_ms() - max_wall});
  }

  AggOutcome count_outcome(UnitRt& u, const QueryRt& qr, PartitionRt& p, std::size_t m, Time ws) {
    AggOutcome out;
    auto cit = p.ctx.find({m, ws});
    if (cit == p.ctx.end()) return out;
    const WindowCtx& ctx = cit->second;
    if (qr.tmpl.is_and) {
      Int c0 = 0, c1 = 0;
      for (const auto& t : qr.tmpl.end) {
        auto tit = ctx.closed.find(t);
        if (tit == ctx.closed.end()) continue;
        (qr.tmpl.operand.at(t) == 0 ? c0 : c1) += tit->second.cnt;
      }
      out.payload.cnt = c0 * c1;
      return out;
    }
    for (const auto& t : qr.tmpl.end) {
      auto tit = ctx.closed.find(t);
      if (tit != ctx.closed.end()) out.payload.add(tit->second);
    }
    return out;
  }

  AggOutcome minmax_outcome(const QueryRt& qr, const PartitionRt& p, Time ws, Time we) {
    const Query& q = qr.q;
    std::vector<const Event*> evs;
    for (const auto& e : p.minmax_store)
      if (e.time >= ws && e.time < we && event_matches(q, e)) evs.push_back(&e);
    AggOutcome out;
    if (evs.empty()) return out;
    const std::size_t n = evs.size();
    std::vector<char> fwd(n, 0), bwd(n, 0);
    if (q.adjacents.empty()) {
      std::set<std::string> reach;
      for (std::size_t i = 0; i < n; ++i) {
        const std::string& t = evs[i]->type;
        bool f = qr.tmpl.start.count(t) > 0;
        if (!f)
          for (const auto& rt : reach)
            if (qr.tmpl.has_edge(rt, t)) {
              f = true;
              break;
            }
        fwd[i] = f;
        if (f) reach.insert(t);
      }
      reach.clear();
      for (std::size_t i = n; i-- > 0;) {
        const std::string& t = evs[i]->type;
        bool b = qr.tmpl.end.count(t) > 0;
        if (!b)
          for (const auto& rt : reach)
            if (qr.tmpl.has_edge(t, rt)) {
              b = true;
              break;
            }
        bwd[i] = b;
        if (b) reach.insert(t);
      }
    } else {
      for (std::size_t i = 0; i < n; ++i) {
        bool f = qr.tmpl.start.count(evs[i]->type) > 0;
        for (std::size_t j = 0; !f && j < i; ++j)
          f = fwd[j] && qr.tmpl.has_edge(evs[j]->type, evs[i]->type) &&
              adjacent_ok(q, *evs[j], *evs[i]);
        fwd[i] = f;
      }
      for (std::size_t i = n; i-- > 0;) {
        bool b = qr.tmpl.end.count(evs[i]->type) > 0;
        for (std::size_t j = i + 1; !b && j < n; ++j)
          b = bwd[j] && qr.tmpl.has_edge(evs[i]->type, evs[j]->type) &&
              adjacent_ok(q, *evs[i], *evs[j]);
        bwd[i] = b;
      }
    }
    for (std::size_t i = 0; i < n; ++i)
      if (fwd[i] && bwd[i] && evs[i]->type == q.agg.type)
        out.note_agg_event(rat_from_attr(evs[i]->attrs.at(q.agg.attr)));
    return out;
  }

  void prune(UnitRt& u) {
    Time floor_all = std::numeric_limits<Time>::max();
    Time floor_minmax = std::numeric_limits<Time>::max();
    Time max_size = 1;
    for (std::size_t m = 0; m < u.queries.size(); ++m) {
      floor_all = std::min(floor_all, u.next_emit[m]);
      if (u.queries[m].minmax) floor_minmax = std::min(floor_minmax, u.next_emit[m]);
      max_size = std::max(max_size, u.queries[m].q.window_size);
    }
    for (auto& [key, p] : u.partitions) {
      std::uint64_t before = p.state_bytes;
      if (floor_minmax != std::numeric_limits<Time>::max()) {
        auto cut = std::partition_point(p.minmax_store.begin(), p.minmax_store.end(),
                                        [&](const Event& e) { return e.time < floor_minmax; });
        if (cut != p.minmax_store.begin()) {
          p.state_bytes -= 96 * static_cast<std::uint64_t>(cut - p.minmax_store.begin());
          p.minmax_store.erase(p.minmax_store.begin(), cut);
        }
      }
      p.pane_wall_ms.erase(p.pane_wall_ms.begin(), p.pane_wall_ms.lower_bound(floor_all));
      const Time count_floor = u.current_pane > 2 * max_size ? u.current_pane - 2 * max_size : 0;
      for (auto& [si, panes] : p.set_counts)
        panes.erase(panes.begin(), panes.lower_bound(count_floor));
      bump_bytes(p, before);
    }
  }

  // --- burst processing ----------------------------------------------------

  void process_burst(std::size_t ui, PartitionRt& p, const Burst& burst) {
    UnitRt& u = units[ui];
    ++stats.bursts;
    const std::string& E = burst.type;

    // 1) sharing decisions per count-class sharable set over this type
    std::vector<char> taken(u.queries.size(), 0);
    std::vector<std::pair<const SetRt*, std::vector<std::size_t>>> shared_groups;
    for (std::size_t si = 0; si < u.sets.size(); ++si) {
      SetRt& s = u.sets[si];
      if (s.set.kleene_type != E || !s.count_class) continue;
      // every member's pattern contains E, so only locals on E can reject
      bool touched = false;
      for (std::size_t m : s.members) {
        const auto* locs = u.queries[m].locals_of(E);
        if (!locs) {
          touched = true;
          break;
        }
        for (const auto& e : burst.events)
          if (locals_pass(locs, e)) {
            touched = true;
            break;
          }
        if (touched) break;
      }
      if (!touched) continue;

      std::vector<std::size_t> chosen;
      if (cfg.strategy == Strategy::StaticShared) {
        chosen = s.members;
      } else if (cfg.strategy == Strategy::Dynamic) {
        const auto t_begin = Clock::now();
        const SharingStats& sh = gather_stats(u, p, si, burst);
        PlanChoice choice = choose_query_set(sh, cfg.cost_model);
        stats.decision_ns += static_cast<std::uint64_t>(
            std::chrono::duration_cast<std::chrono::nanoseconds>(Clock::now() - t_begin).count());
        ++stats.decisions;
        stats.plans_examined += choice.plans_examined;
        const bool was = p.last_shared.count(si) ? p.last_shared[si] : false;
        const char* action = choice.share ? (was ? "keep-shared" : "merge")
                                          : (was ? "split" : "keep-separate");
        if (choice.share)
          was ? ++stats.keep_shared : ++stats.merges;
        else
          was ? ++stats.splits : ++stats.keep_separate;
        p.last_shared[si] = choice.share;
        if (cfg.collect_decisions) {
          DecisionRecord rec;
          rec.pane = burst.pane_start;
          rec.burst_type = E;
          rec.b = sh.b;
          rec.n = sh.n;
          rec.s_c = choice.s_c;
          rec.s_p = sh.s_p;
          rec.shared_cost = choice.shared_cost;
          rec.nonshared_cost = choice.nonshared_cost;
          rec.action = action;
          rec.shared_set.reserve(choice.members.size());
          for (std::uint32_t idx : choice.members) rec.shared_set.push_back(s.set.query_ids[idx]);
          decision_log.push_back(std::move(rec));
        }
        if (choice.share) {
          chosen.reserve(choice.members.size());
          for (std::uint32_t idx : choice.members) chosen.push_back(s.members[idx]);
        }
      }
      if (chosen.size() >= 2) {
        for (std::size_t m : chosen) taken[m] = 1;
        shared_groups.emplace_back(&s, std::move(chosen));
      }
    }

    // closing this burst adds one graphlet to every relevant set's estimator window
    for (std::size_t si = 0; si < u.sets.size(); ++si) {
      const SetRt& s = u.sets[si];
      if (!s.count_class) continue;
      auto mit = s.members_by_type.find(E);
      if (mit == s.members_by_type.end()) continue;
      bool touched = false;
      for (std::size_t m : mit->second) {
        const auto* locs = u.queries[m].locals_of(E);
        if (!locs) {
          touched = true;
          break;
        }
        for (const auto& e : burst.events)
          if (locals_pass(locs, e)) {
            touched = true;
            break;
          }
        if (touched) break;
      }
      if (touched) p.set_counts[si][burst.pane_start].second += 1;
    }

    // 2) non-shared propagation for everything not covered by a shared group
    std::uint32_t live_after = 0;
    auto qbt = u.queries_by_type.find(E);
    if (qbt != u.queries_by_type.end()) {
      for (std::size_t m : qbt->second) {
        if (taken[m] || u.queries[m].minmax) continue;
        nonshared_burst(u, p, m, burst);
      }
    }

    // 3) shared propagation
    for (auto& [srt, members] : shared_groups)
      live_after = std::max(live_after, shared_burst(ui, p, *srt, members, burst));
    p.last_expr_live[E] = live_after;

    // 4) event storage for MIN/MAX members
    if (u.minmax_types.count(E)) {
      for (const auto& e : burst.events) {
        bool wanted = false;
        for (std::size_t m : qbt->second) {
          const QueryRt& qr = u.queries[m];
          if (qr.minmax && locals_pass(qr.locals_of(E), e)) {
            wanted = true;
            break;
          }
        }
        if (wanted) {
          p.minmax_store.push_back(e);
          p.state_bytes += 96;
        }
      }
    }
    stats.peak_state_bytes = std::max(stats.peak_state_bytes, current_bytes);
  }

  const SharingStats& gather_stats(UnitRt& u, PartitionRt& p, std::size_t si, const Burst& burst) {
    SetRt& s = u.sets[si];
    SharingStats& sh = s.scratch;  // query_ids/t/p fixed at construction
    sh.b = 0;
    sh.n = 0;
    sh.g = 1;  // the current graphlet
    const std::string& E = s.set.kleene_type;

    // b: burst events matched by at least one member; every member's pattern
    // contains E, so a member without locals on E accepts the whole burst
    if (s.b_shortcut) {
      sh.b = burst.events.size();
    } else {
      for (const auto& e : burst.events)
        for (std::size_t m : s.members)
          if (locals_pass(u.queries[m].locals_of(E), e)) {
            ++sh.b;
            break;
          }
    }

    // n, g: running totals over panes inside the newest window of the widest
    // member (burst already counted)
    const Time newest_ws = (burst.pane_start / s.widest_slide) * s.widest_slide;
    auto& panes = p.set_counts[si];
    for (auto it = panes.lower_bound(newest_ws); it != panes.end(); ++it) {
      sh.n += it->second.first;
      sh.g += it->second.second;
    }

    auto lit = p.last_expr_live.find(E);
    sh.s_p = 1 + (lit == p.last_expr_live.end() ? 0 : lit->second);

    // d_q: adjacent-predicate failures between consecutive matched events;
    // members with the same predicate and locals shape share one count
    sh.deviations.assign(s.members.size(), 0);
    for (const auto& group : s.dev_groups) {
      const QueryRt& qr = u.queries[s.members[group.front()]];
      auto ait = qr.adj_by_type.find(E);
      if (ait == qr.adj_by_type.end()) continue;  // unconstrained: zero deviations
      const auto& preds = ait->second;
      const auto* locs = qr.locals_of(E);
      std::uint64_t dev = 0;
      bool have_prev = false;
      std::vector<const AttrValue*> pv(preds.size());
      for (const auto& e : burst.events) {
        if (!locals_pass(locs, e)) continue;
        if (have_prev)
          for (std::size_t i = 0; i < preds.size(); ++i)
            if (!cmp_holds(e.attrs.at(preds[i]->next_attr), preds[i]->cmp, *pv[i])) {
              ++dev;
              break;
            }
        for (std::size_t i = 0; i < preds.size(); ++i) pv[i] = &e.attrs.at(preds[i]->prev_attr);
        have_prev = true;
      }
      for (std::size_t i : group) sh.deviations[i] = dev;
    }
    return sh;
  }

  void nonshared_burst(UnitRt& u, PartitionRt& p, std::size_t m, const Burst& burst) {
    const QueryRt& qr = u.queries[m];
    const Query& q = qr.q;
    const std::string& E = burst.type;
    const auto& ptset = qr.pt_by_type.at(E);
    const bool self = ptset.count(E) > 0;
    auto ait = qr.adj_by_type.find(E);
    const std::vector<const AdjacentPredicate*> no_preds;
    const auto& preds = ait == qr.adj_by_type.end() ? no_preds : ait->second;
    const auto* elocs = qr.locals_of(E);

    bool any_matched = !elocs;
    if (!any_matched)
      for (const auto& e : burst.events)
        if (locals_pass(elocs, e)) {
          any_matched = true;
          break;
        }
    if (!any_matched) return;

    std::uint64_t before = p.state_bytes;
    for (const auto& w :
         windows_containing_pane(q.window_size, q.window_slide, burst.pane_start, u.unit.pane)) {
      WindowCtx& ctx = p.ctx[{m, w.start}];
      auto ctx_lookup = ctx_lookup_for(m, ctx);
      Payload within_total;
      std::vector<std::pair<const Event*, Payload>> payloads;
      for (const auto& e : burst.events) {
        if (!locals_pass(elocs, e)) continue;
        Payload pl;
        if (qr.tmpl.start.count(E)) pl.cnt += 1;
        for (const auto& t : ptset) {
          if (t == E) continue;
          auto cit = ctx.closed.find(t);
          if (cit != ctx.closed.end()) pl.add(cit->second);
        }
        if (self) {
          if (preds.empty()) {
            auto cit = ctx.closed.find(E);
            if (cit != ctx.closed.end()) pl.add(cit->second);
            pl.add(within_total);
          } else {
            auto sit = ctx.stored.find(E);
            if (sit != ctx.stored.end())
              for (const auto& sp : sit->second)
                if (prevs_ok(preds, *sp.prev_vals, e)) sp.expr->add_value_into(pl, ctx_lookup);
            for (const auto& [pe, ppl] : payloads)
              if (adjacent_ok(q, *pe, e)) pl.add(ppl);
          }
        }
        if (qr.seeded && E == q.agg.type) seed_payload(pl, q, e);
        within_total.add(pl);
        payloads.emplace_back(&e, std::move(pl));
      }
      close_into_ctx(p, ctx, qr, E, preds, payloads);
    }
    bump_bytes(p, before);
  }

  void close_into_ctx(PartitionRt& p, WindowCtx& ctx, const QueryRt& qr, const std::string& E,
                      const std::vector<const AdjacentPredicate*>& preds,
                      const std::vector<std::pair<const Event*, Payload>>& payloads) {
    Payload total;
    for (const auto& [e, pl] : payloads) total.add(pl);
    ctx.closed[E].add(total);
    if (!preds.empty()) {
      auto& stored = ctx.stored[E];
      auto& ex = ctx.extremes[E];
      ex.resize(preds.size());
      for (const auto& [e, pl] : payloads) {
        StoredEvent sp;
        sp.seq = e->seq;
        sp.prev_vals = std::make_shared<const std::vector<AttrValue>>(prev_vals_of(preds, *e));
        auto ce = std::make_shared<Expression>();
        ce->add_constant(pl);
        sp.expr = std::move(ce);
        for (std::size_t i = 0; i < preds.size(); ++i) ex[i].add((*sp.prev_vals)[i]);
        stored.push_back(std::move(sp));
      }
    }
    std::uint64_t nb = ctx_bytes(ctx);
    p.state_bytes += nb - ctx.bytes_cache;
    ctx.bytes_cache = nb;
  }

  // Exact per-query payload of one event in an open shared graphlet: the
  // fallback that snapshot values are made of.
  Payload exact_payload(
      const QueryRt& qr, WindowCtx& ctx, const std::string& E, const Event& e,
      const std::vector<std::tuple<const Event*, Expression, std::vector<char>>>& gevents,
      std::size_t member_pos_in_group,
      const std::function<const Payload&(SnapshotId)>& lookup,
      const std::function<const Payload&(SnapshotId)>& ctx_lookup) {
    const Query& q = qr.q;
    Payload pl;
    if (!locals_pass(qr.locals_of(E), e)) return pl;
    if (qr.tmpl.start.count(E)) pl.cnt += 1;
    const auto& ptset = qr.pt_by_type.at(E);
    for (const auto& t : ptset) {
      if (t == E) continue;
      auto cit = ctx.closed.find(t);
      if (cit != ctx.closed.end()) pl.add(cit->second);
    }
    if (ptset.count(E)) {
      auto ait = qr.adj_by_type.find(E);
      const bool preds = ait != qr.adj_by_type.end();
      if (!preds) {
        auto cit = ctx.closed.find(E);
        if (cit != ctx.closed.end()) pl.add(cit->second);
      } else {
        auto sit = ctx.stored.find(E);
        if (sit != ctx.stored.end())
          for (const auto& sp : sit->second)
            if (prevs_ok(ait->second, *sp.prev_vals, e)) sp.expr->add_value_into(pl, ctx_lookup);
      }
      for (const auto& [pe, pexpr, pmatch] : gevents) {
        if (!pmatch[member_pos_in_group]) continue;
        if (!adjacent_ok(q, *pe, e)) continue;
        pexpr.add_value_into(pl, lookup);
      }
    }
    if (qr.seeded && E == q.agg.type) seed_payload(pl, q, e);
    return pl;
  }

  // Returns the live-snapshot count of the final expression (s_p source).
  std::uint32_t shared_burst(std::size_t ui, PartitionRt& p, const SetRt& s,
                             const std::vector<std::size_t>& members, const Burst& burst) {
    UnitRt& u = units[ui];
    const std::string& E = burst.type;
    std::uint64_t bytes_before = p.state_bytes;

    struct CtxRef {
      std::size_t m;      // unit member position
      std::size_t gi;     // position within `members`
      Time ws;
      WindowCtx* ctx;
    };
    std::vector<CtxRef> ctxs;
    for (std::size_t gi = 0; gi < members.size(); ++gi) {
      const Query& q = u.queries[members[gi]].q;
      for (const auto& w :
           windows_containing_pane(q.window_size, q.window_slide, burst.pane_start, u.unit.pane))
        ctxs.push_back({members[gi], gi, w.start, &p.ctx[{members[gi], w.start}]});
    }

    // graphlet-local snapshot values: snapshot -> (member, window) -> payload
    std::map<SnapshotId, std::map<std::pair<std::size_t, Time>, Payload>> local_vals;
    auto lookup_for = [&](std::size_t m, Time ws) {
      return std::function<const Payload&(SnapshotId)>(
          [this, &local_vals, m, ws](SnapshotId id) -> const Payload& {
            auto sit = sigma_vals.find(id);
            if (sit != sigma_vals.end()) return sit->second[m];
            return local_vals.at(id).at({m, ws});
          });
    };

    auto trace_snapshot = [&](SnapshotId id, const CtxRef& c, const Payload& v) {
      if (!cfg.trace) return;
      snap_trace.push_back(
          {snap_name(id), u.queries[c.m].q.id, c.ws, v.cnt.get_str()});
    };

    // the consolidating snapshot over every predecessor type
    const SnapshotId x_full = alloc_snap(p, 'g');
    for (const auto& c : ctxs) {
      const auto& ptset = u.queries[c.m].pt_by_type.at(E);
      Payload v;
      for (const auto& t : ptset) {
        auto cit = c.ctx->closed.find(t);
        if (cit != c.ctx->closed.end()) v.add(cit->second);
      }
      trace_snapshot(x_full, c, v);
      local_vals[x_full][{c.m, c.ws}] = std::move(v);
    }
    std::optional<SnapshotId> x_other;  // predecessors excluding the burst type
    auto other_snapshot = [&]() {
      if (x_other) return *x_other;
      SnapshotId id = next_snap++;
      ++stats.snapshots_created;
      if (cfg.trace) snap_names[id] = snap_name(x_full) + "'";
      for (const auto& c : ctxs) {
        const auto& ptset = u.queries[c.m].pt_by_type.at(E);
        Payload v;
        for (const auto& t : ptset) {
          if (t == E) continue;
          auto cit = c.ctx->closed.find(t);
          if (cit != c.ctx->closed.end()) v.add(cit->second);
        }
        trace_snapshot(id, c, v);
        local_vals[id][{c.m, c.ws}] = std::move(v);
      }
      x_other = id;
      return id;
    };

    // start-flag shape across the group
    bool all_start = true, none_start = true;
    for (std::size_t m : members)
      (u.queries[m].tmpl.start.count(E) ? none_start : all_start) = false;

    // per-group-member within-graphlet predicate extremes
    std::vector<std::vector<MinMaxAttr>> within_ex(members.size());
    for (std::size_t gi = 0; gi < members.size(); ++gi) {
      auto ait = u.queries[members[gi]].adj_by_type.find(E);
      if (ait != u.queries[members[gi]].adj_by_type.end()) within_ex[gi].resize(ait->second.size());
    }

    std::vector<const std::vector<const LocalPredicate*>*> member_locs(members.size());
    for (std::size_t gi = 0; gi < members.size(); ++gi)
      member_locs[gi] = u.queries[members[gi]].locals_of(E);

    std::vector<std::tuple<const Event*, Expression, std::vector<char>>> gevents;
    Expression running;

    for (const auto& e : burst.events) {
      std::vector<char> matchv(members.size(), 0);
      bool any = false, all = true;
      for (std::size_t gi = 0; gi < members.size(); ++gi) {
        matchv[gi] = locals_pass(member_locs[gi], e) ? 1 : 0;
        any |= matchv[gi];
        all &= matchv[gi] != 0;
      }
      if (!any) continue;

      bool use_z = !all;
      int sym = 0;  // 0: full consolidation, 1: predecessors minus burst type
      if (!use_z) {
        // within-graphlet blanket per predicate-bearing member
        for (std::size_t gi = 0; gi < members.size() && !use_z; ++gi) {
          auto ait = u.queries[members[gi]].adj_by_type.find(E);
          if (ait == u.queries[members[gi]].adj_by_type.end()) continue;
          for (std::size_t pi = 0; pi < ait->second.size(); ++pi) {
            Blanket bl = blanket_check(ait->second[pi]->cmp,
                                       e.attrs.at(ait->second[pi]->next_attr), within_ex[gi][pi]);
            if (bl != Blanket::Full && bl != Blanket::Vacuous) {
              use_z = true;
              break;
            }
          }
        }
      }
      if (!use_z) {
        // cross-graphlet blanket per (member, window)
        bool saw_full = false, saw_fail = false;
        for (const auto& c : ctxs) {
          const QueryRt& qr = u.queries[c.m];
          if (!qr.pt_by_type.at(E).count(E)) continue;  // no same-type predecessors
          auto ait = qr.adj_by_type.find(E);
          if (ait == qr.adj_by_type.end()) {
            auto cit = c.ctx->closed.find(E);
            if (cit != c.ctx->closed.end() && !cit->second.is_zero()) saw_full = true;
            continue;
          }
          auto eit = c.ctx->extremes.find(E);
          if (eit == c.ctx->extremes.end()) continue;  // nothing stored: vacuous
          bool full = true, fail = false;
          for (std::size_t pi = 0; pi < ait->second.size(); ++pi) {
            Blanket bl = blanket_check(ait->second[pi]->cmp,
                                       e.attrs.at(ait->second[pi]->next_attr), eit->second[pi]);
            if (bl == Blanket::Vacuous) continue;
            if (bl != Blanket::Full) full = false;
            if (bl == Blanket::Fail) fail = true;
            if (bl == Blanket::Mixed) {
              full = false;
              fail = false;
              use_z = true;
              break;
            }
          }
          if (use_z) break;
          if (full) saw_full = true;
          else if (fail) saw_fail = true;
        }
        if (!use_z) {
          if (saw_full && saw_fail) use_z = true;
          else if (saw_fail) sym = 1;
        }
      }

      Expression expr;
      if (use_z) {
        const SnapshotId z = alloc_snap(p, 'z');
        for (const auto& c : ctxs) {
          Payload v = exact_payload(u.queries[c.m], *c.ctx, E, e, gevents, c.gi,
                                    lookup_for(c.m, c.ws), ctx_lookup_for(c.m, *c.ctx));
          trace_snapshot(z, c, v);
          local_vals[z][{c.m, c.ws}] = std::move(v);
        }
        expr.add_snapshot(z);
      } else {
        expr = running;
        expr.add_snapshot(sym == 0 ? x_full : other_snapshot());
        if (all_start)
          expr.add_start_flag();
        else if (!none_start)
          expr.add_snapshot(sigma_for(ui, E));
        if (s.seed) {
          Rat v = s.seed_attr.empty() ? Rat(0) : rat_from_attr(e.attrs.at(s.seed_attr));
          expr.seed_self(v);
        }
      }
      if (expr.live_snapshots() > cfg.compaction_cap) {
        const SnapshotId cid = alloc_snap(p, 'c');
        ++stats.compactions;
        for (const auto& c : ctxs) {
          Payload v = expr.evaluate(lookup_for(c.m, c.ws));
          trace_snapshot(cid, c, v);
          local_vals[cid][{c.m, c.ws}] = std::move(v);
        }
        expr.clear();
        expr.add_snapshot(cid);
      }
      if (cfg.trace)
        expr_trace.push_back({burst.pane_start, partition_of(u, p), E, e.seq,
                              expr.render([this](SnapshotId id) { return snap_name(id); })});

      running.add(expr);
      for (std::size_t gi = 0; gi < members.size(); ++gi) {
        if (!matchv[gi]) continue;
        auto ait = u.queries[members[gi]].adj_by_type.find(E);
        if (ait == u.queries[members[gi]].adj_by_type.end()) continue;
        for (std::size_t pi = 0; pi < ait->second.size(); ++pi)
          within_ex[gi][pi].add(e.attrs.at(ait->second[pi]->prev_attr));
      }
      gevents.emplace_back(&e, std::move(expr), std::move(matchv));
    }

    // close: fold the graphlet into every (member, window) context
    const std::uint32_t live_out =
        gevents.empty() ? 0
                        : static_cast<std::uint32_t>(std::get<1>(gevents.back()).live_snapshots());

    bool any_pred_member = false;
    for (std::size_t m : members)
      if (u.queries[m].adj_by_type.count(E)) {
        any_pred_member = true;
        break;
      }

    // When some member carries adjacent predicates, every matched event is
    // kept with its per-event expression. Expressions are shared across
    // contexts, previous-attribute vectors across members with the same
    // predicate shape; each context keeps the snapshot values its stored
    // expressions reference so they can be evaluated after the graphlet ends.
    std::vector<std::shared_ptr<const Expression>> sexprs;
    std::vector<SnapshotId> used;
    std::vector<std::map<std::string, std::shared_ptr<const std::vector<AttrValue>>>> pv_cache;
    if (any_pred_member) {
      sexprs.reserve(gevents.size());
      pv_cache.resize(gevents.size());
      for (auto& [e, pexpr, pmatch] : gevents) {
        for (const auto& t : pexpr.terms()) used.push_back(t.snap);
        sexprs.push_back(std::make_shared<const Expression>(std::move(pexpr)));
      }
      std::sort(used.begin(), used.end());
      used.erase(std::unique(used.begin(), used.end()), used.end());
    }

    for (const auto& c : ctxs) {
      const QueryRt& qr = u.queries[c.m];
      WindowCtx& ctx = *c.ctx;
      ctx.closed[E].add(running.evaluate(lookup_for(c.m, c.ws)));
      auto ait = qr.adj_by_type.find(E);
      if (ait != qr.adj_by_type.end()) {
        const std::string& sig = qr.pred_sig_by_type.at(E);
        auto& stored = ctx.stored[E];
        auto& ex = ctx.extremes[E];
        ex.resize(ait->second.size());
        for (std::size_t ei = 0; ei < gevents.size(); ++ei) {
          if (!std::get<2>(gevents[ei])[c.gi]) continue;
          const Event* e = std::get<0>(gevents[ei]);
          auto& pv = pv_cache[ei][sig];
          if (!pv)
            pv = std::make_shared<const std::vector<AttrValue>>(prev_vals_of(ait->second, *e));
          for (std::size_t pi = 0; pi < ait->second.size(); ++pi) ex[pi].add((*pv)[pi]);
          stored.push_back({e->seq, pv, sexprs[ei]});
        }
        for (SnapshotId id : used) {
          auto lit = local_vals.find(id);
          if (lit == local_vals.end()) continue;  // per-member start snapshot, kept globally
          auto vit = lit->second.find({c.m, c.ws});
          if (vit != lit->second.end()) ctx.snap_vals[id] = std::move(vit->second);
        }
      }
      std::uint64_t nb = ctx_bytes(ctx);
      p.state_bytes += nb - ctx.bytes_cache;
      ctx.bytes_cache = nb;
    }

    // prune trace names of graphlet-local snapshots
    if (cfg.trace)
      for (const auto& [id, vals] : local_vals) snap_names.erase(id);

    bump_bytes(p, bytes_before);
    return live_out;
  }

  static std::string partition_of(const UnitRt& u, const PartitionRt& p) {
    std::string out;
    for (const auto& a : u.unit.partition_attrs) {
      if (!out.empty()) out += '|';
      out += attr_value_to_string(p.attr_values.at(a));
    }
    return out;
  }

  // --- finish ---------------------------------------------------------------

  ResultTable finish() {
    if (finished) throw std::logic_error("engine: finish() called twice");
    finished = true;
    for (std::size_t ui = 0; ui < units.size(); ++ui) {
      UnitRt& u = units[ui];
      for (auto& [key, p] : u.partitions)
        if (auto burst = p.buffer.flush()) process_burst(ui, p, *burst);
      if (!u.partitions.empty()) {
        // every window instance that started by the last event time
        for (std::size_t m = 0; m < u.queries.size(); ++m) {
          const Query& q = u.queries[m].q;
          while (u.next_emit[m] <= t_max) {
            emit_window(u, m, u.next_emit[m]);
            u.next_emit[m] += q.window_slide;
          }
        }
        // zero rows for windows emitted before a partition first appeared
        for (auto& [key, p] : u.partitions) {
          for (std::size_t m = 0; m < u.queries.size(); ++m) {
            const Query& q = u.queries[m].q;
            std::string group;
            for (std::size_t i = 0; i < q.groupby.size(); ++i) {
              if (i) group += '|';
              group += attr_value_to_string(p.attr_values.at(q.groupby[i]));
            }
            for (Time ws = 0; ws < p.created_next_emit[m]; ws += q.window_slide) {
              ResultKey rk{q.id, ws, group};
              if (table.count(rk)) continue;
              auto cell = finalize_cell(q, ws + q.window_size, AggOutcome{});
              if (cell) table.emplace(std::move(rk), std::move(*cell));
            }
          }
        }
      }
    }
    return std::move(table);
  }
};

// ---------------------------------------------------------------------------

Engine::Engine(std::vector<Query> workload, EngineConfig cfg)
    : state_(std::make_unique<State>(std::move(workload), cfg)) {}
Engine::~Engine() = default;
Engine::Engine(Engine&&) noexcept = default;
Engine& Engine::operator=(Engine&&) noexcept = default;

void Engine::process(const Event& e) { state_->process(e); }
ResultTable Engine::finish() { return state_->finish(); }
const EngineStats& Engine::stats() const { return state_->stats; }
const std::vector<DecisionRecord>& Engine::decisions() const { return state_->decision_log; }
const std::vector<TraceExpression>& Engine::expression_trace() const { return state_->expr_trace; }
const std::vector<TraceSnapshot>& Engine::snapshot_trace() const { return state_->snap_trace; }
const std::vector<LatencySample>& Engine::latency_samples() const { return state_->latencies; }

ResultTable engine_run(const std::vector<Query>& workload, const std::vector<Event>& events,
                       EngineConfig cfg) {
  Engine eng(workload, cfg);
  for (const auto& e : events) eng.process(e);
  return eng.finish();
}

}  // namespace hamlet
