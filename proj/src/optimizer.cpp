#include "hamlet/optimizer.hpp"

#include <algorithm>
#include <bit>
#include <numeric>
#include <stdexcept>

#include "json.hpp"

namespace hamlet {

namespace {

std::uint64_t log2_floor(std::uint64_t g) { return g <= 1 ? 0 : std::bit_width(g) - 1; }

// Cost of one query run as a non-shared singleton.
std::uint64_t singleton_cost(const SharingStats& st, CostModel model) {
  if (model == CostModel::Primary) return st.b * st.n;
  return st.b * (log2_floor(st.g) + st.n);
}

// Fixed overhead of maintaining the shared graphlet's expressions.
std::uint64_t shared_overhead(const SharingStats& st, CostModel model) {
  if (model == CostModel::Primary) return st.b * st.n * st.s_p;
  return st.b * (log2_floor(st.g) + st.n * st.s_p);
}

// Cost of each predicted snapshot created by the shared group.
std::uint64_t snapshot_weight(const SharingStats& st, CostModel model) {
  const std::uint64_t k = st.query_ids.size();
  if (model == CostModel::Primary) return k * st.g * st.t;
  return k * st.g * st.p;
}

}  // namespace

CostModel cost_model_from_string(const std::string& name) {
  if (name == "primary") return CostModel::Primary;
  if (name == "alternate") return CostModel::Alternate;
  throw std::invalid_argument("unknown cost model '" + name + "' (use primary|alternate)");
}

std::string cost_model_to_string(CostModel m) {
  return m == CostModel::Primary ? "primary" : "alternate";
}

std::uint64_t plan_cost(const SharingStats& st, const std::vector<bool>& in_set, CostModel model) {
  const std::uint64_t k = st.query_ids.size();
  const std::uint64_t per_query = singleton_cost(st, model);
  std::uint64_t members = 0, s_c = 0;
  for (std::size_t i = 0; i < in_set.size(); ++i) {
    if (!in_set[i]) continue;
    ++members;
    s_c += st.deviations[i];
  }
  if (members < 2) return k * per_query;
  return shared_overhead(st, model) + s_c * snapshot_weight(st, model) +
         (k - members) * per_query;
}

PlanChoice choose_query_set(const SharingStats& st, CostModel model) {
  const std::size_t k = st.query_ids.size();
  PlanChoice out;
  out.nonshared_cost = k * singleton_cost(st, model);
  if (k < 2) {
    out.shared_cost = out.nonshared_cost;
    out.plans_examined = 1;
    return out;
  }

  const std::int64_t per_query = static_cast<std::int64_t>(singleton_cost(st, model));
  const std::int64_t weight = static_cast<std::int64_t>(snapshot_weight(st, model));

  // Marginal gain of including query i in the shared group: its singleton
  // cost is saved, its predicted snapshots are paid for.
  std::vector<std::int64_t> gain(k);
  std::vector<bool> in_set(k, false);
  std::uint64_t plans = 0;
  for (std::size_t i = 0; i < k; ++i) {
    gain[i] = per_query - static_cast<std::int64_t>(st.deviations[i]) * weight;
    if (st.deviations[i] == 0) {
      in_set[i] = true;  // the core shares for free
    } else {
      ++plans;  // one examined plan per snapshot-introducing query
      if (gain[i] > 0) in_set[i] = true;
    }
  }

  // A shared group needs at least two members: pad with the best excluded
  // queries (largest gain, then lowest id).
  std::size_t members = static_cast<std::size_t>(std::count(in_set.begin(), in_set.end(), true));
  while (members < 2) {
    std::size_t best = k;
    for (std::size_t i = 0; i < k; ++i) {
      if (in_set[i]) continue;
      if (best == k || gain[i] > gain[best]) best = i;
    }
    in_set[best] = true;
    ++members;
  }

  std::uint64_t candidate = plan_cost(st, in_set, model);
  ++plans;  // the final comparison against all-singletons
  out.plans_examined = plans;
  out.shared_cost = candidate;
  for (std::size_t i = 0; i < k; ++i)
    if (in_set[i]) out.s_c += st.deviations[i];
  if (candidate < out.nonshared_cost) {
    out.share = true;
    for (std::size_t i = 0; i < k; ++i)
      if (in_set[i]) out.members.push_back(static_cast<std::uint32_t>(i));
  }
  return out;
}

PlanChoice exhaustive_choice(const SharingStats& st, CostModel model) {
  const std::size_t k = st.query_ids.size();
  if (k > 20) throw std::invalid_argument("exhaustive plan search supports at most 20 queries");
  PlanChoice out;
  out.nonshared_cost = k * singleton_cost(st, model);
  out.shared_cost = out.nonshared_cost;
  out.plans_examined = 1;

  std::vector<bool> best_set;
  for (std::uint32_t mask = 0; k >= 2 && mask < (1u << k); ++mask) {
    if (std::popcount(mask) < 2) continue;
    std::vector<bool> in_set(k, false);
    for (std::size_t i = 0; i < k; ++i) in_set[i] = (mask >> i) & 1u;
    std::uint64_t cost = plan_cost(st, in_set, model);
    ++out.plans_examined;
    if (cost < out.shared_cost) {
      out.shared_cost = cost;
      best_set = in_set;
    }
  }
  if (!best_set.empty() && out.shared_cost < out.nonshared_cost) {
    out.share = true;
    for (std::size_t i = 0; i < k; ++i) {
      if (!best_set[i]) continue;
      out.members.push_back(static_cast<std::uint32_t>(i));
      out.s_c += st.deviations[i];
    }
  }
  return out;
}

std::string decision_to_json(const DecisionRecord& d) {
  nlohmann::ordered_json j;
  j["pane"] = d.pane;
  j["burst_type"] = d.burst_type;
  j["b"] = d.b;
  j["n"] = d.n;
  j["s_c"] = d.s_c;
  j["s_p"] = d.s_p;
  j["shared_cost"] = d.shared_cost;
  j["nonshared_cost"] = d.nonshared_cost;
  j["action"] = d.action;
  j["shared_set"] = d.shared_set;
  return j.dump();
}

}  // namespace hamlet
