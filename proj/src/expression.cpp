#include "hamlet/expression.hpp"

#include <algorithm>

namespace hamlet {

void Expression::add_snapshot(SnapshotId snap, const Int& a) {
  if (a == 0) return;
  auto it = std::lower_bound(terms_.begin(), terms_.end(), snap,
                             [](const SnapTerm& t, SnapshotId s) { return t.snap < s; });
  if (it != terms_.end() && it->snap == snap) {
    it->a += a;
  } else {
    SnapTerm t;
    t.snap = snap;
    t.a = a;
    terms_.insert(it, std::move(t));
  }
}

void Expression::add(const Expression& other) {
  if (other.terms_.empty()) {
    const_.add(other.const_);
    return;
  }
  // merge two sorted term vectors
  std::vector<SnapTerm> merged;
  merged.reserve(terms_.size() + other.terms_.size());
  std::size_t i = 0, j = 0;
  while (i < terms_.size() || j < other.terms_.size()) {
    if (j >= other.terms_.size() || (i < terms_.size() && terms_[i].snap < other.terms_[j].snap)) {
      merged.push_back(std::move(terms_[i++]));
    } else if (i >= terms_.size() || other.terms_[j].snap < terms_[i].snap) {
      merged.push_back(other.terms_[j++]);
    } else {
      SnapTerm t = std::move(terms_[i++]);
      const SnapTerm& o = other.terms_[j++];
      t.a += o.a;
      t.beta += o.beta;
      t.gamma += o.gamma;
      if (t.a != 0 || t.beta != 0 || t.gamma != 0) merged.push_back(std::move(t));
    }
  }
  terms_ = std::move(merged);
  const_.add(other.const_);
}

void Expression::seed_self(const Rat& v) {
  for (auto& t : terms_) {
    t.beta += v * Rat(t.a);
    t.gamma += t.a;
  }
  const_.esum += v * Rat(const_.cnt);
  const_.ecnt += const_.cnt;
}

Payload Expression::evaluate(const std::function<const Payload&(SnapshotId)>& lookup) const {
  Payload out = const_;
  for (const auto& t : terms_) {
    const Payload& s = lookup(t.snap);
    out.cnt += t.a * s.cnt;
    out.ecnt += t.a * s.ecnt + t.gamma * s.cnt;
    out.esum += Rat(t.a) * s.esum + t.beta * Rat(s.cnt);
  }
  return out;
}

void Expression::add_value_into(Payload& acc,
                                const std::function<const Payload&(SnapshotId)>& lookup) const {
  acc.add(const_);
  for (const auto& t : terms_) {
    const Payload& s = lookup(t.snap);
    acc.cnt += t.a * s.cnt;
    acc.ecnt += t.a * s.ecnt + t.gamma * s.cnt;
    acc.esum += Rat(t.a) * s.esum + t.beta * Rat(s.cnt);
  }
}

std::string Expression::render(const std::function<std::string(SnapshotId)>& name) const {
  std::string out;
  auto append = [&](const std::string& piece) {
    if (!out.empty()) out += " + ";
    out += piece;
  };
  for (const auto& t : terms_) {
    if (t.a == 0) continue;
    std::string coeff = t.a == 1 ? "" : t.a.get_str();
    append(coeff + name(t.snap));
  }
  if (const_.cnt != 0) append(const_.cnt.get_str());
  if (out.empty()) out = "0";
  return out;
}

}  // namespace hamlet
