#pragma once
// Exact numeric payloads. Trend counts grow as 2^n, so counts are
// arbitrary-precision integers; attribute sums are exact rationals so that
// every execution strategy produces bit-identical results even for real
// attributes.

#include <gmpxx.h>

#include <string>

#include "hamlet/events.hpp"

namespace hamlet {

using Int = mpz_class;
using Rat = mpq_class;

// Exact conversion of an attribute value to a rational (doubles convert
// losslessly; text is not aggregatable and asserts at parse time).
Rat rat_from_attr(const AttrValue& v);

// Formats a rational for CSV output: exact decimal when integral, otherwise a
// 12-significant-digit decimal (presentation only; comparisons are exact).
std::string format_rat(const Rat& v);

// Intermediate aggregate carried per (event, query, window): the number of
// trends ending at the event, plus companion slots for event-count and
// attribute-sum aggregates riding the same propagation.
struct Payload {
  Int cnt = 0;   // trends ending here
  Int ecnt = 0;  // aggregated-type events over those trends
  Rat esum = 0;  // aggregated attribute sum over those trends

  void add(const Payload& o) {
    cnt += o.cnt;
    ecnt += o.ecnt;
    esum += o.esum;
  }
  void add_scaled(const Payload& o, const Int& a) {
    cnt += a * o.cnt;
    ecnt += a * o.ecnt;
    esum += Rat(a) * o.esum;
  }
  bool is_zero() const { return cnt == 0 && ecnt == 0 && esum == 0; }
  bool operator==(const Payload& o) const {
    return cnt == o.cnt && ecnt == o.ecnt && esum == o.esum;
  }
};

}  // namespace hamlet
