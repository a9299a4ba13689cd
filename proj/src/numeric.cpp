#include "hamlet/numeric.hpp"

#include <cstdio>
#include <stdexcept>

namespace hamlet {

Rat rat_from_attr(const AttrValue& v) {
  if (const auto* i = std::get_if<std::int64_t>(&v)) {
    return Rat(Int(static_cast<long>(*i)));  // exact
  }
  if (const auto* d = std::get_if<double>(&v)) {
    Rat r;
    mpq_set_d(r.get_mpq_t(), *d);  // exact binary-to-rational conversion
    return r;
  }
  throw std::runtime_error("cannot aggregate a text attribute");
}

std::string format_rat(const Rat& v) {
  Rat c = v;
  c.canonicalize();
  if (c.get_den() == 1) return c.get_num().get_str();
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.12g", mpq_get_d(c.get_mpq_t()));
  return buf;
}

}  // namespace hamlet
