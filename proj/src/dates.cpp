#include "ctrforge/dates.hpp"

#include "ctrforge/errors.hpp"

namespace ctrforge {

Date require_date(const std::string& s) {
  auto d = parse_date(s);
  if (!d) throw DataError("invalid date: '" + s + "' (expected YYYY-MM-DD)");
  return *d;
}

Timestamp require_timestamp(const std::string& s) {
  auto t = parse_timestamp(s);
  if (!t) throw DataError("invalid timestamp: '" + s + "'");
  return *t;
}

}  // namespace ctrforge
