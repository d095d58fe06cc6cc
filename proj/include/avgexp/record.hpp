#pragma once

#include "avgexp/structure.hpp"

namespace avgexp {

/// Per-prime result; N = p + 1 - a_p is implied.
struct PrimeRecord {
  u64 p = 0;
  i64 a_p = 0;
  u64 d_p = 0;
  u64 e_p = 0;

  u64 N() const { return static_cast<u64>(static_cast<i64>(p) + 1 - a_p); }
  GroupStructure structure() const { return {p, a_p, N(), d_p, e_p}; }
  static PrimeRecord from(const GroupStructure& g) { return {g.p, g.a_p, g.d_p, g.e_p}; }

  friend bool operator==(const PrimeRecord&, const PrimeRecord&) = default;
};

}  // namespace avgexp
