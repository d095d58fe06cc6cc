#pragma once

#include <string>

#include "avgexp/curve.hpp"
#include "avgexp/errors.hpp"

namespace avgexp {

/// Exact order of P given any annihilator n (n P = O) and its factorization.
inline u64 element_order(const Point& P, const ReducedCurve& C, u64 n, const Factorization& f) {
  if (!C.scalar_mul(n, P).infinity) {
    throw NotAnnihilated("element_order: " + std::to_string(n) + " does not annihilate the point (p = " +
                         std::to_string(C.p()) + ")");
  }
  u64 order = n;
  for (const auto& [q, m] : f.factors) {
    for (int i = 0; i < m; ++i) {
      if (!C.scalar_mul(order / q, P).infinity) break;
      order /= q;
    }
  }
  return order;
}

inline u64 element_order(const Point& P, const ReducedCurve& C, u64 n) {
  return element_order(P, C, n, factorize(n));
}

}  // namespace avgexp
