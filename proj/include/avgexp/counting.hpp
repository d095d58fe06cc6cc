#pragma once

// Trace of Frobenius a_p and group order N = p + 1 - a_p, by a full character
// sum or by baby-step/giant-step inside the Hasse interval.

#include <cstdint>
#include <numeric>
#include <string>
#include <unordered_map>
#include <vector>

#include "avgexp/curve.hpp"
#include "avgexp/element_order.hpp"
#include "avgexp/errors.hpp"

namespace avgexp {

enum class TraceMethod { naive, bsgs };

inline const char* to_string(TraceMethod m) { return m == TraceMethod::naive ? "naive" : "bsgs"; }

struct TraceResult {
  u64 p = 0;
  i64 a_p = 0;
  u64 N = 0;
  TraceMethod method = TraceMethod::naive;
};

/// Throws InvariantViolation unless |a_p| < 2 sqrt(p) and N = p + 1 - a_p.
inline void check_hasse(const TraceResult& t) {
  const u128 a2 = static_cast<u128>(t.a_p < 0 ? -t.a_p : t.a_p) * static_cast<u128>(t.a_p < 0 ? -t.a_p : t.a_p);
  if (a2 >= static_cast<u128>(4) * t.p || static_cast<i64>(t.p + 1) - t.a_p != static_cast<i64>(t.N)) {
    throw InvariantViolation("Hasse bound violated at p = " + std::to_string(t.p) +
                             ": a_p = " + std::to_string(t.a_p));
  }
}

/// Hasse interval [lo, hi] = [p + 1 - floor(2 sqrt p), p + 1 + floor(2 sqrt p)].
struct HasseInterval {
  u64 lo;
  u64 hi;
};

inline HasseInterval hasse_interval(u64 p) {
  const u64 w = isqrt(4 * p);
  return {p + 1 - w, p + 1 + w};
}

/// a_p = -sum_x (x^3 + a x + b | p), O(p) time and memory.
inline TraceResult trace_naive(const ReducedCurve& C) {
  const u64 p = C.p();
  const auto& m = C.modulus();
  std::vector<signed char> chi(p, -1);
  chi[0] = 0;
  for (u64 y = 1; y <= (p - 1) / 2; ++y) chi[m.mul(y, y)] = 1;

  i64 sum = 0;
  for (u64 x = 0; x < p; ++x) sum += chi[C.rhs(x)];
  TraceResult t{p, -sum, static_cast<u64>(static_cast<i64>(p) + 1 + sum), TraceMethod::naive};
  check_hasse(t);
  return t;
}

namespace detail {

// Some M in [lo, hi] with M P = O. Requires #C in [lo, hi].
inline u64 annihilator_in_interval(const ReducedCurve& C, const Point& P, u64 lo, u64 hi) {
  const u64 width = hi - lo;
  const u64 m = isqrt(width) + 1;

  auto multiple_in_range = [&](u64 a) { return (lo + a - 1) / a * a; };

  std::unordered_map<u64, u64> baby;
  baby.reserve(2 * m);
  Point jP = Point::at_infinity();
  for (u64 j = 1; j <= m; ++j) {
    jP = C.add(jP, P);
    if (jP.infinity) return multiple_in_range(j);
    const auto [it, inserted] = baby.try_emplace(jP.x, j);
    if (!inserted) {
      // jP = +-(j')P, so a small multiple j -+ j' kills P
      const Point prev = C.scalar_mul(it->second, P);
      return multiple_in_range(prev == jP ? j - it->second : j + it->second);
    }
  }

  const Point step = C.scalar_mul(m, P);
  Point R = C.scalar_mul(lo, P);
  for (u64 i = 0; i <= width / m + 1; ++i) {
    const u64 base = lo + i * m;
    if (R.infinity) {
      if (base <= hi) return base;
    } else if (auto it = baby.find(R.x); it != baby.end()) {
      const u64 j = it->second;
      const Point jPt = C.scalar_mul(j, P);
      // R = -jP  =>  (base + j) P = O;  R = jP  =>  (base - j) P = O
      const u64 cand = (jPt == R) ? base - j : base + j;
      if (cand >= lo && cand <= hi) return cand;
    }
    R = C.add(R, step);
  }
  throw InvariantViolation("annihilator_in_interval: no multiple found at p = " + std::to_string(C.p()));
}

}  // namespace detail

/// Group order by baby-step/giant-step in the Hasse interval. Samples points
/// alternately on the curve and its quadratic twist, accumulating the lcm of
/// element orders on each side until a single N is consistent with both
/// (#E + #E' = 2p + 2). Requires p >= 229.
inline TraceResult order_bsgs(const ReducedCurve& C, Rng& rng) {
  const u64 p = C.p();
  if (p < 229) throw std::invalid_argument("order_bsgs requires p >= 229");
  const auto [lo, hi] = hasse_interval(p);
  const ReducedCurve twist = C.twist();
  const u64 total = 2 * p + 2;

  u64 lcm_curve = 1, lcm_twist = 1;
  constexpr int kMaxDraws = 64;
  for (int draw = 0; draw < kMaxDraws; ++draw) {
    const bool on_twist = (draw % 2) == 1;
    const ReducedCurve& G = on_twist ? twist : C;
    const Point P = random_point(G, rng);
    const u64 annihilator = detail::annihilator_in_interval(G, P, lo, hi);
    const u64 order = element_order(P, G, annihilator);
    u64& acc = on_twist ? lcm_twist : lcm_curve;
    acc = std::lcm(acc, order);

    // N ranges over [lo, hi] with lcm_curve | N and lcm_twist | 2p + 2 - N
    u64 found = 0, count = 0;
    if (lcm_curve >= lcm_twist) {
      for (u64 n = (lo + lcm_curve - 1) / lcm_curve * lcm_curve; n <= hi && count < 2; n += lcm_curve) {
        if ((total - n) % lcm_twist == 0) {
          found = n;
          ++count;
        }
      }
    } else {
      const u64 tlo = total - hi, thi = total - lo;
      for (u64 n = (tlo + lcm_twist - 1) / lcm_twist * lcm_twist; n <= thi && count < 2; n += lcm_twist) {
        if ((total - n) % lcm_curve == 0) {
          found = total - n;
          ++count;
        }
      }
    }
    if (count == 1) {
      TraceResult t{p, static_cast<i64>(p + 1) - static_cast<i64>(found), found, TraceMethod::bsgs};
      check_hasse(t);
      return t;
    }
  }
  throw AmbiguityExhausted("order_bsgs: group order not pinned after " + std::to_string(kMaxDraws) +
                           " points at p = " + std::to_string(p));
}

inline constexpr u64 kDefaultTraceThreshold = 10000;

/// Naive character sum below `threshold` (and always below 229), BSGS above.
inline TraceResult trace(const ReducedCurve& C, Rng& rng, u64 threshold = kDefaultTraceThreshold) {
  if (C.p() < threshold || C.p() < 229) return trace_naive(C);
  return order_bsgs(C, rng);
}

}  // namespace avgexp
