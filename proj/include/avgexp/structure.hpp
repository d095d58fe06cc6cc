#pragma once

// Invariant factors E_p(F_p) = Z/d_p + Z/e_p with d_p | e_p.

#include <algorithm>
#include <array>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "avgexp/counting.hpp"
#include "avgexp/curve.hpp"
#include "avgexp/element_order.hpp"
#include "avgexp/errors.hpp"

namespace avgexp {

struct GroupStructure {
  u64 p = 0;
  i64 a_p = 0;
  u64 N = 0;
  u64 d_p = 0;
  u64 e_p = 0;

  friend bool operator==(const GroupStructure&, const GroupStructure&) = default;
};

/// First violated invariant, or nullopt when the record is consistent:
/// d e = N, d | e, d | p - 1, d^2 | N, a_p = 2 (mod d), e = (p + 1 - a_p) / d,
/// d <= 2 sqrt(p), and the Hasse bound.
inline std::optional<std::string> structure_violation(const GroupStructure& g) {
  if (g.d_p == 0 || g.e_p == 0) return "d_p and e_p must be positive";
  const u128 a_abs = static_cast<u128>(g.a_p < 0 ? -g.a_p : g.a_p);
  if (a_abs * a_abs >= static_cast<u128>(4) * g.p) return "Hasse bound |a_p| < 2 sqrt(p)";
  if (static_cast<i64>(g.p + 1) - g.a_p != static_cast<i64>(g.N)) return "N = p + 1 - a_p";
  if (static_cast<u128>(g.d_p) * g.e_p != g.N) return "d_p * e_p = N";
  if (g.e_p % g.d_p != 0) return "d_p | e_p";
  if ((g.p - 1) % g.d_p != 0) return "d_p | p - 1";
  if (g.N % (g.d_p * g.d_p) != 0) return "d_p^2 | N";
  if (((g.a_p - 2) % static_cast<i64>(g.d_p)) != 0) return "a_p = 2 (mod d_p)";
  if (static_cast<u128>(g.d_p) * g.d_p > static_cast<u128>(4) * g.p) return "d_p <= 2 sqrt(p)";
  return std::nullopt;
}

/// True iff x^3 + a x + b splits into linear factors over F_p, i.e. the full
/// 2-torsion E[2] is rational. The cubic is squarefree, so this is x^p = x mod f.
inline bool full_two_torsion(const ReducedCurve& C) {
  const auto& m = C.modulus();
  using Poly = std::array<u64, 3>;  // c0 + c1 x + c2 x^2 mod f
  // x^3 = -a x - b
  const u64 na = m.neg(C.a()), nb = m.neg(C.b());
  auto mul = [&](const Poly& u, const Poly& v) {
    std::array<u64, 5> t{};
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) t[i + j] = m.add(t[i + j], m.mul(u[i], v[j]));
    // reduce x^4 = -a x^2 - b x, then x^3 = -a x - b
    t[2] = m.add(t[2], m.mul(t[4], na));
    t[1] = m.add(t[1], m.mul(t[4], nb));
    t[1] = m.add(t[1], m.mul(t[3], na));
    t[0] = m.add(t[0], m.mul(t[3], nb));
    return Poly{t[0], t[1], t[2]};
  };
  Poly result{1, 0, 0}, base{0, 1, 0};
  for (u64 e = C.p(); e != 0; e >>= 1) {
    if (e & 1) result = mul(result, base);
    base = mul(base, base);
  }
  return result == Poly{0, 1, 0};
}

/// Values of d_p compatible with N: d | gcd(N, p - 1), d^2 | N, and 2 | d
/// exactly when E[2] is rational.
inline std::vector<u64> admissible_cofactors(u64 p, u64 N, bool two_torsion_rational) {
  std::vector<u64> out;
  for (u64 d : divisors(factorize(std::gcd(N, p - 1)))) {
    if (N % (d * d) == 0 && (d % 2 == 0) == two_torsion_rational) out.push_back(d);
  }
  return out;
}

inline constexpr int kDefaultStability = 8;

/// Exponent as the lcm of random element orders. Stops as soon as the
/// admissible cofactors leave a single possibility, otherwise once the lcm has
/// been unchanged for `stability` consecutive draws. The result always divides
/// the true exponent.
inline u64 exponent_sampling(const ReducedCurve& C, u64 N, const Factorization& F, Rng& rng,
                             int stability = kDefaultStability) {
  const u64 p = C.p();
  const auto cofactors = admissible_cofactors(p, N, full_two_torsion(C));
  if (cofactors.empty()) {
    throw StructureUnverified("no admissible d_p for N = " + std::to_string(N) + " at p = " + std::to_string(p));
  }

  u64 lcm = 1;
  int unchanged = 0;
  const int max_draws = 64 + 16 * stability;
  for (int draw = 0;; ++draw) {
    u64 last = 0;
    int remaining = 0;
    for (u64 d : cofactors) {
      if ((N / d) % lcm == 0) {
        last = d;
        ++remaining;
      }
    }
    if (remaining == 1) return N / last;
    if (remaining == 0) {
      throw StructureUnverified("element orders incompatible with N = " + std::to_string(N) +
                                " at p = " + std::to_string(p));
    }
    const bool lcm_admissible = N % lcm == 0 && std::find(cofactors.begin(), cofactors.end(), N / lcm) != cofactors.end();
    if ((unchanged >= stability && lcm_admissible) || draw >= max_draws) return lcm;

    const u64 next = std::lcm(lcm, element_order(random_point(C, rng), C, N, F));
    if (next == lcm) {
      ++unchanged;
    } else {
      lcm = next;
      unchanged = 0;
    }
  }
}

inline constexpr u64 kStructureSalt = 0x5354525543540000ULL;

/// (d_p, e_p) from an exact trace. Every invariant is checked; on failure the
/// sampling is repeated with doubled stability, up to three retries, each on
/// its own stream keyed by (seed, p, retry).
inline GroupStructure group_structure(const ReducedCurve& C, const TraceResult& T, u64 seed,
                                      int stability = kDefaultStability) {
  const Factorization F = factorize(T.N);
  std::string last_error;
  for (int retry = 0; retry <= 3; ++retry) {
    Rng rng = make_stream(seed, C.p(), kStructureSalt + static_cast<u64>(retry));
    try {
      const u64 e = exponent_sampling(C, T.N, F, rng, stability << retry);
      GroupStructure g{C.p(), T.a_p, T.N, T.N / e, e};
      const auto violation = structure_violation(g);
      if (!violation) return g;
      last_error = *violation;
    } catch (const StructureUnverified& ex) {
      last_error = ex.what();
    }
  }
  throw StructureUnverified("structure unverified at p = " + std::to_string(C.p()) + ": " + last_error);
}

/// Enumerates every point and takes the lcm of all element orders. Each order
/// is found as the least divisor of N (by trial division) that kills the point.
/// Intended for p <= 5000.
inline GroupStructure structure_bruteforce(const ReducedCurve& C) {
  const u64 p = C.p();
  if (p > 5000) throw std::invalid_argument("structure_bruteforce: p too large");
  const auto& m = C.modulus();

  std::vector<std::vector<u64>> roots(p);
  for (u64 y = 0; y < p; ++y) roots[m.mul(y, y)].push_back(y);
  std::vector<Point> points;
  for (u64 x = 0; x < p; ++x) {
    for (u64 y : roots[C.rhs(x)]) points.push_back(Point::affine(x, y));
  }
  const u64 N = points.size() + 1;

  std::vector<u64> divs;
  for (u64 k = 1; k <= N; ++k) {
    if (N % k == 0) divs.push_back(k);
  }
  u64 e = 1;
  for (const Point& P : points) {
    for (u64 k : divs) {
      if (C.scalar_mul(k, P).infinity) {
        e = std::lcm(e, k);
        break;
      }
    }
  }
  return GroupStructure{p, static_cast<i64>(p + 1) - static_cast<i64>(N), N, N / e, e};
}

}  // namespace avgexp
