#pragma once

// Short Weierstrass curves y^2 = x^3 + a x + b: the global integer model,
// its reduction modulo good primes, and the affine group law.

#include <cstdint>
#include <bit>
#include <optional>
#include <random>
#include <set>
#include <stdexcept>
#include <string>

#include "avgexp/modarith.hpp"

namespace avgexp {

/// Integer model y^2 = x^3 + a4 x + a6 over Q.
class GlobalCurve {
 public:
  GlobalCurve(i64 a4, i64 a6, std::string label = {}) : a4_(a4), a6_(a6), label_(std::move(label)) {
    // disc = -16 (4 a4^3 + 27 a6^2), computed in 128 bits
    const __int128 c4 = static_cast<__int128>(a4) * a4 * a4 * 4;
    const __int128 c6 = static_cast<__int128>(a6) * a6 * 27;
    constexpr __int128 kLimit = static_cast<__int128>(1) << 58;
    if (a4 > (i64{1} << 18) || a4 < -(i64{1} << 18) || a6 > (i64{1} << 26) || a6 < -(i64{1} << 26) ||
        c4 + c6 > kLimit || c4 + c6 < -kLimit) {
      throw std::invalid_argument("GlobalCurve: coefficients too large for a 64-bit discriminant");
    }
    disc_ = static_cast<i64>(-16 * (c4 + c6));
    if (disc_ == 0) throw std::invalid_argument("GlobalCurve: singular model (discriminant 0)");
    bad_primes_ = {2, 3};
    for (const auto& pf : factorize(static_cast<u64>(disc_ < 0 ? -disc_ : disc_)).factors) {
      bad_primes_.insert(pf.prime);
    }
  }

  i64 a4() const { return a4_; }
  i64 a6() const { return a6_; }
  i64 discriminant() const { return disc_; }
  const std::string& label() const { return label_; }

  /// {2, 3} together with every prime dividing the discriminant.
  const std::set<u64>& bad_primes() const { return bad_primes_; }
  bool is_bad(u64 p) const { return bad_primes_.contains(p); }

 private:
  i64 a4_;
  i64 a6_;
  i64 disc_ = 0;
  std::set<u64> bad_primes_;
  std::string label_;
};

/// Parses "a4,a6".
inline GlobalCurve parse_curve(const std::string& text) {
  const auto comma = text.find(',');
  if (comma == std::string::npos) throw std::invalid_argument("curve must be given as a4,a6: " + text);
  std::size_t used = 0;
  const std::string lhs = text.substr(0, comma), rhs = text.substr(comma + 1);
  const i64 a4 = std::stoll(lhs, &used);
  if (used != lhs.size()) throw std::invalid_argument("bad a4: " + lhs);
  const i64 a6 = std::stoll(rhs, &used);
  if (used != rhs.size()) throw std::invalid_argument("bad a6: " + rhs);
  return GlobalCurve(a4, a6, text);
}

/// True when the curve has complex multiplication over Qbar. A curve over Q
/// has CM exactly when its j-invariant 6912 a4^3 / (4 a4^3 + 27 a6^2) is one
/// of the thirteen class-number-one values.
inline bool has_cm(const GlobalCurve& E) {
  static constexpr i64 kCmJ[] = {0, 1728, -3375, 8000, -32768, 54000, 287496, -884736, -12288000, 16581375,
                                  -884736000, -147197952000, -262537412640768000};
  const __int128 a = E.a4(), b = E.a6();
  const __int128 num = 6912 * a * a * a;
  const __int128 den = 4 * a * a * a + 27 * b * b;
  for (i64 j : kCmJ) {
    if (num == static_cast<__int128>(j) * den) return true;
  }
  return false;
}

/// Named presets: generic1 (x^3+x+1), cm-i (x^3-x), cm-3 (x^3+16).
inline GlobalCurve preset_curve(const std::string& name) {
  if (name == "generic1") return GlobalCurve(1, 1, name);
  if (name == "cm-i") return GlobalCurve(-1, 0, name);
  if (name == "cm-3") return GlobalCurve(0, 16, name);
  throw std::invalid_argument("unknown curve preset: " + name);
}

/// Affine point or the point at infinity.
struct Point {
  u64 x = 0;
  u64 y = 0;
  bool infinity = true;

  static Point at_infinity() { return {}; }
  static Point affine(u64 x, u64 y) { return {x, y, false}; }

  friend bool operator==(const Point&, const Point&) = default;
};

/// E_p: a nonsingular short Weierstrass curve over F_p, p >= 5.
class ReducedCurve {
 public:
  ReducedCurve(PrimeModulus p, u64 a, u64 b) : p_(p), a_(a % p.value()), b_(b % p.value()) {
    const u64 a3 = p_.mul(p_.mul(a_, a_), a_);
    const u64 disc = p_.add(p_.mul(4, a3), p_.mul(27, p_.mul(b_, b_)));
    if (disc == 0) throw std::invalid_argument("ReducedCurve: singular over F_p");
  }

  const PrimeModulus& modulus() const { return p_; }
  u64 p() const { return p_.value(); }
  u64 a() const { return a_; }
  u64 b() const { return b_; }

  /// x^3 + a x + b
  u64 rhs(u64 x) const { return p_.add(p_.mul(p_.add(p_.mul(x, x), a_), x), b_); }

  bool on_curve(const Point& P) const {
    if (P.infinity) return true;
    return P.x < p() && P.y < p() && p_.mul(P.y, P.y) == rhs(P.x);
  }

  Point negate(const Point& P) const {
    if (P.infinity) return P;
    return Point::affine(P.x, p_.neg(P.y));
  }

  Point add(const Point& P, const Point& Q) const {
    if (P.infinity) return Q;
    if (Q.infinity) return P;
    u64 lambda;
    if (P.x == Q.x) {
      if (p_.add(P.y, Q.y) == 0) return Point::at_infinity();
      // tangent: (3x^2 + a) / 2y
      const u64 num = p_.add(p_.mul(3, p_.mul(P.x, P.x)), a_);
      lambda = p_.mul(num, p_.inv(p_.add(P.y, P.y)));
    } else {
      lambda = p_.mul(p_.sub(Q.y, P.y), p_.inv(p_.sub(Q.x, P.x)));
    }
    const u64 x3 = p_.sub(p_.sub(p_.mul(lambda, lambda), P.x), Q.x);
    const u64 y3 = p_.sub(p_.mul(lambda, p_.sub(P.x, x3)), P.y);
    return Point::affine(x3, y3);
  }

  Point dbl(const Point& P) const { return add(P, P); }

  /// k P by left-to-right double-and-add.
  Point scalar_mul(u64 k, const Point& P) const {
    Point R = Point::at_infinity();
    if (k == 0 || P.infinity) return R;
    for (int i = std::bit_width(k) - 1; i >= 0; --i) {
      R = dbl(R);
      if ((k >> i) & 1) R = add(R, P);
    }
    return R;
  }

  /// Quadratic twist d y^2 = x^3 + a x + b, in short form y^2 = x^3 + a d^2 x + b d^3,
  /// for the smallest quadratic nonresidue d.
  ReducedCurve twist() const {
    u64 d = 2;
    while (legendre(d, p_) != -1) ++d;
    const u64 d2 = p_.mul(d, d);
    return ReducedCurve(p_, p_.mul(a_, d2), p_.mul(b_, p_.mul(d2, d)));
  }

  friend bool operator==(const ReducedCurve&, const ReducedCurve&) = default;

 private:
  PrimeModulus p_;
  u64 a_;
  u64 b_;
};

inline Point add(const Point& P, const Point& Q, const ReducedCurve& C) { return C.add(P, Q); }

inline Point scalar_mul(u64 k, const Point& P, const ReducedCurve& C) { return C.scalar_mul(k, P); }

/// E mod p, or nullopt when p is 2, 3 or divides the discriminant.
inline std::optional<ReducedCurve> reduce(const GlobalCurve& E, u64 p) {
  if (p < 5 || E.is_bad(p)) return std::nullopt;
  const PrimeModulus m(p);
  return ReducedCurve(m, m.reduce(E.a4()), m.reduce(E.a6()));
}

/// Per-prime random stream; distinct (seed, p, salt) give independent streams.
using Rng = std::mt19937_64;

inline Rng make_stream(u64 seed, u64 p, u64 salt = 0) {
  return Rng(detail::mix64(detail::mix64(seed ^ detail::mix64(p)) + salt));
}

/// Random affine point: uniform x until x^3+ax+b is a square (or zero), then
/// a root with a random sign. `attempts`, when given, accumulates the number
/// of x values drawn.
inline Point random_point(const ReducedCurve& C, Rng& rng, u64* attempts = nullptr) {
  std::uniform_int_distribution<u64> coord(0, C.p() - 1);
  for (;;) {
    const u64 x = coord(rng);
    if (attempts) ++*attempts;
    const auto y = sqrt_mod(C.rhs(x), C.modulus());
    if (!y) continue;
    const bool flip = (rng() & 1) != 0;
    return Point::affine(x, flip ? C.modulus().neg(*y) : *y);
  }
}

}  // namespace avgexp
