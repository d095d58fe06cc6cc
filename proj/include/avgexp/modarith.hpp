#pragma once

// Word-sized modular arithmetic, prime sieving and 64-bit factorization.

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace avgexp {

using u64 = std::uint64_t;
using i64 = std::int64_t;
using u128 = unsigned __int128;

inline u64 mul_mod(u64 a, u64 b, u64 m) {
  return static_cast<u64>(static_cast<u128>(a) * b % m);
}

inline u64 pow_mod(u64 base, u64 exp, u64 m) {
  u64 result = 1 % m;
  base %= m;
  while (exp != 0) {
    if (exp & 1) result = mul_mod(result, base, m);
    base = mul_mod(base, base, m);
    exp >>= 1;
  }
  return result;
}

/// Floor of the square root, exact for every 64-bit input.
inline u64 isqrt(u64 n) {
  u64 r = static_cast<u64>(std::sqrt(static_cast<double>(n)));
  while (r > 0 && static_cast<u128>(r) * r > n) --r;
  while (static_cast<u128>(r + 1) * (r + 1) <= n) ++r;
  return r;
}

/// Deterministic Miller-Rabin for all 64-bit n.
inline bool is_prime(u64 n) {
  if (n < 2) return false;
  for (u64 q : {2ULL, 3ULL, 5ULL, 7ULL, 11ULL, 13ULL, 17ULL, 19ULL, 23ULL, 29ULL, 31ULL, 37ULL}) {
    if (n % q == 0) return n == q;
  }
  u64 d = n - 1;
  int s = 0;
  while ((d & 1) == 0) {
    d >>= 1;
    ++s;
  }
  for (u64 a : {2ULL, 325ULL, 9375ULL, 28178ULL, 450775ULL, 9780504ULL, 1795265022ULL}) {
    u64 x = pow_mod(a, d, n);
    if (x == 0 || x == 1 || x == n - 1) continue;
    bool composite = true;
    for (int r = 1; r < s; ++r) {
      x = mul_mod(x, x, n);
      if (x == n - 1) {
        composite = false;
        break;
      }
    }
    if (composite) return false;
  }
  return true;
}

/// An odd prime 5 <= p < 2^62. Every residue handled by the curve code lives
/// modulo one of these.
class PrimeModulus {
 public:
  static constexpr u64 kMax = u64{1} << 62;

  explicit PrimeModulus(u64 p) : p_(p) {
    if (p < 5 || p >= kMax || !is_prime(p)) {
      throw std::invalid_argument("PrimeModulus: " + std::to_string(p) +
                                  " is not a prime in [5, 2^62)");
    }
  }

  u64 value() const { return p_; }
  operator u64() const { return p_; }

  u64 reduce(i64 v) const {
    i64 r = v % static_cast<i64>(p_);
    return static_cast<u64>(r < 0 ? r + static_cast<i64>(p_) : r);
  }
  u64 add(u64 a, u64 b) const {
    u64 s = a + b;
    return s >= p_ ? s - p_ : s;
  }
  u64 sub(u64 a, u64 b) const { return a >= b ? a - b : a + p_ - b; }
  u64 neg(u64 a) const { return a == 0 ? 0 : p_ - a; }
  u64 mul(u64 a, u64 b) const { return mul_mod(a, b, p_); }

  /// Inverse of a nonzero residue (extended Euclid).
  u64 inv(u64 a) const {
    i64 r0 = static_cast<i64>(p_), r1 = static_cast<i64>(a);
    i64 t0 = 0, t1 = 1;
    while (r1 != 0) {
      i64 q = r0 / r1;
      i64 tmp = r0 - q * r1;
      r0 = r1;
      r1 = tmp;
      tmp = t0 - q * t1;
      t0 = t1;
      t1 = tmp;
    }
    if (r0 != 1) throw std::domain_error("PrimeModulus::inv: zero has no inverse");
    return t0 < 0 ? static_cast<u64>(t0 + static_cast<i64>(p_)) : static_cast<u64>(t0);
  }

  friend bool operator==(const PrimeModulus&, const PrimeModulus&) = default;

 private:
  u64 p_;
};

inline u64 mod_pow(u64 base, u64 exp, const PrimeModulus& m) { return pow_mod(base, exp, m.value()); }

/// Legendre symbol (a/p) by Euler's criterion.
inline int legendre(u64 a, const PrimeModulus& m) {
  if (a % m.value() == 0) return 0;
  return mod_pow(a, (m.value() - 1) / 2, m) == 1 ? 1 : -1;
}

/// Tonelli-Shanks. Returns the smaller of the two roots, or nullopt when `a`
/// is not a square.
inline std::optional<u64> sqrt_mod(u64 a, const PrimeModulus& m) {
  const u64 p = m.value();
  a %= p;
  if (a == 0) return u64{0};
  if (legendre(a, m) != 1) return std::nullopt;

  u64 r;
  if (p % 4 == 3) {
    r = mod_pow(a, (p + 1) / 4, m);
  } else {
    u64 q = p - 1;
    int s = std::countr_zero(q);
    q >>= s;
    u64 z = 2;
    while (legendre(z, m) != -1) ++z;
    u64 c = mod_pow(z, q, m);
    u64 t = mod_pow(a, q, m);
    r = mod_pow(a, (q + 1) / 2, m);
    int e = s;
    while (t != 1) {
      int i = 0;
      u64 t2 = t;
      while (t2 != 1) {
        t2 = m.mul(t2, t2);
        ++i;
      }
      u64 b = c;
      for (int j = 0; j < e - i - 1; ++j) b = m.mul(b, b);
      r = m.mul(r, b);
      c = m.mul(b, b);
      t = m.mul(t, c);
      e = i;
    }
  }
  return std::min(r, p - r);
}

/// Calls fn(p) for every prime lo <= p <= hi in increasing order.
/// Memory is O(sqrt(hi) + segment).
template <typename Fn>
void for_each_prime(u64 lo, u64 hi, Fn&& fn) {
  if (hi < 2 || lo > hi) return;
  lo = std::max<u64>(lo, 2);
  const u64 root = isqrt(hi);

  std::vector<char> small(root + 1, 1);
  std::vector<u64> base;
  for (u64 i = 2; i <= root; ++i) {
    if (!small[i]) continue;
    base.push_back(i);
    for (u64 j = i * i; j <= root; j += i) small[j] = 0;
  }

  constexpr u64 kSegment = u64{1} << 18;
  std::vector<char> seg(kSegment);
  for (u64 low = lo; low <= hi; low += kSegment) {
    const u64 high = std::min(hi, low + kSegment - 1);
    std::fill(seg.begin(), seg.end(), 1);
    for (u64 q : base) {
      if (q * q > high) break;
      u64 start = std::max(q * q, (low + q - 1) / q * q);
      for (u64 j = start; j <= high; j += q) seg[j - low] = 0;
    }
    for (u64 n = low; n <= high; ++n) {
      if (n >= 2 && seg[n - low]) fn(n);
    }
    if (high == hi) break;
  }
}

/// Ascending primes in [2, limit].
inline std::vector<u64> sieve_primes(u64 limit) {
  std::vector<u64> out;
  if (limit >= 100) {
    const double l = static_cast<double>(limit);
    out.reserve(static_cast<std::size_t>(1.26 * l / std::log(l)) + 16);
  }
  for_each_prime(2, limit, [&](u64 p) { out.push_back(p); });
  return out;
}

struct PrimePower {
  u64 prime;
  int multiplicity;
  friend bool operator==(const PrimePower&, const PrimePower&) = default;
};

/// Prime factorization of n >= 1, primes strictly increasing.
struct Factorization {
  u64 n = 1;
  std::vector<PrimePower> factors;

  u64 product() const {
    u64 r = 1;
    for (const auto& f : factors) {
      for (int i = 0; i < f.multiplicity; ++i) r *= f.prime;
    }
    return r;
  }
};

namespace detail {

// splitmix64 finalizer; also used to derive per-prime random streams
constexpr u64 mix64(u64 z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Pollard-rho with Brent cycle detection. n must be odd composite.
inline u64 pollard_brent(u64 n) {
  u64 seed = mix64(n);
  for (;;) {
    const u64 c = seed % (n - 1) + 1;
    u64 y = (seed >> 17) % n;
    seed = mix64(seed);
    const u64 m = 128;
    u64 g = 1, r = 1, q = 1, x = 0, ys = 0;
    auto f = [&](u64 v) { return (mul_mod(v, v, n) + c) % n; };
    while (g == 1) {
      x = y;
      for (u64 i = 0; i < r; ++i) y = f(y);
      u64 k = 0;
      while (k < r && g == 1) {
        ys = y;
        const u64 lim = std::min(m, r - k);
        for (u64 i = 0; i < lim; ++i) {
          y = f(y);
          q = mul_mod(q, x > y ? x - y : y - x, n);
        }
        g = std::gcd(q, n);
        k += m;
      }
      r <<= 1;
    }
    if (g == n) {
      do {
        ys = f(ys);
        g = std::gcd(x > ys ? x - ys : ys - x, n);
      } while (g == 1);
    }
    if (g != n) return g;
  }
}

inline void split(u64 n, std::vector<u64>& out) {
  if (n == 1) return;
  if (is_prime(n)) {
    out.push_back(n);
    return;
  }
  const u64 d = pollard_brent(n);
  split(d, out);
  split(n / d, out);
}

}  // namespace detail

/// Complete factorization of 1 <= n < 2^63: trial division by small primes,
/// then Pollard-rho on the cofactor. Deterministic for a given n.
inline Factorization factorize(u64 n) {
  if (n == 0 || n >= (u64{1} << 63)) throw std::invalid_argument("factorize: n out of range");
  Factorization f{n, {}};
  std::vector<u64> primes;
  for (u64 q : {2ULL, 3ULL, 5ULL}) {
    while (n % q == 0) {
      primes.push_back(q);
      n /= q;
    }
  }
  // wheel mod 30 up to 1000
  static constexpr u64 kWheel[8] = {7, 11, 13, 17, 19, 23, 29, 31};
  for (u64 base = 0; base < 1000 && n > 1; base += 30) {
    for (u64 w : kWheel) {
      const u64 q = base + w;
      if (q * q > n) break;
      while (n % q == 0) {
        primes.push_back(q);
        n /= q;
      }
    }
    if ((base + 30) * (base + 30) > n) break;
  }
  detail::split(n, primes);
  std::sort(primes.begin(), primes.end());
  for (u64 q : primes) {
    if (!f.factors.empty() && f.factors.back().prime == q) {
      ++f.factors.back().multiplicity;
    } else {
      f.factors.push_back({q, 1});
    }
  }
  return f;
}

/// All divisors in increasing order.
inline std::vector<u64> divisors(const Factorization& f) {
  std::vector<u64> ds{1};
  for (const auto& [q, m] : f.factors) {
    const std::size_t count = ds.size();
    u64 qk = 1;
    for (int k = 1; k <= m; ++k) {
      qk *= q;
      for (std::size_t i = 0; i < count; ++i) ds.push_back(ds[i] * qk);
    }
  }
  std::sort(ds.begin(), ds.end());
  return ds;
}

inline u64 euler_phi(const Factorization& f) {
  u64 r = f.n;
  for (const auto& pf : f.factors) r = r / pf.prime * (pf.prime - 1);
  return r;
}

inline int mobius(const Factorization& f) {
  for (const auto& pf : f.factors) {
    if (pf.multiplicity > 1) return 0;
  }
  return f.factors.size() % 2 == 0 ? 1 : -1;
}

}  // namespace avgexp
