#pragma once

// The constant C_E = sum_k c_k / n_k = prod_q (1 - sum_v (q-1)/(q^v n_{q^v})),
// where c_k = sum_{dm=k} mu(d)/m and n_k is the degree of the k-division
// field, evaluated from a degree model by a truncated series and by an Euler
// product, each with an explicit bound on what the truncation drops.

#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include <boost/math/constants/constants.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/multiprecision/cpp_dec_float.hpp>
#include <boost/rational.hpp>

#include "avgexp/errors.hpp"
#include "avgexp/modarith.hpp"

namespace avgexp {

/// 50-digit working precision for constants.
using Real = boost::multiprecision::cpp_dec_float_50;
using Rational = boost::rational<i64>;

// ---------------------------------------------------------------------------
// Moebius coefficients

struct MobiusCoeff {
  u64 k = 1;
  Rational value;
};

/// c_k = sum_{dm=k} mu(d)/m, computed from the definition and from the closed
/// form (1/k) prod_{q|k} (1 - q); the two must agree.
inline MobiusCoeff mobius_coeff(u64 k) {
  if (k == 0) throw std::invalid_argument("mobius_coeff: k must be positive");
  const Factorization f = factorize(k);

  Rational by_definition(0);
  for (u64 d : divisors(f)) {
    const int mu = mobius(factorize(d));
    if (mu != 0) by_definition += Rational(mu, static_cast<i64>(k / d));
  }

  i64 num = 1;
  for (const auto& pf : f.factors) num *= 1 - static_cast<i64>(pf.prime);
  const Rational closed(num, static_cast<i64>(k));

  if (by_definition != closed) {
    throw InvariantViolation("mobius_coeff: definition and closed form disagree at k = " + std::to_string(k));
  }
  return {k, closed};
}

struct IdentityCheck {
  bool pass = true;
  u64 first_failure = 0;  // 0 when pass
};

/// Checks sum_{j | k} c_j = 1/k exactly for every k <= k_max.
inline IdentityCheck mobius_identity_check(u64 k_max) {
  std::vector<Rational> acc(k_max + 1, Rational(0));
  for (u64 j = 1; j <= k_max; ++j) {
    const Rational c = mobius_coeff(j).value;
    for (u64 k = j; k <= k_max; k += j) acc[k] += c;
  }
  for (u64 k = 1; k <= k_max; ++k) {
    if (acc[k] != Rational(1, static_cast<i64>(k))) return {false, k};
  }
  return {};
}

// ---------------------------------------------------------------------------
// GL_2 orders

/// |GL_2(Z/q^v)| = q^(4v-3) (q-1)^2 (q+1) as a high-precision real; valid for
/// prime powers far beyond 64 bits.
inline Real gl2_order_prime_power(u64 q, int v) {
  const Real rq(q);
  return boost::multiprecision::pow(rq, 4 * v - 3) * Real(q - 1) * Real(q - 1) * Real(q + 1);
}

/// |GL_2(Z/kZ)| = k^3 phi(k) prod_{q|k} (1 - q^-2). Throws std::overflow_error
/// past 64 bits (k above roughly 55000).
inline u64 gl2_order(u64 k) {
  if (k == 0) throw std::invalid_argument("gl2_order: k must be positive");
  u64 r = 1;
  for (const auto& [q, v] : factorize(k).factors) {
    u64 local = (q - 1) * (q - 1) * (q + 1);
    for (int i = 0; i < 4 * v - 3; ++i) {
      if (__builtin_mul_overflow(local, q, &local)) throw std::overflow_error("gl2_order overflow");
    }
    if (__builtin_mul_overflow(r, local, &r)) throw std::overflow_error("gl2_order overflow");
  }
  return r;
}

// ---------------------------------------------------------------------------
// Degree models

enum class DegreeKind { gl2_generic, empirical };

/// Rule for n_k = [Q(E[k]) : Q].
///
/// gl2_generic: n_k = |GL_2(Z/kZ)|, with optional overrides. An override at a
/// prime power q^v replaces that local degree and extends multiplicatively to
/// every k with q^v || k; an override at a composite k replaces n_k for that k
/// only. empirical: n_k is defined exactly on the override map.
struct DegreeModel {
  DegreeKind kind = DegreeKind::gl2_generic;
  std::map<u64, Real> overrides;
  std::string note;

  static DegreeModel gl2(std::map<u64, Real> overrides = {}) {
    DegreeModel m;
    m.overrides = std::move(overrides);
    return m;
  }
};

inline bool is_prime_power(u64 k) { return k > 1 && factorize(k).factors.size() == 1; }

/// Rejects overrides with n_k < phi(k) (the k-th cyclotomic field sits inside
/// the division field) or a nonpositive key.
inline void validate_overrides(const std::map<u64, Real>& overrides) {
  for (const auto& [k, n] : overrides) {
    if (k == 0) throw std::invalid_argument("degree override with k = 0");
    if (n < Real(euler_phi(factorize(k)))) {
      throw std::invalid_argument("degree override n_" + std::to_string(k) + " is below phi(k)");
    }
  }
}

/// Parses "k n" pairs, one per line; n is an integer, a fraction a/b, or a
/// decimal. '#' starts a comment.
inline std::map<u64, Real> parse_overrides(std::istream& in) {
  std::map<u64, Real> out;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream fields(line);
    std::string k_text, n_text, extra;
    if (!(fields >> k_text)) continue;
    if (!(fields >> n_text) || (fields >> extra)) {
      throw std::invalid_argument("overrides line " + std::to_string(line_no) + ": expected 'k n'");
    }
    try {
      std::size_t used = 0;
      const u64 k = std::stoull(k_text, &used);
      if (used != k_text.size()) throw std::invalid_argument(k_text);
      Real n;
      if (const auto slash = n_text.find('/'); slash != std::string::npos) {
        n = Real(n_text.substr(0, slash)) / Real(n_text.substr(slash + 1));
      } else {
        n = Real(n_text);
      }
      if (!(n > 0)) throw std::invalid_argument(n_text);
      out[k] = n;
    } catch (const std::exception&) {
      throw std::invalid_argument("overrides line " + std::to_string(line_no) + ": cannot parse '" + line + "'");
    }
  }
  validate_overrides(out);
  return out;
}

inline std::map<u64, Real> load_overrides(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open overrides file " + path);
  return parse_overrides(in);
}

namespace detail {

// Local degree at q^v under the gl2 model: override when present, else GL_2.
inline Real local_degree(const DegreeModel& model, u64 q, int v) {
  u64 qv = 1;
  bool fits = true;
  for (int i = 0; i < v && fits; ++i) fits = !__builtin_mul_overflow(qv, q, &qv);
  if (fits) {
    if (auto it = model.overrides.find(qv); it != model.overrides.end()) return it->second;
  }
  return gl2_order_prime_power(q, v);
}

// Degree at k from prime-power parts only (ignores composite overrides).
inline Real multiplicative_degree(const DegreeModel& model, u64 k) {
  Real n(1);
  for (const auto& [q, v] : factorize(k).factors) n *= local_degree(model, q, v);
  return n;
}

// B = prod over prime-power overrides of max(1, |GL_2| / n): every n_k of the
// multiplicative extension is at least |GL_2(Z/k)| / B.
inline Real override_slack(const DegreeModel& model) {
  Real slack(1);
  for (const auto& [k, n] : model.overrides) {
    if (!is_prime_power(k)) continue;
    const auto pf = factorize(k).factors.front();
    const Real ratio = gl2_order_prime_power(pf.prime, pf.multiplicity) / n;
    if (ratio > 1) slack *= ratio;
  }
  return slack;
}

inline std::string to_decimal(const Real& x, int digits = 6) {
  return x.str(digits, std::ios_base::scientific);
}

}  // namespace detail

/// n_k under the model.
inline Real degree(const DegreeModel& model, u64 k) {
  if (k == 0) throw std::invalid_argument("degree: k must be positive");
  if (auto it = model.overrides.find(k); it != model.overrides.end()) return it->second;
  if (model.kind == DegreeKind::empirical) {
    throw MissingDegree("empirical degree model has no estimate for k = " + std::to_string(k));
  }
  if (k == 1) return Real(1);
  return detail::multiplicative_degree(model, k);
}

// ---------------------------------------------------------------------------
// C_E

enum class ConstantMethod { series, euler };

struct ConstantEstimate {
  Real value;
  u64 truncation = 0;  // y for the series, p_max for the Euler product
  Real tail_bound;
  ConstantMethod method = ConstantMethod::series;
  std::string tail_formula;
};

namespace detail {

// one ulp-scale allowance per accumulated term at 50 digits
inline Real rounding_allowance(u64 terms) { return Real(terms) * Real("1e-47"); }

// C_E lies in (0, 1); an estimate is rejected when value +- tail_bound cannot
// contain it. The single k = 1 term (exactly 1) passes through its tail.
inline void check_unit_interval(const ConstantEstimate& est) {
  if (est.tail_bound < 0) throw InvariantViolation("negative tail bound");
  if (!(est.value + est.tail_bound > 0 && est.value - est.tail_bound < 1)) {
    throw InvariantViolation("constant estimate " + to_decimal(est.value, 12) + " +- " +
                             to_decimal(est.tail_bound, 3) + " excludes (0, 1)");
  }
}

}  // namespace detail

/// sum_{k<=y} c_k / n_k.
///
/// Tail for gl2 models: n_k >= k^3 phi(k) (6/pi^2) / B, so the dropped terms are
/// at most B (pi^2/6) sum_{k>y} k^-4 <= B pi^2 / (18 y^3), plus an exact
/// correction for composite overrides beyond y. For empirical models only the
/// O(1/y) order is known; the bound 1/y is then a heuristic.
inline ConstantEstimate constant_series(const DegreeModel& model, u64 y) {
  if (y == 0) throw std::invalid_argument("constant_series: y must be positive");
  ConstantEstimate est;
  est.method = ConstantMethod::series;
  est.truncation = y;

  Real sum(0);
  for (u64 k = 1; k <= y; ++k) {
    const Rational c = mobius_coeff(k).value;
    sum += Real(c.numerator()) / (Real(c.denominator()) * degree(model, k));
  }
  est.value = sum;

  if (model.kind == DegreeKind::gl2_generic) {
    const Real slack = detail::override_slack(model);
    const Real y3 = Real(y) * Real(y) * Real(y);
    const Real pi = boost::math::constants::pi<Real>();
    const Real tail = slack * pi * pi / (Real(18) * y3);
    Real composite(0);
    for (const auto& [k, n] : model.overrides) {
      if (k <= y || is_prime_power(k) || k == 1) continue;
      const Rational c = mobius_coeff(k).value;
      const Real abs_c = Real(c.numerator() < 0 ? -c.numerator() : c.numerator()) / Real(c.denominator());
      composite += abs_c * abs(Real(1) / n - Real(1) / detail::multiplicative_degree(model, k));
    }
    est.tail_bound = tail + composite + detail::rounding_allowance(y);
    est.tail_formula = "B*pi^2/(18*y^3) + composite override corrections; B = " + detail::to_decimal(slack);
  } else {
    est.tail_bound = Real(1) / Real(y) + detail::rounding_allowance(y);
    est.tail_formula = "1/y (heuristic: only O(1/y) is known for non-GL2 degree models)";
  }
  detail::check_unit_interval(est);
  return est;
}

/// prod_{q<=p_max} (1 - sum_v (q-1)/(q^v n_{q^v})), each local series summed
/// until its terms drop below 1e-60.
///
/// Tail: beyond p_max every local sum s_q <= 2B q^-4, so the omitted factors
/// multiply the value by exp(-T) with T <= (2B/(3 p_max^3)) / (1 - 2B/p_max^4),
/// and the bound is value * T.
inline ConstantEstimate constant_euler(const DegreeModel& model, u64 p_max) {
  if (p_max < 2) throw std::invalid_argument("constant_euler: p_max must be >= 2");
  if (model.kind != DegreeKind::gl2_generic) {
    throw NotMultiplicative("constant_euler needs a multiplicative (gl2) degree model");
  }
  u64 max_key = 1;
  for (const auto& [k, n] : model.overrides) {
    max_key = std::max(max_key, k);
    if (k == 1 || is_prime_power(k)) continue;
    const Real product = detail::multiplicative_degree(model, k);
    if (abs(product - n) > Real("1e-40") * product) {
      throw NotMultiplicative("override at composite k = " + std::to_string(k) +
                              " differs from the product of its prime-power degrees");
    }
  }

  ConstantEstimate est;
  est.method = ConstantMethod::euler;
  est.truncation = p_max;
  const Real eps("1e-60");
  Real product(1);
  u64 terms = 0;
  for_each_prime(2, p_max, [&](u64 q) {
    Real local(0);
    Real qv(1);
    u128 qv_int = 1;
    for (int v = 1;; ++v) {
      qv *= q;
      if (qv_int <= max_key) qv_int *= q;
      const Real term = Real(q - 1) / (qv * detail::local_degree(model, q, v));
      local += term;
      ++terms;
      if (term < eps && qv_int > max_key) break;
    }
    product *= Real(1) - local;
  });
  est.value = product;

  const Real slack = detail::override_slack(model);
  const Real P(p_max);
  const Real p3 = P * P * P;
  const Real ratio = Real(2) * slack / (p3 * P);
  if (ratio >= 1) {
    throw std::invalid_argument("constant_euler: p_max too small for the override slack");
  }
  const Real T = (Real(2) * slack / (Real(3) * p3)) / (Real(1) - ratio);
  // local-series truncation: geometric remainder below 2 * eps per prime
  est.tail_bound = product * T + Real(2) * eps * Real(terms) + detail::rounding_allowance(terms);
  est.tail_formula = "C*T, T = (2B/(3 P^3))/(1 - 2B/P^4); B = " + detail::to_decimal(slack);
  detail::check_unit_interval(est);
  return est;
}

// ---------------------------------------------------------------------------
// Logarithmic integral

/// li(x) = integral_2^x dt / log t (offset form), by adaptive Gauss-Kronrod on
/// the substitution t = e^u. Relative error well below 1e-10.
inline double li(double x) {
  if (!(x >= 2)) throw std::invalid_argument("li: x must be >= 2");
  if (x == 2) return 0.0;
  auto integrand = [](double u) { return std::exp(u) / u; };
  return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(integrand, std::log(2.0), std::log(x), 30,
                                                                       1e-14);
}

// ---------------------------------------------------------------------------
// Empirical degrees

/// pi_E(x; k) for k = 0..k_max (index 0 unused): good primes p <= x with k | d_p.
template <typename Records>
std::vector<u64> split_counts(const Records& records, u64 x, u64 k_max) {
  std::vector<u64> counts(k_max + 1, 0);
  for (const auto& r : records) {
    if (r.p > x) continue;
    for (u64 k = 1; k <= k_max && k <= r.d_p; ++k) {
      if (r.d_p % k == 0) ++counts[k];
    }
  }
  return counts;
}

/// n_k ~ li(x) / pi_E(x; k) for k <= k_max; k with no split primes are left out.
template <typename Records>
DegreeModel estimate_degrees(const Records& records, u64 x, u64 k_max) {
  DegreeModel model;
  model.kind = DegreeKind::empirical;
  model.note = "estimated from pi_E(x;k) at x = " + std::to_string(x);
  const auto counts = split_counts(records, x, k_max);
  const Real lix(li(static_cast<double>(x)));
  for (u64 k = 1; k <= k_max; ++k) {
    if (counts[k] > 0) model.overrides[k] = lix / Real(counts[k]);
  }
  return model;
}

}  // namespace avgexp
