#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <sstream>

#include "avgexp/constants.hpp"
#include "avgexp/record.hpp"

namespace avgexp {
namespace {

// |GL_2(Z/k)| by counting matrices with unit determinant.
u64 gl2_order_by_enumeration(u64 k) {
  u64 count = 0;
  for (u64 a = 0; a < k; ++a)
    for (u64 b = 0; b < k; ++b)
      for (u64 c = 0; c < k; ++c)
        for (u64 d = 0; d < k; ++d) {
          const u64 det = (a * d % k + k - b * c % k) % k;
          count += std::gcd(det, k) == 1;
        }
  return count;
}

// li(x) = li_0(x) - li_0(2), with li_0 from Ramanujan's series.
double li_ramanujan(double x) {
  const long double lx = std::log(static_cast<long double>(x));
  long double sum = 0, fact = 1, pow_l = 1, inner = 0;
  for (int n = 1; n < 200; ++n) {
    fact *= n;
    pow_l *= lx;
    if ((n - 1) % 2 == 0) inner += 1.0L / (2 * ((n - 1) / 2) + 1);
    const long double sign = (n % 2 == 1) ? 1 : -1;
    sum += sign * pow_l / (fact * std::pow(2.0L, n - 1)) * inner;
  }
  const long double euler_gamma = 0.5772156649015328606065120900824024L;
  const long double li0 = euler_gamma + std::log(lx) + std::sqrt(static_cast<long double>(x)) * sum;
  const long double li0_at_2 = 1.0451637801174927848445888891946131L;
  return static_cast<double>(li0 - li0_at_2);
}

Real abs_real(const Real& x) { return x < 0 ? Real(-x) : x; }

TEST(Constants, MobiusCoeffExamples) {
  EXPECT_EQ(mobius_coeff(1).value, Rational(1));
  EXPECT_EQ(mobius_coeff(2).value, Rational(-1, 2));
  EXPECT_EQ(mobius_coeff(4).value, Rational(-1, 4));  // 1/4 - 1/2
  EXPECT_EQ(mobius_coeff(6).value, Rational(1, 3));
  EXPECT_EQ(mobius_coeff(6).value, Rational(euler_phi(factorize(6)), 6));  // bound is tight at squarefree k
  EXPECT_THROW(mobius_coeff(0), std::invalid_argument);
}

TEST(Constants, MobiusIdentity) {
  const auto check = mobius_identity_check(10000);
  EXPECT_TRUE(check.pass) << "first failure at k = " << check.first_failure;
}

TEST(Constants, MobiusCoeffPhiBound) {
  for (u64 k = 1; k <= 10000; ++k) {
    const Rational c = mobius_coeff(k).value;
    const Rational bound(static_cast<i64>(euler_phi(factorize(k))), static_cast<i64>(k));
    ASSERT_LE(boost::abs(c), bound) << "k = " << k;
  }
}

TEST(Constants, Gl2OrderExamples) {
  EXPECT_EQ(gl2_order(1), 1u);
  EXPECT_EQ(gl2_order(2), 6u);
  EXPECT_EQ(gl2_order(4), 96u);
  EXPECT_EQ(gl2_order(6), 288u);
  EXPECT_EQ(gl2_order(5), 480u);
  EXPECT_THROW(gl2_order(1000000), std::overflow_error);
}

TEST(Constants, Gl2OrderMatchesMatrixCount) {
  for (u64 k = 1; k <= 12; ++k) EXPECT_EQ(gl2_order(k), gl2_order_by_enumeration(k)) << "k = " << k;
}

TEST(Constants, Gl2OrderMultiplicativeAndDivisibleByPhi) {
  for (u64 m = 1; m <= 200; ++m) {
    for (u64 n = 1; n <= 200; ++n) {
      if (std::gcd(m, n) != 1 || m * n > 40000) continue;
      ASSERT_EQ(gl2_order(m * n), gl2_order(m) * gl2_order(n));
    }
  }
  for (u64 k = 1; k <= 10000; ++k) ASSERT_EQ(gl2_order(k) % euler_phi(factorize(k)), 0u) << "k = " << k;
  // the high-precision prime-power form agrees with the exact one
  EXPECT_EQ(gl2_order_prime_power(7, 2), Real(gl2_order(49)));
}

TEST(Constants, DegreeExamples) {
  const auto plain = DegreeModel::gl2();
  EXPECT_EQ(degree(plain, 1), Real(1));
  EXPECT_EQ(degree(plain, 6), Real(288));

  const auto with_override = DegreeModel::gl2({{2, Real(3)}});
  EXPECT_EQ(degree(with_override, 2), Real(3));
  EXPECT_EQ(degree(with_override, 10), Real(3 * 480));  // extends to k with 2 || k
  EXPECT_EQ(degree(with_override, 4), Real(96));

  DegreeModel empirical;
  empirical.kind = DegreeKind::empirical;
  empirical.overrides = {{1, Real(1)}, {2, Real(6)}};
  EXPECT_EQ(degree(empirical, 2), Real(6));
  EXPECT_THROW(degree(empirical, 7), MissingDegree);
}

TEST(Constants, ParseOverrides) {
  std::istringstream in("# comment\n2 3\n\n3 8/1   # trailing\n5 24.5\n");
  const auto m = parse_overrides(in);
  ASSERT_EQ(m.size(), 3u);
  EXPECT_EQ(m.at(2), Real(3));
  EXPECT_EQ(m.at(3), Real(8));
  EXPECT_EQ(m.at(5), Real("24.5"));

  for (const char* bad : {"2\n", "2 3 4\n", "x 3\n", "2 -1\n", "2 0\n", "7 5\n" /* below phi(7) */, "0 1\n"}) {
    std::istringstream b(bad);
    EXPECT_THROW(parse_overrides(b), std::invalid_argument) << bad;
  }
}

TEST(Constants, SeriesExamples) {
  const auto model = DegreeModel::gl2();
  const auto s1 = constant_series(model, 1);
  EXPECT_EQ(s1.value, Real(1));
  EXPECT_GT(s1.tail_bound, 0);
  EXPECT_FALSE(s1.tail_formula.empty());
  // 1 - (1/2)/6 = 11/12
  EXPECT_LT(abs_real(constant_series(model, 2).value - Real(11) / Real(12)), Real("1e-45"));

  const auto s10 = constant_series(model, 10);
  const auto s1000 = constant_series(model, 1000);
  EXPECT_LE(abs_real(s10.value - s1000.value), s10.tail_bound);
}

TEST(Constants, EulerLocalFactorClosedForm) {
  // With no overrides the local sum is q^3 / ((q^2 - 1)(q^5 - 1)).
  Real product(1);
  for_each_prime(2, 10000, [&](u64 q) {
    const Real Q(q);
    product *= Real(1) - pow(Q, 3) / ((Q * Q - 1) * (pow(Q, 5) - 1));
  });
  const auto e = constant_euler(DegreeModel::gl2(), 10000);
  EXPECT_LT(abs_real(e.value - product), Real("1e-40"));

  // first local term at q is (q - 1) / (q |GL_2(F_q)|)
  const auto e2 = constant_euler(DegreeModel::gl2(), 2);
  const Real q2 = Real(1) / (Real(2) * Real(gl2_order(2)));
  EXPECT_LT(e2.value, Real(1) - q2);
  EXPECT_LT(abs_real(e2.value - (Real(1) - Real(8) / Real(3 * 31))), Real("1e-45"));
}

TEST(Constants, SeriesAndEulerAgreeWithinTails) {
  const auto model = DegreeModel::gl2();
  const auto s = constant_series(model, 10000);
  const auto e = constant_euler(model, 10000);
  EXPECT_GT(s.value, 0);
  EXPECT_LT(s.value, 1);
  EXPECT_GT(e.value, 0);
  EXPECT_LT(e.value, 1);
  EXPECT_LE(abs_real(s.value - e.value), s.tail_bound + e.tail_bound);
  EXPECT_EQ(s.method, ConstantMethod::series);
  EXPECT_EQ(e.method, ConstantMethod::euler);
}

TEST(Constants, EulerTailCoversLongerProduct) {
  const auto model = DegreeModel::gl2();
  const auto short_run = constant_euler(model, 100);
  const auto long_run = constant_euler(model, 10000);
  EXPECT_LE(abs_real(short_run.value - long_run.value), short_run.tail_bound);
}

TEST(Constants, OverridesAgreeAcrossMethods) {
  // a non-surjective mod-2 image: n_2 = 3 (cyclic cubic 2-division field)
  const auto model = DegreeModel::gl2({{2, Real(3)}, {4, Real(48)}});
  const auto s = constant_series(model, 5000);
  const auto e = constant_euler(model, 5000);
  EXPECT_LE(abs_real(s.value - e.value), s.tail_bound + e.tail_bound);
  EXPECT_LT(e.value, constant_euler(DegreeModel::gl2(), 5000).value);
}

TEST(Constants, NotMultiplicativeCases) {
  DegreeModel empirical;
  empirical.kind = DegreeKind::empirical;
  empirical.overrides = {{1, Real(1)}};
  EXPECT_THROW(constant_euler(empirical, 100), NotMultiplicative);
  // composite override that is not the product of its local degrees
  EXPECT_THROW(constant_euler(DegreeModel::gl2({{6, Real(100)}}), 100), NotMultiplicative);
  // composite override that is the product is accepted
  EXPECT_NO_THROW(constant_euler(DegreeModel::gl2({{6, Real(288)}}), 100));
  // the series still handles the composite override, and its tail bound
  // accounts for it
  const auto model = DegreeModel::gl2({{6, Real(100)}});
  const auto a = constant_series(model, 5);
  const auto b = constant_series(model, 2000);
  EXPECT_LE(abs_real(a.value - b.value), a.tail_bound);
}

TEST(Constants, LogarithmicIntegral) {
  EXPECT_EQ(li(2), 0.0);
  EXPECT_THROW(li(1.5), std::invalid_argument);
  double prev = 0;
  for (double x = 3; x < 1e7; x *= 1.7) {
    const double v = li(x);
    ASSERT_GT(v, prev);
    prev = v;
  }
  for (double x : {10.0, 1000.0, 1e6, 1e9, 1e12}) {
    EXPECT_NEAR(li(x) / li_ramanujan(x), 1.0, 1e-10) << "x = " << x;
  }
  EXPECT_NEAR(li(1e6), 78626.503995682, 1e-6);
}

TEST(Constants, EstimateDegrees) {
  std::vector<PrimeRecord> recs = {{5, 0, 1, 6}, {7, 0, 2, 4}, {13, 2, 2, 6}, {37, 2, 6, 6}, {1009, 0, 1, 1010}};
  const auto counts = split_counts(recs, 100, 6);
  EXPECT_EQ(counts[1], 4u);
  EXPECT_EQ(counts[2], 3u);
  EXPECT_EQ(counts[3], 1u);
  EXPECT_EQ(counts[4], 0u);
  EXPECT_EQ(counts[6], 1u);

  const auto model = estimate_degrees(recs, 100, 6);
  EXPECT_EQ(model.kind, DegreeKind::empirical);
  EXPECT_FALSE(model.overrides.contains(4));
  EXPECT_LT(abs_real(model.overrides.at(2) - Real(li(100)) / Real(3)), Real("1e-10"));
  EXPECT_THROW(degree(model, 4), MissingDegree);
}

TEST(Constants, GoldenValues) {
  std::ifstream in(std::string(AVGEXP_GOLDEN_DIR) + "/gl2_constant.txt");
  ASSERT_TRUE(in.good());
  std::map<std::string, std::string> golden;
  std::string key, value;
  while (in >> key >> value) golden[key] = value;
  const auto model = DegreeModel::gl2();
  const Real tol("1e-40");
  EXPECT_LT(abs_real(constant_euler(model, 10000).value - Real(golden.at("euler_pmax_10000"))), tol);
  EXPECT_LT(abs_real(constant_series(model, 10000).value - Real(golden.at("series_y_10000"))), tol);
}

}  // namespace
}  // namespace avgexp
