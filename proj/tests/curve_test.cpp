#include <gtest/gtest.h>

#include <random>

#include "avgexp/curve.hpp"

namespace avgexp {
namespace {

ReducedCurve curve_mod(i64 a, i64 b, u64 p) {
  const PrimeModulus m(p);
  return ReducedCurve(m, m.reduce(a), m.reduce(b));
}

// Doubling by brute force: the tangent line at P meets the curve in a third
// point R (found by enumeration); 2P = -R.
Point double_by_line_enumeration(const ReducedCurve& C, const Point& P) {
  const u64 p = C.p();
  u64 slope = 0;
  for (u64 s = 0; s < p; ++s) {
    // 2 y s = 3 x^2 + a
    if ((2 * P.y % p) * s % p == (3 * P.x % p * P.x + C.a()) % p) slope = s;
  }
  const u64 intercept = (P.y + p - slope * P.x % p) % p;
  for (u64 x = 0; x < p; ++x) {
    const u64 y = (slope * x + intercept) % p;
    if (!C.on_curve(Point::affine(x, y))) continue;
    if (x != P.x) return Point::affine(x, (p - y) % p);
  }
  return Point::affine(P.x, (p - P.y) % p);  // P is a flex
}

TEST(Curve, ReduceExamples) {
  const GlobalCurve E(1, 1);
  EXPECT_EQ(E.discriminant(), -16 * 31);
  const auto C5 = reduce(E, 5);
  ASSERT_TRUE(C5.has_value());
  EXPECT_EQ(C5->a(), 1u);
  EXPECT_EQ(C5->b(), 1u);
  EXPECT_FALSE(reduce(E, 31).has_value());
  EXPECT_FALSE(reduce(E, 2).has_value());
  EXPECT_FALSE(reduce(E, 3).has_value());
}

TEST(Curve, ReduceRejectsExactlyTheBadPrimes) {
  for (const GlobalCurve& E : {GlobalCurve(1, 1), GlobalCurve(-1, 0), GlobalCurve(0, 6), GlobalCurve(-7, 10)}) {
    const u64 disc = static_cast<u64>(E.discriminant() < 0 ? -E.discriminant() : E.discriminant());
    for_each_prime(2, 3000, [&](u64 p) {
      const bool bad = p == 2 || p == 3 || disc % p == 0;
      EXPECT_EQ(!reduce(E, p).has_value(), bad) << "p = " << p;
    });
  }
}

TEST(Curve, GlobalCurveValidation) {
  EXPECT_THROW(GlobalCurve(0, 0), std::invalid_argument);
  EXPECT_THROW(GlobalCurve(-3, 2), std::invalid_argument);  // 4(-27) + 27*4 = 0
  EXPECT_THROW(GlobalCurve(i64{1} << 40, 1), std::invalid_argument);
  EXPECT_EQ(parse_curve("-1,0").a4(), -1);
  EXPECT_THROW(parse_curve("1;1"), std::invalid_argument);
  EXPECT_THROW(parse_curve("1,1x"), std::invalid_argument);
  EXPECT_EQ(preset_curve("cm-3").a6(), 16);
  EXPECT_THROW(preset_curve("nope"), std::invalid_argument);
}

TEST(Curve, ComplexMultiplication) {
  EXPECT_TRUE(has_cm(preset_curve("cm-i")));
  EXPECT_TRUE(has_cm(preset_curve("cm-3")));
  EXPECT_TRUE(has_cm(GlobalCurve(0, 6)));
  EXPECT_FALSE(has_cm(preset_curve("generic1")));
  // j = 54000 (order of discriminant -12) and j = 8000 (Z[sqrt(-2)])
  EXPECT_TRUE(has_cm(GlobalCurve(-15, 22)));
  EXPECT_TRUE(has_cm(GlobalCurve(-30, 56)));
  // j = -3375: y^2 = x^3 - 35 x + 98 (CM by the order of discriminant -7)
  EXPECT_TRUE(has_cm(GlobalCurve(-35, 98)));
  EXPECT_FALSE(has_cm(GlobalCurve(-15, 23)));
}

TEST(Curve, AddExamples) {
  const auto C = curve_mod(1, 1, 5);
  const Point P = Point::affine(0, 1);
  ASSERT_TRUE(C.on_curve(P));
  EXPECT_EQ(C.add(Point::at_infinity(), P), P);
  EXPECT_TRUE(C.add(P, C.negate(P)).infinity);
  const Point expected = double_by_line_enumeration(C, P);
  EXPECT_EQ(expected, Point::affine(4, 2));
  EXPECT_EQ(C.add(P, P), expected);
}

TEST(Curve, DoublingMatchesLineEnumeration) {
  const auto C = curve_mod(2, 3, 101);
  for (u64 x = 0; x < 101; ++x) {
    const auto y = sqrt_mod(C.rhs(x), C.modulus());
    if (!y || *y == 0) continue;
    const Point P = Point::affine(x, *y);
    EXPECT_EQ(C.dbl(P), double_by_line_enumeration(C, P)) << "x = " << x;
  }
}

TEST(Curve, GroupAxiomsRandomized) {
  for (u64 p : {5ULL, 1009ULL, 10007ULL}) {
    for (auto [a, b] : {std::pair<i64, i64>{1, 1}, {-1, 0}, {0, 6}}) {
      const auto C = curve_mod(a, b, p);
      Rng rng(p * 31 + static_cast<u64>(a + 7));
      auto pick = [&]() { return (rng() % 16 == 0) ? Point::at_infinity() : random_point(C, rng); };
      for (int i = 0; i < 1000; ++i) {
        const Point P = pick(), Q = pick(), R = pick();
        ASSERT_EQ(C.add(C.add(P, Q), R), C.add(P, C.add(Q, R)));
        ASSERT_EQ(C.add(P, Q), C.add(Q, P));
        ASSERT_EQ(C.add(P, Point::at_infinity()), P);
        ASSERT_TRUE(C.add(P, C.negate(P)).infinity);
        ASSERT_TRUE(C.on_curve(C.add(P, Q)));
      }
    }
  }
}

TEST(Curve, ScalarMulExamplesAndLinearity) {
  const auto C = curve_mod(1, 1, 10007);
  Rng rng(5);
  const Point P = random_point(C, rng);
  EXPECT_TRUE(C.scalar_mul(0, P).infinity);
  EXPECT_EQ(C.scalar_mul(1, P), P);
  for (int i = 0; i < 500; ++i) {
    const u64 m = rng() & 0xffffffff, n = rng() & 0xffffffff;
    ASSERT_EQ(C.scalar_mul(m + n, P), C.add(C.scalar_mul(m, P), C.scalar_mul(n, P)));
  }
  // repeated addition agrees for small multiples
  Point acc = Point::at_infinity();
  for (u64 k = 0; k < 200; ++k) {
    ASSERT_EQ(C.scalar_mul(k, P), acc);
    acc = C.add(acc, P);
  }
}

TEST(Curve, RandomPointReproducibleAndOnCurve) {
  const auto C = curve_mod(1, 1, 1009);
  Rng a = make_stream(42, 1009), b = make_stream(42, 1009);
  EXPECT_EQ(random_point(C, a), random_point(C, b));

  Rng rng = make_stream(7, 1009);
  u64 attempts = 0;
  const int draws = 10000;
  for (int i = 0; i < draws; ++i) {
    const Point P = random_point(C, rng, &attempts);
    ASSERT_FALSE(P.infinity);
    ASSERT_TRUE(C.on_curve(P));
  }
  // fraction of x with x^3 + x + 1 a square or zero, by enumeration
  u64 hits = 0;
  for (u64 x = 0; x < 1009; ++x) hits += legendre(C.rhs(x), C.modulus()) >= 0;
  const double expected_rate = static_cast<double>(hits) / 1009.0;
  EXPECT_NEAR(expected_rate, 0.5, 0.05);
  const double observed_rate = static_cast<double>(draws) / static_cast<double>(attempts);
  EXPECT_NEAR(observed_rate, expected_rate, 0.05);
}

TEST(Curve, StreamsDifferByPrimeAndSalt) {
  EXPECT_NE(make_stream(1, 1009)(), make_stream(1, 1013)());
  EXPECT_NE(make_stream(1, 1009, 0)(), make_stream(1, 1009, 1)());
}

TEST(Curve, TwistIsNonIsomorphic) {
  const auto C = curve_mod(1, 1, 1009);
  const auto T = C.twist();
  u64 nC = 1, nT = 1;
  for (u64 x = 0; x < 1009; ++x) {
    nC += 1 + legendre(C.rhs(x), C.modulus());
    nT += 1 + legendre(T.rhs(x), T.modulus());
  }
  EXPECT_EQ(nC + nT, 2u * 1009 + 2);
}

}  // namespace
}  // namespace avgexp
