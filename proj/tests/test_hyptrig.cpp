#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "oracles/hyptrig_oracle.hpp"
#include "teichlab/hyptrig.hpp"

using namespace teichlab;
using namespace teichlab::hyptrig;

namespace {

double rel(double a, double b) { return std::abs(a - b) / std::max(1e-300, std::abs(b)); }

}  // namespace

TEST(HexagonSide, ConvexDirectFormula) {
  double c = hexagon_side(HexMode::convex, 1.0, 1.0, 3.0);
  EXPECT_NEAR(c, 2.88879809842368961, 1e-14);
  double lit = std::acosh((std::cosh(3.0) + std::cosh(1.0) * std::cosh(1.0)) / (std::sinh(1.0) * std::sinh(1.0)));
  EXPECT_NEAR(c, lit, 1e-13);
}

TEST(HexagonSide, CrossedSymmetricRootRoundTrip) {
  const double s = std::acosh(2.0);
  double tc = hexagon_side(HexMode::crossed, s, s, s);
  // crossed identity: cosh tc = sinh^2 s cosh s + cosh^2 s = 3*2 + 4
  EXPECT_NEAR(std::cosh(tc), 10.0, 1e-12);
  EXPECT_NEAR(hexagon_side_inverse(HexMode::crossed, s, s, tc), s, 1e-9);
}

TEST(HexagonSide, CrossedThinCollarMatchesLogSinhShift) {
  double tc = hexagon_side(HexMode::crossed, 0.01, 0.01, 40.0);
  double approx = 40.0 + 2 * std::log(std::sinh(0.01));
  EXPECT_NEAR(tc, approx, 1e-3);
  EXPECT_NEAR(tc, 30.7896929612461252, 1e-10);
}

TEST(HexagonSide, MatchesLiteralOracle) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> U(0.05, 12.0);
  for (int i = 0; i < 2000; ++i) {
    double a = U(rng), b = U(rng), g = U(rng);
    double cv = hexagon_side(HexMode::convex, a, b, g);
    double cr = hexagon_side(HexMode::crossed, a, b, g);
    EXPECT_LT(rel(cv, double(oracle::convex_c(a, b, g))), 1e-11);
    EXPECT_LT(rel(cr, double(oracle::crossed_tc(a, b, g))), 1e-11);
  }
}

TEST(HexagonSide, RoundTripBothIdentities) {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> U(0.1, 5.0);
  for (int i = 0; i < 10000; ++i) {
    double a = U(rng), b = U(rng), g = U(rng);
    double c = hexagon_side(HexMode::convex, a, b, g);
    ASSERT_LT(rel(hexagon_side_inverse(HexMode::convex, a, b, c), g), 1e-9) << a << " " << b << " " << g;
    double tc = hexagon_side(HexMode::crossed, a, b, g);
    ASSERT_LT(rel(hexagon_side_inverse(HexMode::crossed, a, b, tc), g), 1e-9) << a << " " << b << " " << g;
  }
}

TEST(HexagonSide, RegularHexagonRoot) {
  // fixed point of s -> convex(s, s, s)
  double lo = 0.5, hi = 3.0;
  for (int i = 0; i < 200; ++i) {
    double mid = 0.5 * (lo + hi);
    if (hexagon_side(HexMode::convex, mid, mid, mid) > mid)
      lo = mid;
    else
      hi = mid;
  }
  EXPECT_NEAR(0.5 * (lo + hi), std::acosh(2.0), 1e-12);
}

TEST(HexagonSide, CompletedHexagonSatisfiesAllIdentities) {
  auto h = hexagon_from_alternate(0.7, 1.9, 2.4);
  ASSERT_TRUE(h.valid());
  EXPECT_LT(hc1_residual(h), 1e-12);
  HexSides<double> r{h.b, h.c, h.a, h.tb, h.tc, h.ta};
  EXPECT_LT(hc1_residual(r), 1e-9);
}

TEST(HexagonSide, Errors) {
  EXPECT_THROW(hexagon_side(HexMode::convex, -1.0, 1.0, 1.0), DomainError);
  EXPECT_THROW(hexagon_side(HexMode::crossed, 1.0, 0.0, 1.0), DomainError);
  EXPECT_THROW(hexagon_side_inverse(HexMode::crossed, 1.0, 1.0, 1.5), DomainError);
  EXPECT_THROW(hexagon_side_inverse(HexMode::convex, 1.0, 1.0, 0.1), DomainError);
  EXPECT_THROW(hexagon_side(HexMode::convex, 400.0, 400.0, 800.0, EvalPath::direct), OverflowError);
  EXPECT_NO_THROW(hexagon_side(HexMode::convex, 400.0, 400.0, 800.0));
}

TEST(HexagonSide, LogDomainAgreesWithDirect) {
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> U(0.05, 150.0);
  for (int i = 0; i < 3000; ++i) {
    double a = U(rng), b = U(rng), g = U(rng);
    for (HexMode m : {HexMode::convex, HexMode::crossed}) {
      double d = hexagon_side(m, a, b, g, EvalPath::direct);
      double l = hexagon_side(m, a, b, g, EvalPath::log_domain);
      ASSERT_LT(std::abs(d - l), 1e-12 * std::max(1.0, std::abs(d)));
    }
  }
  // beyond the switch the automatic path agrees with the log path
  EXPECT_EQ(hexagon_side(HexMode::crossed, 500.0, 3.0, 900.0), hexagon_side(HexMode::crossed, 500.0, 3.0, 900.0, EvalPath::log_domain));
  EXPECT_NEAR(hexagon_side(HexMode::crossed, 500.0, 3.0, 900.0), 900.0 + 500.0 - std::log(2.0) + std::log(std::sinh(3.0)), 1e-9);
}

TEST(SeamF1, HalfLengthFlag) {
  EXPECT_NEAR(seam_F1(5.0, 7.0, 30.0, true), 10.3940295829952399, 1e-12);
  EXPECT_EQ(seam_F1(5.0, 7.0, 30.0, true), seam_F1(2.5, 3.5, 15.0));
}

TEST(SeamF1, SymmetricPointAndEstimate) {
  double ls = log_sinh_F1(20.0, 20.0, 20.0);
  EXPECT_NEAR(ls, -9.30685281634832425, 1e-12);
  EXPECT_NEAR(ls, -10.0 + std::log(2.0), 1e-6);
  auto e = E_approx(20.0, 20.0, 20.0);
  EXPECT_EQ(e.region, PLRegion::delta2);
  EXPECT_LT(std::abs(ls - e.value), 1.0);
  EXPECT_NEAR(std::log(std::sinh(seam_F1(20.0, 20.0, 20.0))), ls, 1e-8);
}

TEST(SeamF1, LogSinhMatchesOracle) {
  std::mt19937_64 rng(14);
  std::uniform_real_distribution<double> U(0.1, 60.0);
  for (int i = 0; i < 2000; ++i) {
    double x = U(rng), y = U(rng), z = U(rng);
    double o = double(oracle::log_sinh_F1(x, y, z));
    ASSERT_LT(std::abs(log_sinh_F1(x, y, z) - o), 1e-11 * std::max(1.0, std::abs(o))) << x << " " << y << " " << z;
  }
}

TEST(SeamF1, DeepDelta1Offset) {
  // F1 - (z - x - y) - log 4 -> 0 as z - x - y grows
  double prev = 1e9;
  for (double gap : {10.0, 15.0, 20.0, 30.0, 40.0}) {
    double x = 60, y = 80, z = x + y + gap;
    double r = std::abs(seam_F1(x, y, z) - (z - x - y) - std::log(4.0));
    EXPECT_LE(r, prev);
    prev = r;
  }
  EXPECT_LT(prev, 1e-11);
}

TEST(SeamF1, PerturbationBound) {
  std::mt19937_64 rng(15);
  std::uniform_real_distribution<double> U(50.0, 400.0), E(1e-4, 0.99), S(-1.0, 1.0);
  int violations = 0;
  for (int i = 0; i < 10000; ++i) {
    double x = U(rng), y = U(rng), z = U(rng), eps = E(rng);
    auto pert = [&](double v) { return v * std::pow(1 + eps, S(rng)); };
    double xp = pert(x), yp = pert(y), zp = pert(z);
    double d = std::abs(log_sinh_F1(x, y, z) - log_sinh_F1(xp, yp, zp));
    if (d > 5 * eps * std::max({x, y, z})) ++violations;
  }
  EXPECT_EQ(violations, 0);
}

TEST(EApprox, Branches) {
  auto a = E_approx(1.0, 1.0, 5.0);
  EXPECT_EQ(a.value, 3.0);
  EXPECT_EQ(a.region, PLRegion::delta1);
  auto b = E_approx(20.0, 20.0, 20.0);
  EXPECT_EQ(b.value, -10.0);
  EXPECT_EQ(b.region, PLRegion::delta2);
  auto c = E_approx(10.0, 3.0, 2.0);
  EXPECT_EQ(c.value, -3.0);
  EXPECT_EQ(c.region, PLRegion::delta3);
  // ties go to the lower index
  EXPECT_EQ(E_approx(2.0, 3.0, 5.0).region, PLRegion::delta1);
  EXPECT_EQ(E_approx(5.0, 3.0, 2.0).region, PLRegion::delta2);
  EXPECT_THROW(E_approx(-1.0, 1.0, 1.0), DomainError);
}

TEST(EApprox, ContinuousAcrossWalls) {
  std::mt19937_64 rng(16);
  std::uniform_real_distribution<double> U(1.0, 50.0);
  const double h = 1e-9;
  for (int i = 0; i < 1000; ++i) {
    double x = U(rng), y = U(rng);
    for (double z : {x + y, std::abs(x - y)}) {
      double lo = E_approx(x, y, z - h).value, hi = E_approx(x, y, z + h).value;
      EXPECT_NEAR(lo, hi, 1e-8);
    }
  }
}

namespace {

double sup_residual(double floor, int n) {
  double best = 0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) {
        double x = floor * (1 + 3.0 * (i + 0.5) / n), y = floor * (1 + 3.0 * (j + 0.5) / n), z = floor * (1 + 3.0 * (k + 0.5) / n);
        best = std::max(best, std::abs(log_sinh_F1(x, y, z) - E_approx(x, y, z).value));
      }
  return best;
}

}  // namespace

TEST(EApprox, SupResidualNonIncreasingWithFloor) {
  double s10 = sup_residual(10, 36), s20 = sup_residual(20, 36), s40 = sup_residual(40, 36);
  EXPECT_TRUE(std::isfinite(s10));
  EXPECT_LE(s20, s10 + 1e-12);
  EXPECT_LE(s40, s20 + 1e-12);
  EXPECT_LT(s10, 1.1);
}

TEST(LengthSet, CrossedResidualDecaysAlongRays) {
  // form (1): c grows with a~, b~ fixed
  for (double t : {0.3, 1.0, 2.5}) {
    double prev = 1e9;
    for (double c = 8; c <= 60; c += 4) {
      double r = std::abs(hexagon_side(HexMode::crossed, t, 1.7 * t, c) - c - std::log(std::sinh(t)) - std::log(std::sinh(1.7 * t)));
      EXPECT_LE(r, prev + 1e-13);
      EXPECT_LT(r, 50 * std::exp(-c / 10) + 1e-14);
      prev = r;
    }
  }
}

TEST(LengthSet, ConvexResidualDecaysAlongRays) {
  // form (3): given c, the convex identity solved for c~
  for (double t : {1.0, 2.0, 3.0}) {
    double prev = 1e9;
    for (double c = 2 * (2 * t + 1) + 1; c <= 80; c += 4) {
      double ct = hexagon_side_inverse(HexMode::convex, t, t, c);
      double r = std::abs(ct - c - 2 * std::log(std::sinh(t)));
      EXPECT_LE(r, prev + 1e-13);
      EXPECT_LT(r, 50 * std::exp(-ct / 2) + 1e-14);
      prev = r;
    }
  }
}

TEST(Expansions, Acosh1pAndLogSinh) {
  for (double R = 1e-6; R <= 1e-2; R *= 10) {
    double lead = std::sqrt(2 * R) * R / 12;  // first correction of arccosh(1+R)/sqrt(2R)
    EXPECT_LE(std::abs(num::acosh1p(R) - std::sqrt(2 * R)), 10 * lead);
    double ls = num::log_sinh(R);
    EXPECT_LE(std::abs(ls - std::log(R)), 10 * R * R / 6);
  }
  for (double R = 1e2; R <= 1e6; R *= 10) {
    EXPECT_LE(std::abs(num::acosh1p(R) - std::log(2.0) - std::log(R)), 10 / R);
    EXPECT_LE(std::abs(num::log_sinh(R) - R + std::log(2.0)), 10 * std::exp(-R) + 4e-16 * R);
  }
}

TEST(Expansions, MultiprecisionMode) {
  mp_float a = hexagon_side<mp_float>(HexMode::convex, mp_float(1), mp_float(1), mp_float(3));
  EXPECT_LT(abs(a - oracle::convex_c(1, 1, 3)), mp_float("1e-40"));
}
