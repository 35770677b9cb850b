#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include <boost/multiprecision/cpp_bin_float.hpp>

#include "teichlab/apl.hpp"

using namespace teichlab;
using apl::Transform;

namespace {

using R300 = boost::multiprecision::number<boost::multiprecision::cpp_bin_float<300>>;
using M300 = std::array<R300, 4>;

M300 mul(const M300& p, const M300& q) {
  return {p[0] * q[0] + p[1] * q[2], p[0] * q[1] + p[1] * q[3], p[2] * q[0] + p[3] * q[2], p[2] * q[1] + p[3] * q[3]};
}

// explicit matrices at a cusped point: A = diag(e^{l/2}, e^{-l/2}), B = diag(e^{tau/2}, e^{-tau/2}) H(d),
// cosh(d/2) = coth(l/2)
double matrix_length(const std::string& w, double l, double tau) {
  R300 L(l), T(tau);
  R300 ch = cosh(L / 2) / sinh(L / 2), sh = sqrt(ch * ch - 1);
  M300 A{exp(L / 2), R300(0), R300(0), exp(-L / 2)};
  M300 B{exp(T / 2) * ch, exp(T / 2) * sh, sh / exp(T / 2), ch / exp(T / 2)};
  M300 Ai{A[3], -A[1], -A[2], A[0]}, Bi{B[3], -B[1], -B[2], B[0]};
  M300 m{R300(1), R300(0), R300(0), R300(1)};
  for (char c : w) m = mul(m, c == 'a' ? A : c == 'A' ? Ai : c == 'b' ? B : Bi);
  R300 t = abs(m[0] + m[3]) / 2;
  return t <= 1 ? 0.0 : 2 * static_cast<double>(acosh(t));
}

CurveOnSurface word(const char* w) { return CurveOnSurface::of_word(Word::parse(w)); }

const SurfacePoint<double> kCusp = SurfacePoint<double>::s11(0, 1, 0);

}  // namespace

TEST(Rational, NearestSmallDenominator) {
  auto r = apl::nearest_rational(1.0 / 3);
  EXPECT_TRUE(r.pass);
  EXPECT_EQ(r.p, 1);
  EXPECT_EQ(r.q, 3);
  r = apl::nearest_rational(-2.5 + 3e-5);
  EXPECT_TRUE(r.pass);
  EXPECT_EQ(r.p, -5);
  EXPECT_EQ(r.q, 2);
  EXPECT_FALSE(apl::nearest_rational(M_PI).pass);
  EXPECT_FALSE(apl::nearest_rational(0.5 + 2e-4).pass);
  EXPECT_TRUE(apl::nearest_rational(17.0 / 64).pass);
  EXPECT_FALSE(apl::nearest_rational(1.0 / 67, 64, 1e-6).pass);
  EXPECT_FALSE(apl::nearest_rational(NAN).pass);
}

TEST(LengthFunction, MatchesMatrixOracle) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> ul(0.3, 6), ut(-6, 6);
  for (const char* w : {"a", "b", "aab", "abaB", "abAbaB", "aabAbb", "abbAB"}) {
    apl::LengthFunction f(word(w), kCusp);
    for (int i = 0; i < 10; ++i) {
      double l = ul(rng), tau = ut(rng);
      EXPECT_NEAR(f(l, tau), matrix_length(w, l, tau), 1e-12 * (1 + matrix_length(w, l, tau))) << w << " " << l << " " << tau;
    }
  }
}

TEST(LengthFunction, MatchesSurfaceLengthsWithBoundary) {
  for (double l1 : {0.0, 0.8, 2.5}) {
    auto X = SurfacePoint<double>::s11(l1, 1.3, -0.45);
    for (const char* w : {"b", "aab", "abAbaB"}) {
      apl::LengthFunction f(word(w), X);
      EXPECT_NEAR(f(1.3, -0.45), fn::curve_length(X, word(w)), 1e-11) << w;
    }
    apl::LengthFunction s(CurveOnSurface::of_slope(-3, 2), X);
    EXPECT_NEAR(s(1.3, -0.45), fn::curve_length(X, CurveOnSurface::of_slope(-3, 2)), 1e-11);
  }
}

TEST(LengthFunction, LargeCoordinatesNeedNoCare) {
  // transversal (k,1): cosh(l/2) = coth(l/2) cosh((tau + k l)/2), so l -> |tau + k l|
  apl::LengthFunction f(CurveOnSurface::of_slope(3, 1), kCusp);
  for (double t : {500.0, 2000.0, 8000.0}) {
    double l = t, tau = -2.5 * t;
    EXPECT_NEAR(f(l, tau), std::abs(tau + 3 * l), 1e-9 * t);
  }
  apl::LengthFunction g(word("abAbaB"), kCusp);
  EXPECT_TRUE(std::isfinite(g(3000, -1700)));
}

TEST(LengthFunction, Rejections) {
  EXPECT_THROW(apl::LengthFunction(word("abAB"), kCusp), PreconditionError);
  EXPECT_THROW(apl::LengthFunction(word("abABabAB"), kCusp), PreconditionError);
  EXPECT_THROW(apl::LengthFunction(word("aA"), kCusp), PreconditionError);
  EXPECT_THROW(apl::LengthFunction(word("a"), SurfacePoint<double>::s04({0, 0, 0, 0}, 1, 0)), PreconditionError);
  apl::LengthFunction f(word("ab"), kCusp);
  EXPECT_THROW(f(-1, 0), DomainError);
  EXPECT_THROW(f(1, NAN), DomainError);
}

TEST(RayFit, CoordinateCurveIsExactlyLinear) {
  for (std::array<double, 2> d : {std::array<double, 2>{1, 0}, {0.3, -2}, {2.5, 7}}) {
    auto r = apl::ray_fit(word("a"), kCusp, d, apl::log_radii(10, 1000));
    EXPECT_DOUBLE_EQ(r.slope, d[0]);
    EXPECT_EQ(r.offset, 0.0);
    EXPECT_EQ(r.residual_sup, 0.0);
    EXPECT_FALSE(r.on_wall);
    EXPECT_TRUE(r.rational);
  }
}

TEST(RayFit, BoundaryCurveIsConstant) {
  auto r = apl::ray_fit(CurveOnSurface::of_boundary(0), SurfacePoint<double>::s11(1.5, 1, 0), {1, 0.2}, apl::log_radii(1, 100));
  EXPECT_EQ(r.slope_vector[0], 0.0);
  EXPECT_EQ(r.slope_vector[1], 0.0);
  EXPECT_EQ(r.offset, 1.5);
}

TEST(RayFit, TransversalAlongLengthAxisDecaysExponentially) {
  // l_b(l, 0) = 2 arccosh(coth(l/2)) = 4 e^{-l/2} (1 + O(e^{-l}))
  auto r = apl::ray_fit(CurveOnSurface::transversal(), kCusp, {1, 0}, apl::log_radii(10, 1000));
  EXPECT_TRUE(r.rational);
  EXPECT_NEAR(r.slope, 0, 1e-12);
  EXPECT_NEAR(r.offset, 0, 1e-12);
  EXPECT_TRUE(r.residual_decreasing);
  for (std::size_t i = 0; i + 1 < r.radii.size(); ++i) {
    double t = r.radii[i];
    double R = 2 / std::expm1(t);  // coth(t/2) - 1
    double oracle = 2 * std::log1p(R + std::sqrt(R * (2 + R)));
    if (t < 700) EXPECT_NEAR(r.residuals[i], oracle, 1e-12 * oracle);
    EXPECT_NEAR(r.residuals[i] * std::exp(t / 2), 4, 1e-3) << t;
  }
  // |tau| is not differentiable on this ray
  EXPECT_TRUE(r.on_wall);
}

TEST(RayFit, TransversalSlopesMatchClosedForm) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> ut(-1.5, 1.5);
  for (long long k : {0, 1, 2, -3}) {
    for (int i = 0; i < 6; ++i) {
      double th = ut(rng);
      std::array<double, 2> d{std::cos(th), std::sin(th)};
      double s = d[1] + k * d[0];
      if (std::abs(s) < 0.02) continue;
      auto r = apl::ray_fit(CurveOnSurface::of_slope(k, 1), kCusp, d, apl::log_radii(5, 800));
      double sg = s > 0 ? 1 : -1;
      EXPECT_NEAR(r.slope_vector[0], sg * k, 1e-9);
      EXPECT_NEAR(r.slope_vector[1], sg, 1e-9);
      EXPECT_NEAR(r.offset, 0, 1e-9);
      EXPECT_FALSE(r.on_wall);
      EXPECT_TRUE(r.residual_decreasing);
    }
  }
}

TEST(RayFit, FigureEightSlope) {
  // abab^-1 has trace x^2 + 2 at a cusp, so its length tends to 2 l
  for (std::array<double, 2> d : {std::array<double, 2>{1, 0.4}, {0.5, -1}, {1, -5}}) {
    auto r = apl::ray_fit(word("abab^-1"), kCusp, d, apl::log_radii(10, 1000));
    EXPECT_NEAR(r.slope_vector[0], 2, 1e-9);
    EXPECT_NEAR(r.slope_vector[1], 0, 1e-9);
    EXPECT_NEAR(r.offset, 0, 1e-9);
    double t = r.radii.front();
    EXPECT_NEAR(r.values.front(), 2 * std::acosh(2 * std::pow(std::cosh(t * d[0] / 2), 2) + 1), 1e-9);
  }
}

TEST(RayFit, SlopeVectorMatchesIndependentGradient) {
  // finite differences of explicit 300-digit matrix products at radius 100
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> ut(-1.4, 1.4);
  for (const char* w : {"abAbaB", "aabAbb", "abbAB", "aabAB"}) {
    int checked = 0;
    for (int i = 0; i < 12 && checked < 4; ++i) {
      double th = ut(rng);
      std::array<double, 2> d{std::cos(th), std::sin(th)};
      auto r = apl::ray_fit(word(w), kCusp, d, apl::log_radii(1, 100));
      if (r.on_wall) continue;
      ++checked;
      double l = 100 * d[0], tau = 100 * d[1], h = 0.5;
      double gl = (matrix_length(w, l + h, tau) - matrix_length(w, l - h, tau)) / (2 * h);
      double gt = (matrix_length(w, l, tau + h) - matrix_length(w, l, tau - h)) / (2 * h);
      EXPECT_NEAR(r.slope_vector[0], gl, 1e-9) << w << " " << th;
      EXPECT_NEAR(r.slope_vector[1], gt, 1e-9) << w << " " << th;
      EXPECT_TRUE(r.rational) << w;
    }
    EXPECT_GE(checked, 3) << w;
  }
}

TEST(RayFit, RandomRaysAreOfRationalType) {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> ut(-1.5, 1.5);
  for (const char* w : {"a", "aab", "abab^-1", "abAbaB"}) {
    int tried = 0, avoiding = 0, rational = 0;
    while (avoiding < 20 && tried < 200) {
      ++tried;
      double th = ut(rng);
      auto r = apl::ray_fit(word(w), kCusp, {std::cos(th), std::sin(th)}, apl::log_radii(10, 1000));
      if (r.on_wall) continue;
      ++avoiding;
      rational += r.rational;
      EXPECT_TRUE(std::isfinite(r.residual_sup));
    }
    EXPECT_EQ(avoiding, 20) << w;
    EXPECT_EQ(rational, 20) << w;
  }
}

TEST(RayFit, LogSinhIsAsymptoticallyLinearToo) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> ut(-1.5, 1.5);
  for (const char* w : {"aab", "abAbaB", "abab^-1"}) {
    for (int i = 0; i < 5; ++i) {
      double th = ut(rng);
      std::array<double, 2> d{std::cos(th), std::sin(th)};
      auto a = apl::ray_fit(word(w), kCusp, d, apl::log_radii(10, 1000));
      if (a.on_wall) continue;
      auto b = apl::ray_fit(word(w), kCusp, d, apl::log_radii(10, 1000), Transform::log_sinh);
      EXPECT_FALSE(b.on_wall);
      EXPECT_TRUE(b.rational);
      EXPECT_NEAR(b.slope_vector[0], a.slope_vector[0], 1e-9);
      EXPECT_NEAR(b.slope_vector[1], a.slope_vector[1], 1e-9);
      if (a.slope > 0) EXPECT_NEAR(b.offset, a.offset - std::log(2.0), 1e-9);
    }
  }
  // a length tending to zero: log sinh l_b = log 4 - l/2 + o(1)
  auto z = apl::ray_fit(CurveOnSurface::transversal(), kCusp, {1, 0}, apl::log_radii(10, 1000), Transform::log_sinh);
  EXPECT_NEAR(z.slope_vector[0], -0.5, 1e-9);
  EXPECT_NEAR(z.offset, std::log(4.0), 1e-9);
  EXPECT_TRUE(z.rational);
}

TEST(MarkingChange, MatchesElementaryMove) {
  for (double l1 : {0.0, 0.9}) {
    for (auto [l, tau] : {std::pair{1.7, 0.4}, {0.6, -2.2}, {4.0, 9.0}}) {
      auto Y = fn::elementary_move(SurfacePoint<double>::s11(l1, l, tau));
      EXPECT_NEAR(apl::MarkingChange(l1, 0)(l, tau), Y.length, 1e-11);
      EXPECT_NEAR(apl::MarkingChange(l1, 1)(l, tau), Y.twist, 1e-11);
    }
  }
  EXPECT_THROW(apl::MarkingChange(0, 2), PreconditionError);
}

TEST(MarkingChange, TwiceIsTheIdentity) {
  apl::MarkingChange m0(0, 0), m1(0, 1);
  for (auto [l, tau] : {std::pair{2.0, 0.7}, {60.0, -35.0}, {300.0, 410.0}}) {
    double l2 = m0(l, tau), t2 = m1(l, tau);
    EXPECT_NEAR(m0(l2, t2), l, 1e-9 * (1 + l));
    EXPECT_NEAR(m1(l2, t2), tau, 1e-9 * (1 + std::abs(tau)));
  }
}

TEST(MarkingChange, FitsAreOfRationalType) {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> ut(-1.5, 1.5);
  int n = 0;
  for (int i = 0; i < 12; ++i) {
    double th = ut(rng);
    auto f = apl::marking_change_fit(kCusp, {std::cos(th), std::sin(th)}, apl::log_radii(10, 1000));
    if (f[0].on_wall || f[1].on_wall) continue;
    ++n;
    EXPECT_TRUE(f[0].rational);
    EXPECT_TRUE(f[1].rational);
    // new length is the transversal: |tau|
    EXPECT_NEAR(std::abs(f[0].slope_vector[1]), 1, 1e-9);
    EXPECT_NEAR(f[0].slope_vector[0], 0, 1e-9);
  }
  EXPECT_GE(n, 8);
}

TEST(RayFit, Preconditions) {
  EXPECT_THROW(apl::ray_fit(word("ab"), kCusp, {0, 1}, apl::log_radii(10, 1000)), PreconditionError);
  EXPECT_THROW(apl::ray_fit(word("ab"), kCusp, {-1, 1}, apl::log_radii(10, 1000)), PreconditionError);
  EXPECT_THROW(apl::ray_fit(word("ab"), kCusp, {1, 0}, apl::log_radii(10, 500)), PreconditionError);
  EXPECT_THROW(apl::ray_fit(word("ab"), kCusp, {1, 0}, {10, 5, 2000}), PreconditionError);
  EXPECT_THROW(apl::ray_fit(word("ab"), kCusp, {1, 0}, {10, 2000}), PreconditionError);
  EXPECT_THROW(apl::log_radii(0, 10), PreconditionError);
}

TEST(RayFit, JsonRoundTripAndCsv) {
  auto r = apl::ray_fit(word("aab"), kCusp, {1, 0.25}, apl::log_radii(10, 1000, 7));
  auto j = r.to_json();
  EXPECT_EQ(j["schema"], "APL1");
  auto back = apl::RayFit::from_json(j);
  EXPECT_EQ(back.to_json().dump(), j.dump());
  auto bad = j;
  bad["schema"] = "APL0";
  EXPECT_THROW(apl::RayFit::from_json(bad), SchemaError);
  bad = j;
  bad["values"].erase(0);
  EXPECT_THROW(apl::RayFit::from_json(bad), SchemaError);
  bad = j;
  bad.erase("offset");
  EXPECT_THROW(apl::RayFit::from_json(bad), SchemaError);
  std::string csv = r.to_csv();
  EXPECT_EQ(csv.rfind("t,value,residual\r\n", 0), 0u);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 8);
}

TEST(WallScan, CoordinateCurveHasNoWalls) {
  auto s = apl::wall_scan(word("a"), kCusp, {}, 64);
  EXPECT_TRUE(s.walls.empty());
  ASSERT_EQ(s.cones.size(), 1u);
  EXPECT_DOUBLE_EQ(s.cones[0].slope[0], 1);
}

TEST(WallScan, TransversalKinkAtZeroTwist) {
  auto s = apl::wall_scan(CurveOnSurface::transversal(), kCusp, {}, 64);
  ASSERT_EQ(s.walls.size(), 1u);
  EXPECT_TRUE(s.walls[0].located);
  EXPECT_NEAR(s.walls[0].theta, 0, 1e-9);
  EXPECT_NEAR(s.walls[0].normal[0], 0, 1e-9);
  EXPECT_NEAR(std::abs(s.walls[0].normal[1]), 1, 1e-9);
  EXPECT_TRUE(s.walls[0].rational);
  ASSERT_EQ(s.cones.size(), 2u);
  EXPECT_NEAR(s.cones[0].slope[1], -1, 1e-9);
  EXPECT_NEAR(s.cones[1].slope[1], 1, 1e-9);
}

TEST(WallScan, TwistedTransversalsHaveOneWall) {
  // slope (k,1) is the transversal after k Dehn twists: wall tau = -k l
  for (long long k : {1, 2, -1, 3}) {
    auto s = apl::wall_scan(CurveOnSurface::of_slope(k, 1), kCusp, {}, 64);
    ASSERT_EQ(s.walls.size(), 1u) << k;
    EXPECT_NEAR(s.walls[0].theta, std::atan(double(-k)), 1e-9);
    EXPECT_TRUE(s.walls[0].located);
  }
}

TEST(WallScan, WallCountStableUnderRefinement) {
  for (const char* w : {"a", "b", "aab", "abab^-1", "abAbaB", "aabAbb", "abbAB"}) {
    auto c = apl::wall_scan(word(w), kCusp, {}, 64);
    auto f = apl::wall_scan(word(w), kCusp, {}, 128);
    ASSERT_EQ(c.walls.size(), f.walls.size()) << w;
    for (std::size_t i = 0; i < c.walls.size(); ++i) {
      EXPECT_NEAR(c.walls[i].theta, f.walls[i].theta, 1e-6) << w;
      EXPECT_TRUE(c.walls[i].rational) << w;
    }
    for (auto& k : f.cones) EXPECT_TRUE(k.rationality[0].pass && k.rationality[1].pass) << w;
  }
}

TEST(WallScan, CellsHaveStableSlopes) {
  auto s = apl::wall_scan(word("abAbaB"), kCusp, {}, 64);
  EXPECT_EQ(s.cones.size(), s.walls.size() + 1);
  for (auto& g : s.grid) {
    if (!g.stable) continue;
    int in = 0;
    for (auto& k : s.cones)
      if (g.theta >= k.theta_lo && g.theta <= k.theta_hi) {
        ++in;
        EXPECT_LT(apl::max_diff(g.g_2t, k.slope), apl::kJumpTol);
      }
    EXPECT_EQ(in, 1);
  }
}

TEST(WallScan, WorkerCountDoesNotChangeOutput) {
  auto a = apl::wall_scan(word("abAbaB"), kCusp, {}, 40, 1);
  auto b = apl::wall_scan(word("abAbaB"), kCusp, {}, 40, 3);
  EXPECT_EQ(a.to_json().dump(), b.to_json().dump());
}

TEST(WallScan, Preconditions) {
  EXPECT_THROW(apl::wall_scan(word("ab"), kCusp, {}, 16), PreconditionError);
  apl::Slice s;
  s.theta_min = -2;
  EXPECT_THROW(apl::wall_scan(word("ab"), kCusp, s, 64), PreconditionError);
  s = {};
  s.scale = 0;
  EXPECT_THROW(apl::wall_scan(word("ab"), kCusp, s, 64), PreconditionError);
}
