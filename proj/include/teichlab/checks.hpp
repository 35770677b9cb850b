#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <vector>

#include "json.hpp"
#include "teichlab/fn_surface.hpp"
#include "teichlab/hyptrig.hpp"

namespace teichlab::checks {

// ---------------------------------------------------------------- hexagons

struct HexagonCheck {
  std::uint64_t trials = 0;
  double round_trip_max = 0;  // relative, worst of both identities
  double regular_root_error = 0;
  std::vector<double> floors, sup_residuals;
  std::uint64_t f1_trials = 0, f1_violations = 0;
  double f1_worst_ratio = 0;  // max |dF| / (5 eps max(x,y,z))

  bool round_trip_ok() const { return round_trip_max <= 1e-9; }
  bool root_ok() const { return regular_root_error <= 1e-12; }
  bool residuals_ok() const {
    for (std::size_t i = 0; i < sup_residuals.size(); ++i) {
      if (!std::isfinite(sup_residuals[i])) return false;
      if (i > 0 && sup_residuals[i] > sup_residuals[i - 1] + 1e-12) return false;
    }
    return !sup_residuals.empty();
  }
  bool f1_ok() const { return f1_violations == 0; }
  bool pass() const { return round_trip_ok() && root_ok() && residuals_ok() && f1_ok(); }

  nlohmann::ordered_json to_json() const {
    return {{"schema", "HEX1"},         {"trials", trials},          {"round_trip_max", round_trip_max}, {"regular_root_error", regular_root_error},
            {"floors", floors},         {"sup_residuals", sup_residuals}, {"f1_trials", f1_trials},   {"f1_violations", f1_violations},
            {"f1_worst_ratio", f1_worst_ratio}, {"pass", pass()}};
  }
};

/// largest |log sinh F1 - E| on an n^3 grid over [floor, 4 floor]^3
inline double e_sup_residual(double floor, int n) {
  double best = 0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) {
        double x = floor * (1 + 3.0 * (i + 0.5) / n), y = floor * (1 + 3.0 * (j + 0.5) / n), z = floor * (1 + 3.0 * (k + 0.5) / n);
        best = std::max(best, std::abs(hyptrig::log_sinh_F1(x, y, z) - hyptrig::E_approx(x, y, z).value));
      }
  return best;
}

/// side s with convex(s, s, s) = s, by bisection
inline double regular_hexagon_side() {
  double lo = 0.5, hi = 3.0;
  for (int i = 0; i < 200; ++i) {
    double mid = 0.5 * (lo + hi);
    if (hyptrig::hexagon_side(hyptrig::HexMode::convex, mid, mid, mid) > mid)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

inline HexagonCheck hexagon_check(std::uint64_t trials, std::uint64_t seed, int grid = 36) {
  using hyptrig::HexMode;
  HexagonCheck r;
  r.trials = trials;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> U(0.1, 5.0);
  auto rel = [](double a, double b) { return std::abs(a - b) / std::max(1e-300, std::abs(b)); };
  for (std::uint64_t i = 0; i < trials; ++i) {
    double a = U(rng), b = U(rng), g = U(rng);
    for (HexMode m : {HexMode::convex, HexMode::crossed}) {
      double c = hyptrig::hexagon_side(m, a, b, g);
      r.round_trip_max = std::max(r.round_trip_max, rel(hyptrig::hexagon_side_inverse(m, a, b, c), g));
    }
  }
  r.regular_root_error = std::abs(regular_hexagon_side() - std::acosh(2.0));
  for (double f : {10.0, 20.0, 40.0}) {
    r.floors.push_back(f);
    r.sup_residuals.push_back(e_sup_residual(f, grid));
  }
  std::uniform_real_distribution<double> X(50.0, 400.0), E(1e-4, 0.99), S(-1.0, 1.0);
  r.f1_trials = trials;
  for (std::uint64_t i = 0; i < trials; ++i) {
    double x = X(rng), y = X(rng), z = X(rng), eps = E(rng);
    auto pert = [&](double v) { return v * std::pow(1 + eps, S(rng)); };
    double xp = pert(x), yp = pert(y), zp = pert(z);
    double d = std::abs(hyptrig::log_sinh_F1(x, y, z) - hyptrig::log_sinh_F1(xp, yp, zp));
    double bound = 5 * eps * std::max({x, y, z});
    r.f1_worst_ratio = std::max(r.f1_worst_ratio, d / bound);
    if (d > bound) ++r.f1_violations;
  }
  return r;
}

// ---------------------------------------------------------------- random surfaces

inline SurfacePoint<double> random_s11(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> L(0.3, 4.0), T(-3.0, 3.0), B(0.0, 3.0);
  double l1 = B(rng), l = L(rng), t = T(rng);
  return SurfacePoint<double>::s11(l1, l, t);
}

inline SurfacePoint<double> random_s04(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> L(0.3, 4.0), T(-3.0, 3.0), B(0.0, 2.5);
  std::array<double, 4> b;
  for (auto& v : b) v = B(rng);
  double l = L(rng), t = T(rng);
  return SurfacePoint<double>::s04(b, l, t);
}

// ---------------------------------------------------------------- Wolpert

struct WolpertBatch {
  std::uint64_t points_per_surface = 0;
  double max_defect_s11 = 0, max_defect_s04 = 0;
  std::uint64_t skipped_s11 = 0, skipped_s04 = 0;  // flagged as straddling a wall

  bool pass() const { return max_defect_s11 <= 1e-5 && max_defect_s04 <= 1e-5; }
  nlohmann::ordered_json to_json() const {
    return {{"schema", "WOL1"},          {"points_per_surface", points_per_surface}, {"max_defect_s11", max_defect_s11},
            {"max_defect_s04", max_defect_s04}, {"skipped_s11", skipped_s11},   {"skipped_s04", skipped_s04},
            {"pass", pass()}};
  }
};

/// |det J - 1| of the elementary move at `points` unflagged random points on each surface
inline WolpertBatch wolpert_batch(std::uint64_t points, std::uint64_t seed) {
  WolpertBatch r;
  r.points_per_surface = points;
  std::mt19937_64 rng(seed);
  for (int kind = 0; kind < 2; ++kind) {
    std::uint64_t done = 0;
    while (done < points) {
      auto X = kind == 0 ? random_s11(rng) : random_s04(rng);
      auto w = fn::wolpert_check(X);
      if (w.flagged) {
        ++(kind == 0 ? r.skipped_s11 : r.skipped_s04);
        continue;
      }
      double& m = kind == 0 ? r.max_defect_s11 : r.max_defect_s04;
      m = std::max(m, w.defect);
      ++done;
    }
  }
  return r;
}

// ---------------------------------------------------------------- twists

inline std::vector<Slope> spectrum_slopes() {
  std::vector<Slope> out;
  for (auto [p, q] : std::vector<std::pair<long long, long long>>{{0, 1}, {1, 1}, {-1, 1}, {2, 1}, {-2, 1}, {1, 2}, {-1, 2}, {3, 1}, {-3, 1}, {3, 2},
                                                                  {-3, 2}, {2, 3}, {-2, 3}, {1, 3}, {-1, 3}, {5, 2}, {-5, 3}, {4, 3}, {7, 5}, {-8, 5}})
    out.push_back(Slope::normalized(p, q));
  return out;
}

struct TwistCheck {
  std::uint64_t points = 0, curves = 0, grid_points = 0;
  double spectrum_max_rel = 0;
  double min_second_difference = std::numeric_limits<double>::infinity();
  std::uint64_t nonconvex = 0;

  bool pass() const { return spectrum_max_rel <= 1e-9 && nonconvex == 0; }
  nlohmann::ordered_json to_json() const {
    return {{"schema", "TWC1"},           {"points", points},          {"curves", curves},
            {"grid_points", grid_points}, {"spectrum_max_rel", spectrum_max_rel}, {"min_second_difference", min_second_difference},
            {"nonconvex", nonconvex},     {"pass", pass()}};
  }
};

/**
 * @brief Length spectra after the Dehn twist against relabeled slopes, and second differences
 * of l(tw^t X) on the twist grid t = -4, -3.5, ..., 4 with step h.
 */
inline TwistCheck twist_convexity(std::uint64_t points, std::uint64_t seed, double h = 0.05) {
  TwistCheck r;
  r.points = points;
  auto slopes = spectrum_slopes();
  r.curves = slopes.size();
  std::mt19937_64 rng(seed);
  for (std::uint64_t i = 0; i < points; ++i) {
    auto X = i % 2 ? random_s11(rng) : random_s04(rng);
    auto D = fn::dehn_twist(X);
    for (const Slope& s : slopes) {
      double lhs = fn::slope_length(D, s), rhs = fn::slope_length(X, fn::dehn_relabel(X.kind, s));
      r.spectrum_max_rel = std::max(r.spectrum_max_rel, std::abs(lhs - rhs) / std::max(1.0, std::abs(rhs)));
      for (double t = -4; t <= 4; t += 0.5) {
        double m = fn::slope_length(fn::twist_flow(X, t - h), s), c = fn::slope_length(fn::twist_flow(X, t), s),
               p = fn::slope_length(fn::twist_flow(X, t + h), s);
        double d2 = m - 2 * c + p;
        ++r.grid_points;
        r.min_second_difference = std::min(r.min_second_difference, d2);
        if (!(d2 > 0)) ++r.nonconvex;
      }
    }
  }
  return r;
}

}  // namespace teichlab::checks
