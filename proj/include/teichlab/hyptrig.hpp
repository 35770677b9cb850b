#pragma once

#include <algorithm>
#include <cmath>
#include <utility>

#include "teichlab/numeric.hpp"

namespace teichlab::hyptrig {

enum class HexMode { convex, crossed };

// automatic switches to the log-domain path once any argument exceeds 350
enum class EvalPath { automatic, direct, log_domain };

inline constexpr double kLogDomainThreshold = 350.0;

enum class PLRegion { delta1 = 1, delta2 = 2, delta3 = 3 };

/** @brief Sides of a right-angled hexagon, listed as a, tc, b, ta, c, tb around the boundary. */
template <class T = double>
struct HexSides {
  T a{}, b{}, c{}, ta{}, tb{}, tc{};

  bool valid() const {
    for (const T* v : {&a, &b, &c, &ta, &tb, &tc})
      if (!(*v > T(0)) || !num::is_finite(*v)) return false;
    return true;
  }
};

template <class T = double>
struct PantsBoundary {
  T x{}, y{}, z{};
  bool valid() const { return x > T(0) && y > T(0) && z > T(0) && num::is_finite(x) && num::is_finite(y) && num::is_finite(z); }
};

template <class T = double>
struct EValue {
  T value{};
  PLRegion region{PLRegion::delta1};
};

namespace detail {

template <class T>
bool use_log(EvalPath p, std::initializer_list<T> args) {
  if (p == EvalPath::log_domain) return true;
  if (p == EvalPath::direct) return false;
  for (const T& v : args)
    if (v > T(kLogDomainThreshold)) return true;
  return false;
}

template <class T>
void require_positive(std::initializer_list<T> args, const char* what) {
  for (const T& v : args)
    if (!(v > T(0)) || !num::is_finite(v)) throw DomainError(std::string(what) + ": arguments must be positive and finite");
}

template <class T>
T checked(const T& v) {
  if (!num::is_finite(v)) throw OverflowError("cosh/sinh intermediate overflowed; use the log-domain path");
  return v;
}

// log R with R = cosh(F1(x,y,z)) - 1 = 2cosh((z+x-y)/2)cosh((z-x+y)/2) / (sinh x sinh y)
template <class T>
T f1_log_R(const T& x, const T& y, const T& z) {
  using num::log_cosh;
  using num::log_sinh;
  return num::ln2<T>() + log_cosh(T((z + x - y) / 2)) + log_cosh(T((z - x + y) / 2)) - log_sinh(x) - log_sinh(y);
}

template <class T>
T f1_R_direct(const T& x, const T& y, const T& z) {
  using std::cosh;
  using std::sinh;
  T num = checked(T(T(2) * cosh(T((z + x - y) / 2)) * cosh(T((z - x + y) / 2))));
  T den = checked(T(sinh(x) * sinh(y)));
  return checked(T(num / den));
}

}  // namespace detail

/// log(R) where F1(x,y,z) = arccosh(1 + R); exact for all positive inputs
template <class T>
T seam_F1_log_R(T x, T y, T z) {
  detail::require_positive({x, y, z}, "seam_F1");
  return detail::f1_log_R(x, y, z);
}

/**
 * @brief F1(x,y,z) = arccosh((cosh z + cosh x cosh y) / (sinh x sinh y)).
 * With half_lengths set the arguments are halved first (pants boundary lengths to hexagon sides).
 */
template <class T>
T seam_F1(T x, T y, T z, bool half_lengths = false, EvalPath path = EvalPath::automatic) {
  detail::require_positive({x, y, z}, "seam_F1");
  if (half_lengths) {
    x /= 2;
    y /= 2;
    z /= 2;
  }
  if (detail::use_log(path, {x, y, z})) return num::acosh1p_from_log(detail::f1_log_R(x, y, z));
  return num::acosh1p(detail::f1_R_direct(x, y, z));
}

/// log sinh F1(x,y,z), computed from R so that it stays accurate when F1 is tiny or huge
template <class T>
T log_sinh_F1(T x, T y, T z) {
  using std::exp;
  detail::require_positive({x, y, z}, "log_sinh_F1");
  T lr = detail::f1_log_R(x, y, z);
  // sinh(arccosh(1+R))^2 = R (R + 2)
  T lr2 = (lr < T(0)) ? T(num::ln2<T>() + num::log1p(T(exp(lr) / 2))) : T(lr + num::log1p(T(2 * exp(-lr))));
  return (lr + lr2) / 2;
}

/**
 * @brief Solve one hexagon identity for the remaining side.
 * convex: given c~ returns c from cosh c = (cosh c~ + cosh a~ cosh b~)/(sinh a~ sinh b~).
 * crossed: given c returns c~ from cosh c~ = sinh a~ sinh b~ cosh c + cosh a~ cosh b~.
 */
template <class T>
T hexagon_side(HexMode mode, T ta, T tb, T given, EvalPath path = EvalPath::automatic) {
  detail::require_positive({ta, tb, given}, "hexagon_side");
  if (mode == HexMode::convex) return seam_F1(ta, tb, given, false, path);

  using num::log_cosh;
  using num::log_sinh;
  // cosh c~ - 1 = 2 sinh a~ sinh b~ cosh^2(c/2) + 2 sinh^2((a~-b~)/2), no cancellation
  T d = ta > tb ? T(ta - tb) : T(tb - ta);
  if (detail::use_log(path, {ta, tb, given})) {
    T l1 = num::ln2<T>() + log_sinh(ta) + log_sinh(tb) + T(2) * log_cosh(T(given / 2));
    T l2 = d > T(0) ? T(num::ln2<T>() + T(2) * log_sinh(T(d / 2))) : num::neg_inf<T>();
    return num::acosh1p_from_log(num::logsumexp<T>({l1, l2}));
  }
  using std::cosh;
  using std::sinh;
  T ch = cosh(T(given / 2));
  T sd = sinh(T(d / 2));
  T R = detail::checked(T(T(2) * sinh(ta) * sinh(tb) * ch * ch + T(2) * sd * sd));
  return num::acosh1p(R);
}

/**
 * @brief The same identity solved in the other direction.
 * convex: given c returns c~ (cosh c~ = sinh a~ sinh b~ cosh c - cosh a~ cosh b~).
 * crossed: given c~ returns c (cosh c = (cosh c~ - cosh a~ cosh b~)/(sinh a~ sinh b~)).
 */
template <class T>
T hexagon_side_inverse(HexMode mode, T ta, T tb, T value, EvalPath path = EvalPath::automatic) {
  detail::require_positive({ta, tb, value}, "hexagon_side_inverse");
  using num::log_cosh;
  using num::log_sinh;
  using std::exp;
  const bool lg = detail::use_log(path, {ta, tb, value});
  if (mode == HexMode::crossed) {
    // cosh c - 1 = 2 sinh((c~+a~+b~)/2) sinh((c~-a~-b~)/2) / (sinh a~ sinh b~)
    T gap = value - ta - tb;
    if (!(gap > T(0))) throw DomainError("hexagon_side_inverse: arccosh argument below 1 (crossed, c~ <= a~ + b~)");
    if (lg) {
      T lr = num::ln2<T>() + log_sinh(T((value + ta + tb) / 2)) + log_sinh(T(gap / 2)) - log_sinh(ta) - log_sinh(tb);
      return num::acosh1p_from_log(lr);
    }
    using std::sinh;
    T R = detail::checked(T(T(2) * sinh(T((value + ta + tb) / 2)) * sinh(T(gap / 2)) / (sinh(ta) * sinh(tb))));
    return num::acosh1p(R);
  }
  // convex: cosh c~ - 1 = 2 sinh a~ sinh b~ sinh^2(c/2) - 2 cosh^2((a~-b~)/2)
  T d = ta > tb ? T(ta - tb) : T(tb - ta);
  T la = num::ln2<T>() + log_sinh(ta) + log_sinh(tb) + T(2) * log_sinh(T(value / 2));
  T lb = num::ln2<T>() + T(2) * log_cosh(T(d / 2));
  if (!(la > lb)) throw DomainError("hexagon_side_inverse: arccosh argument below 1 (convex)");
  if (lg) return num::acosh1p_from_log(T(la + num::log1p(T(-exp(T(lb - la))))));
  using std::cosh;
  using std::sinh;
  T s = sinh(T(value / 2));
  T ch = cosh(T(d / 2));
  T R = detail::checked(T(T(2) * sinh(ta) * sinh(tb) * s * s - T(2) * ch * ch));
  if (!(R > T(0))) throw DomainError("hexagon_side_inverse: arccosh argument below 1 (convex)");
  return num::acosh1p(R);
}

/// Completes a convex right-angled hexagon from its alternate sides a~, b~, c~.
template <class T>
HexSides<T> hexagon_from_alternate(T ta, T tb, T tc, EvalPath path = EvalPath::automatic) {
  HexSides<T> h;
  h.ta = ta;
  h.tb = tb;
  h.tc = tc;
  h.c = hexagon_side(HexMode::convex, ta, tb, tc, path);
  h.a = hexagon_side(HexMode::convex, tb, tc, ta, path);
  h.b = hexagon_side(HexMode::convex, tc, ta, tb, path);
  return h;
}

/// relative residual of the convex identity for side c
template <class T>
T hc1_residual(const HexSides<T>& h) {
  using std::abs;
  using std::cosh;
  using std::sinh;
  T lhs = cosh(h.c) * sinh(h.ta) * sinh(h.tb);
  T rhs = cosh(h.tc) + cosh(h.ta) * cosh(h.tb);
  return abs(lhs - rhs) / abs(rhs);
}

/// classification with ties resolved toward the lower index
template <class T>
PLRegion pl_region(T x, T y, T z) {
  using std::abs;
  if (x + y <= z) return PLRegion::delta1;
  if (abs(x - y) <= z) return PLRegion::delta2;
  return PLRegion::delta3;
}

template <class T>
EValue<T> E_approx(T x, T y, T z) {
  if (x < T(0) || y < T(0) || z < T(0)) throw DomainError("E_approx: arguments must be non-negative");
  PLRegion r = pl_region(x, y, z);
  switch (r) {
    case PLRegion::delta1:
      return {z - x - y, r};
    case PLRegion::delta2:
      return {(z - x - y) / 2, r};
    default:
      return {-(x < y ? x : y), r};
  }
}

}  // namespace teichlab::hyptrig
