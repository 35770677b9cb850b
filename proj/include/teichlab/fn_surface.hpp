#pragma once

#include <algorithm>
#include <array>
#include <type_traits>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "teichlab/farey.hpp"
#include "teichlab/fricke.hpp"
#include "teichlab/hyptrig.hpp"
#include "teichlab/numeric.hpp"

namespace teichlab {

enum class SurfaceKind { s11, s04 };

/**
 * @brief A marked hyperbolic structure in Fenchel-Nielsen coordinates.
 * boundary[0] is the S11 boundary; S04 uses all four. Length 0 is a cusp.
 * twist is measured in length units along the interior curve.
 */
template <class T = double>
struct SurfacePoint {
  SurfaceKind kind = SurfaceKind::s11;
  std::array<T, 4> boundary{};
  T length = T(1);
  T twist = T(0);

  static SurfacePoint s11(T l1, T l, T tau) { return {SurfaceKind::s11, {l1, T(0), T(0), T(0)}, l, tau}; }
  static SurfacePoint s04(std::array<T, 4> b, T l, T tau) { return {SurfaceKind::s04, b, l, tau}; }

  bool valid() const {
    if (!(length > T(0)) || !num::is_finite(length) || !num::is_finite(twist)) return false;
    int nb = kind == SurfaceKind::s11 ? 1 : 4;
    for (int i = 0; i < nb; ++i)
      if (!(boundary[i] >= T(0)) || !num::is_finite(boundary[i])) return false;
    return true;
  }

  void validate() const {
    if (!valid()) throw DomainError("surface point: need length > 0, boundary lengths >= 0, finite twist");
  }

  /// kind,l1[,l2,l3,l4],l,tau with 17 significant digits
  std::string serialize() const {
    std::string s = kind == SurfaceKind::s11 ? "S11" : "S04";
    int nb = kind == SurfaceKind::s11 ? 1 : 4;
    for (int i = 0; i < nb; ++i) s += "," + num::fmt17(num::to_double(boundary[i]));
    s += "," + num::fmt17(num::to_double(length));
    s += "," + num::fmt17(num::to_double(twist));
    return s;
  }

  static SurfacePoint parse(const std::string& text) {
    std::vector<std::string> f;
    std::stringstream ss(text);
    std::string tok;
    while (std::getline(ss, tok, ',')) f.push_back(tok);
    SurfacePoint X;
    std::size_t nb;
    if (!f.empty() && f[0] == "S11") {
      X.kind = SurfaceKind::s11;
      nb = 1;
    } else if (!f.empty() && f[0] == "S04") {
      X.kind = SurfaceKind::s04;
      nb = 4;
    } else {
      throw SchemaError("surface point: unknown kind in '" + text + "'");
    }
    if (f.size() != nb + 3) throw SchemaError("surface point: wrong field count in '" + text + "'");
    try {
      for (std::size_t i = 0; i < nb; ++i) X.boundary[i] = T(std::stod(f[1 + i]));
      X.length = T(std::stod(f[1 + nb]));
      X.twist = T(std::stod(f[2 + nb]));
    } catch (const std::exception&) {
      throw SchemaError("surface point: malformed number in '" + text + "'");
    }
    X.validate();
    return X;
  }
};

/// a slope, a word in pi_1 (one-holed torus only) or a boundary component
struct CurveOnSurface {
  enum class Kind { slope, word, boundary };
  Kind kind = Kind::slope;
  Slope slope{};
  Word word{};
  int boundary = 0;

  static CurveOnSurface of_slope(long long p, long long q) { return {Kind::slope, Slope::normalized(p, q), {}, 0}; }
  static CurveOnSurface of_word(const Word& w) { return {Kind::word, {}, w, 0}; }
  static CurveOnSurface of_boundary(int i) { return {Kind::boundary, {}, {}, i}; }
  static CurveOnSurface interior() { return of_slope(1, 0); }
  /// transversal number k: slope (k,1)
  static CurveOnSurface transversal(long long k = 0) { return of_slope(k, 1); }
};

namespace fn {

/// K with y = 2K cosh(tau/2): K^2 = (cosh l + cosh(l1/2)) / (2 sinh^2(l/2))
template <class T>
T s11_K(T l, T l1) {
  using std::cosh;
  using std::sinh;
  using std::sqrt;
  T sh = sinh(l / 2);
  return sqrt((cosh(l) + cosh(l1 / 2)) / (T(2) * sh * sh));
}

/// closed-form trace coordinates (x, y, z) = (tr a, tr b, tr ab)
template <class T>
FrickeTriple<T> fricke_triple(const SurfacePoint<T>& X) {
  using std::cosh;
  if (X.kind != SurfaceKind::s11) throw PreconditionError("fricke_triple: one-holed torus only");
  X.validate();
  T K = s11_K(X.length, X.boundary[0]);
  return {T(2) * cosh(X.length / 2), T(2) * K * cosh(X.twist / 2), T(2) * K * cosh((X.twist + X.length) / 2)};
}

template <class T>
Mat2<T> s11_B(T tau, T d) {
  using std::cosh;
  using std::exp;
  using std::sinh;
  T ch = cosh(d / 2), sh = sinh(d / 2), e = exp(tau / 2);
  return {e * ch, e * sh, sh / e, ch / e};
}

/**
 * @brief Matrices A = diag(e^{l/2}, e^{-l/2}), B = diag(e^{tau/2}, e^{-tau/2}) H(d), with the
 * perpendicular distance d found by bisection on tr[A,B] = -2 cosh(l1/2).
 */
template <class T>
std::pair<Mat2<T>, Mat2<T>> s11_representation(const SurfacePoint<T>& X) {
  using std::cosh;
  using std::exp;
  if (X.kind != SurfaceKind::s11) throw PreconditionError("s11_representation: one-holed torus only");
  X.validate();
  const T l = X.length;
  Mat2<T> A{exp(l / 2), T(0), T(0), exp(-l / 2)};
  const T target = -T(2) * cosh(X.boundary[0] / 2);
  // tr[A,B] is independent of tau and decreasing in d; evaluate at tau = 0
  auto comm = [&](T d) {
    Mat2<T> B = s11_B(T(0), d);
    return (A * B * A.inv() * B.inv()).trace();
  };
  T lo = T(0), hi = T(1);
  while (comm(hi) > target) {
    hi *= 2;
    if (hi > T(1400)) throw DomainError("s11_representation: no perpendicular distance realizes the boundary length");
  }
  for (int i = 0; i < 200; ++i) {
    T mid = (lo + hi) / 2;
    if (comm(mid) > target)
      lo = mid;
    else
      hi = mid;
    if (hi - lo <= std::numeric_limits<T>::epsilon() * hi) break;
  }
  return {A, s11_B(X.twist, T((lo + hi) / 2))};
}

/// Farey seeds read off the matrices of the representation
template <class T>
FareySeeds<T> s11_seeds_from_rep(const std::pair<Mat2<T>, Mat2<T>>& rep) {
  using std::abs;
  const auto& [A, B] = rep;
  FareySeeds<T> s;
  s.alpha = abs(A.trace());
  s.eta0 = abs(B.trace());
  s.plus = abs((A * B).trace());
  s.minus = abs((A * B.inv()).trace());
  s.coef = {T(0), T(0), T(0)};
  return s;
}

/// closed-form seeds; tr(ab^-1) = 2K cosh((tau - l)/2) avoids the cancellation in xy - z
template <class T>
FareySeeds<T> s11_seeds(const SurfacePoint<T>& X) {
  using std::cosh;
  auto t = fricke_triple(X);
  T K = s11_K(X.length, X.boundary[0]);
  return {t.x, t.y, t.z, T(T(2) * K * cosh((X.twist - X.length) / 2)), {T(0), T(0), T(0)}};
}

/// perpendicular data of the S04 pants: H_i = sinh(l_i/2) cosh h_i, S_i = sinh(l_i/2) sinh h_i
template <class T>
struct S04Perp {
  std::array<T, 4> H{}, S{}, c{};
};

template <class T>
S04Perp<T> s04_perp(const SurfacePoint<T>& X) {
  using std::cosh;
  using std::sinh;
  using std::sqrt;
  S04Perp<T> p;
  const T ch = cosh(X.length / 2), sh = sinh(X.length / 2);
  static constexpr int partner[4] = {1, 0, 3, 2};
  for (int i = 0; i < 4; ++i) p.c[i] = cosh(X.boundary[i] / 2);
  for (int i = 0; i < 4; ++i) {
    T si = sinh(X.boundary[i] / 2);
    p.H[i] = (p.c[partner[i]] + p.c[i] * ch) / sh;
    T d = p.H[i] * p.H[i] - si * si;
    p.S[i] = sqrt(d > T(0) ? d : T(0));
  }
  return p;
}

/// 2 cosh(l_eta/2) for eta_k, the transversal of slope (k,1)
template <class T>
T s04_transversal_trace(const SurfacePoint<T>& X, const S04Perp<T>& p, long long k) {
  using std::cosh;
  const int j = (k % 2 == 0) ? 2 : 3;
  const T s = X.twist + T(k) * X.length / 2;
  return T(2) * (p.S[0] * p.S[j] * cosh(s) + p.H[0] * p.H[j] - p.c[0] * p.c[j]);
}

template <class T>
FareySeeds<T> s04_seeds(const SurfacePoint<T>& X) {
  using std::cosh;
  if (X.kind != SurfaceKind::s04) throw PreconditionError("s04_seeds: four-holed sphere only");
  X.validate();
  auto p = s04_perp(X);
  const T a = T(2) * p.c[0], b = T(2) * p.c[1], c = T(2) * p.c[2], d = T(2) * p.c[3];
  FareySeeds<T> s;
  s.alpha = T(2) * cosh(X.length / 2);
  s.eta0 = s04_transversal_trace(X, p, 0);
  s.plus = s04_transversal_trace(X, p, 1);
  s.minus = s04_transversal_trace(X, p, -1);
  s.coef = {T(a * b + c * d), T(a * c + b * d), T(b * c + a * d)};
  return s;
}

template <class T>
FareySeeds<T> seeds(const SurfacePoint<T>& X) {
  return X.kind == SurfaceKind::s11 ? s11_seeds(X) : s04_seeds(X);
}

template <class T>
T length_of_trace(T t) {
  if (t < T(2)) {
    if (t > T(2) - T(1e-9) * T(2)) return T(0);
    throw DomainError("curve_length: trigonometric intermediate left the arccosh domain");
  }
  return length_trace(t);
}

/// the recursion needs the wide type, arccosh of a large trace does not
inline double length_of_wide_trace(const mp_float& t) {
  if (t < mp_float(1e300)) return length_of_trace(static_cast<double>(t));
  return static_cast<double>(length_of_trace(t));
}

template <class U, class T>
SurfacePoint<U> convert(const SurfacePoint<T>& X) {
  return {X.kind, {U(X.boundary[0]), U(X.boundary[1]), U(X.boundary[2]), U(X.boundary[3])}, U(X.length), U(X.twist)};
}

/**
 * @brief Slope lengths from closed-form seeds. The recursion subtracts nearly equal products
 * once seed traces are large, so large seeds switch the evaluation to mp_float.
 */
template <class T>
class SlopeLengths {
 public:
  static constexpr double kPromote = 1e3;

  explicit SlopeLengths(const SurfacePoint<T>& X) : X_(X), s_(seeds(X)) {
    using std::abs;
    T m = std::max({abs(s_.alpha), abs(s_.eta0), abs(s_.plus), abs(s_.minus)});
    promote_ = !std::is_same_v<T, mp_float> && m > T(kPromote);
    if (promote_) mp_ = seeds(convert<mp_float>(X));
  }

  T length(Slope s) const {
    if (s.q == 0) return X_.length;
    if (promote_) return T(length_of_wide_trace(farey_trace(mp_, s)));
    return length_of_trace(farey_trace(s_, s));
  }

  T trace(Slope s) const { return promote_ ? T(num::to_double(farey_trace(mp_, s))) : farey_trace(s_, s); }

  bool promoted() const { return promote_; }

 private:
  SurfacePoint<T> X_;
  FareySeeds<T> s_;
  FareySeeds<mp_float> mp_;
  bool promote_ = false;
};

template <class T>
T slope_length(const SurfacePoint<T>& X, Slope s) {
  if (s.q == 0) return X.length;
  return SlopeLengths<T>(X).length(s);
}

/**
 * @brief Geodesic length. One-holed torus slopes and words go through the matrix
 * representation; four-holed sphere slopes through the pants trigonometry.
 */
template <class T>
T curve_length(const SurfacePoint<T>& X, const CurveOnSurface& c) {
  X.validate();
  if (c.kind == CurveOnSurface::Kind::boundary) {
    int nb = X.kind == SurfaceKind::s11 ? 1 : 4;
    if (c.boundary < 0 || c.boundary >= nb) throw PreconditionError("curve_length: boundary index out of range");
    return X.boundary[c.boundary];
  }
  if (c.kind == CurveOnSurface::Kind::slope && c.slope.q == 0) return X.length;
  if (X.kind == SurfaceKind::s11) {
    auto rep = s11_representation(X);
    if (c.kind == CurveOnSurface::Kind::word) {
      if (c.word.empty()) throw PreconditionError("curve_length: empty word");
      using std::abs;
      return length_of_trace(T(abs(trace_word_numeric(rep.first, rep.second, c.word))));
    }
    auto sd = s11_seeds_from_rep(rep);
    using std::abs;
    if (!std::is_same_v<T, mp_float> && std::max({abs(sd.eta0), abs(sd.plus), abs(sd.minus)}) > T(SlopeLengths<T>::kPromote)) {
      auto hp = s11_seeds_from_rep(s11_representation(convert<mp_float>(X)));
      return T(num::to_double(length_of_trace(farey_trace(hp, c.slope))));
    }
    return length_of_trace(farey_trace(sd, c.slope));
  }
  if (c.kind == CurveOnSurface::Kind::word) throw PreconditionError("curve_length: words are supported on the one-holed torus only");
  return SlopeLengths<T>(X).length(c.slope);
}

/// transversal length from cosh(l_b/2) = K cosh(tau/2), K = coth(l/2) at a cusp
template <class T>
T s11_transversal_closed_form(const SurfacePoint<T>& X) {
  using std::cosh;
  return T(2) * num::acosh(T(s11_K(X.length, X.boundary[0]) * cosh(X.twist / 2)));
}

/// one-holed torus point with the given trace triple and boundary length
template <class T>
SurfacePoint<T> s11_from_fricke(const FrickeTriple<T>& t, T l1) {
  using std::sinh;
  T l = length_trace(t.x);
  if (!(l > T(0))) throw DomainError("s11_from_fricke: tr a must exceed 2");
  T K = s11_K(l, l1);
  T tau = T(2) * num::asinh(T((t.z - t.x * t.y / 2) / (T(2) * K * sinh(l / 2))));
  return SurfacePoint<T>::s11(l1, l, tau);
}

template <class T>
SurfacePoint<T> twist_flow(const SurfacePoint<T>& X, T t) {
  SurfacePoint<T> Y = X;
  Y.twist += t;
  return Y;
}

/// the twist by l on the point; slopes relabel by dehn_relabel
template <class T>
SurfacePoint<T> dehn_twist(const SurfacePoint<T>& X) {
  return twist_flow(X, X.length);
}

/// length of s at the Dehn-twisted point equals the length of dehn_relabel(s) at the original point
inline Slope dehn_relabel(SurfaceKind kind, Slope s, long long power = 1) {
  long long k = kind == SurfaceKind::s11 ? 1 : 2;
  return Slope::normalized(s.p + power * k * s.q, s.q);
}

/**
 * @brief Re-marks the surface with the transversal as the new interior curve.
 * One-holed torus: (a, b) -> (b, a^-1). Four-holed sphere: boundaries reorder to (1,3,2,4),
 * the interior becomes eta_0 and the twist is solved from the length of the old interior
 * curve, with the sign taken from the transversal of slope (1,1).
 */
template <class T>
SurfacePoint<T> elementary_move(const SurfacePoint<T>& X) {
  using std::abs;
  using std::cosh;
  X.validate();
  if (X.kind == SurfaceKind::s11) {
    auto t = fricke_triple(X);
    T minus = s11_seeds(X).minus;
    return s11_from_fricke(FrickeTriple<T>{t.y, t.x, minus}, X.boundary[0]);
  }
  auto sd = s04_seeds(X);
  SurfacePoint<T> Y = X;
  Y.boundary = {X.boundary[0], X.boundary[2], X.boundary[1], X.boundary[3]};
  Y.length = length_of_trace(sd.eta0);
  Y.twist = T(0);
  auto p = s04_perp(Y);
  // cosh(l_alpha/2) = S1 S3 cosh tau' + H1 H3 - c1 c3 in the new labels
  T arg = (cosh(X.length / 2) - p.H[0] * p.H[2] + p.c[0] * p.c[2]) / (p.S[0] * p.S[2]);
  if (arg < T(1)) {
    if (arg < T(1) - T(1e-9)) throw DomainError("elementary_move: twist equation left the arccosh domain");
    arg = T(1);
  }
  T tau = num::acosh(arg);
  // new eta_1 separates the same pairs as old eta_{-1}
  Y.twist = tau;
  T tp = s04_transversal_trace(Y, p, 1);
  Y.twist = -tau;
  T tm = s04_transversal_trace(Y, p, 1);
  Y.twist = abs(tp - sd.minus) <= abs(tm - sd.minus) ? tau : T(-tau);
  return Y;
}

struct WolpertResult {
  double defect = 0;  // |det J - 1|
  bool flagged = false;
};

/// central-difference Jacobian of the elementary move in (length, twist)
template <class T>
WolpertResult wolpert_check(const SurfacePoint<T>& X, T h = T(-1)) {
  using std::abs;
  if (h <= T(0)) h = T(1e-5) * (T(1) + X.length);
  auto map = [&](T dl, T dt) {
    SurfacePoint<T> Y = X;
    Y.length += dl;
    Y.twist += dt;
    auto Z = elementary_move(Y);
    return std::pair<T, T>{Z.length, Z.twist};
  };
  auto lp = map(h, 0), lm = map(-h, 0), tp = map(0, h), tm = map(0, -h);
  T j11 = (lp.first - lm.first) / (2 * h), j21 = (lp.second - lm.second) / (2 * h);
  T j12 = (tp.first - tm.first) / (2 * h), j22 = (tp.second - tm.second) / (2 * h);
  WolpertResult r;
  r.defect = num::to_double(T(abs(j11 * j22 - j12 * j21 - T(1))));
  // the new twist changes sign across a wall; differences straddling it are meaningless
  auto c = map(0, 0);
  r.flagged = abs(c.second) < T(100) * h || (lp.second > T(0)) != (lm.second > T(0)) || (tp.second > T(0)) != (tm.second > T(0));
  return r;
}

struct ThurstonEstimate {
  double lower = 0;
  double stabilized = 0;
  bool converged = false;
  int depth = 0;
};

/// symmetrized slope supremum of |log(l(X)/l(Y))| over Farey depth <= depth
template <class T>
ThurstonEstimate thurston_distance_estimate(const SurfacePoint<T>& X, const SurfacePoint<T>& Y, int depth) {
  using std::abs;
  using std::log;
  if (X.kind != Y.kind) throw PreconditionError("thurston_distance_estimate: points on different surfaces");
  ThurstonEstimate e;
  std::vector<double> level_max(depth + 1, 0.0);
  auto collect = [&](const auto& sx, const auto& sy) {
    using U = std::decay_t<decltype(sx.alpha)>;
    auto len = [](const U& t) {
      if constexpr (std::is_same_v<U, mp_float>)
        return length_of_wide_trace(t);
      else
        return num::to_double(length_of_trace(t));
    };
    std::vector<double> lx;
    farey_traverse(sx, depth, [&](Slope s, const U& t, int) { lx.push_back(s.q == 0 ? 0.0 : len(t)); });
    std::size_t i = 0;
    farey_traverse(sy, depth, [&](Slope s, const U& t, int level) {
      double a = s.q == 0 ? num::to_double(X.length) : lx[i];
      double b = s.q == 0 ? num::to_double(Y.length) : len(t);
      ++i;
      level_max[level] = std::max(level_max[level], std::abs(std::log(a / b)));
    });
  };
  SlopeLengths<T> lx(X), ly(Y);
  if (lx.promoted() || ly.promoted())
    collect(seeds(convert<mp_float>(X)), seeds(convert<mp_float>(Y)));
  else
    collect(seeds(X), seeds(Y));
  double best = 0, prev = -1;
  for (int d = 0; d <= depth; ++d) {
    best = std::max(best, level_max[d]);
    e.lower = best;
    e.depth = d;
    if (!e.converged && prev >= 0 && std::abs(best - prev) <= 0.01 * std::max(best, 1e-300)) {
      e.converged = true;
      e.stabilized = best;
    }
    prev = best;
  }
  if (!e.converged) e.stabilized = e.lower;
  return e;
}

}  // namespace fn
}  // namespace teichlab
