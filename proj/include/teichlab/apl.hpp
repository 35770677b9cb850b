#pragma once

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <mpfr.h>

#include "json.hpp"
#include "teichlab/errors.hpp"
#include "teichlab/fn_surface.hpp"
#include "teichlab/fricke.hpp"
#include "teichlab/numeric.hpp"
#include "teichlab/orbit.hpp"
#include "teichlab/word.hpp"

namespace teichlab::apl {

namespace detail {

/// mpfr value; new values take the calling thread's working precision
class MpReal {
 public:
  static mpfr_prec_t& precision() {
    thread_local mpfr_prec_t p = 128;
    return p;
  }

  MpReal() {
    mpfr_init2(v_, precision());
    mpfr_set_zero(v_, 1);
  }
  MpReal(double d) {
    mpfr_init2(v_, precision());
    mpfr_set_d(v_, d, MPFR_RNDN);
  }
  MpReal(int i) {
    mpfr_init2(v_, precision());
    mpfr_set_si(v_, i, MPFR_RNDN);
  }
  MpReal(const MpReal& o) {
    mpfr_init2(v_, mpfr_get_prec(o.v_));
    mpfr_set(v_, o.v_, MPFR_RNDN);
  }
  MpReal(MpReal&& o) noexcept {
    mpfr_init2(v_, mpfr_get_prec(o.v_));
    mpfr_swap(v_, o.v_);
  }
  MpReal& operator=(const MpReal& o) {
    if (this != &o) {
      if (mpfr_get_prec(v_) != mpfr_get_prec(o.v_)) mpfr_set_prec(v_, mpfr_get_prec(o.v_));
      mpfr_set(v_, o.v_, MPFR_RNDN);
    }
    return *this;
  }
  MpReal& operator=(MpReal&& o) noexcept {
    mpfr_swap(v_, o.v_);
    return *this;
  }
  ~MpReal() { mpfr_clear(v_); }

  mpfr_ptr get() { return v_; }
  mpfr_srcptr get() const { return v_; }
  double to_double() const { return mpfr_get_d(v_, MPFR_RNDN); }

  template <class Op>
  static MpReal apply(Op op, const MpReal& a) {
    MpReal r;
    op(r.v_, a.v_, MPFR_RNDN);
    return r;
  }
  template <class Op>
  static MpReal apply(Op op, const MpReal& a, const MpReal& b) {
    MpReal r;
    op(r.v_, a.v_, b.v_, MPFR_RNDN);
    return r;
  }

  friend MpReal operator+(const MpReal& a, const MpReal& b) { return apply(mpfr_add, a, b); }
  friend MpReal operator-(const MpReal& a, const MpReal& b) { return apply(mpfr_sub, a, b); }
  friend MpReal operator*(const MpReal& a, const MpReal& b) { return apply(mpfr_mul, a, b); }
  friend MpReal operator/(const MpReal& a, const MpReal& b) { return apply(mpfr_div, a, b); }
  friend MpReal operator-(const MpReal& a) { return apply(mpfr_neg, a); }
  friend bool operator<(const MpReal& a, const MpReal& b) { return mpfr_less_p(a.v_, b.v_) != 0; }

 private:
  mpfr_t v_;
};

inline MpReal cosh(const MpReal& a) { return MpReal::apply(mpfr_cosh, a); }
inline MpReal sinh(const MpReal& a) { return MpReal::apply(mpfr_sinh, a); }
inline MpReal sqrt(const MpReal& a) { return MpReal::apply(mpfr_sqrt, a); }
inline MpReal abs(const MpReal& a) { return MpReal::apply(mpfr_abs, a); }
inline MpReal log(const MpReal& a) { return MpReal::apply(mpfr_log, a); }
inline MpReal asinh(const MpReal& a) { return MpReal::apply(mpfr_asinh, a); }
inline MpReal acosh_clamped(const MpReal& a) {
  if (mpfr_cmp_si(a.get(), 1) <= 0) return MpReal(0);
  return MpReal::apply(mpfr_acosh, a);
}

class PrecisionGuard {
 public:
  explicit PrecisionGuard(mpfr_prec_t bits) : old_(MpReal::precision()) { MpReal::precision() = bits; }
  ~PrecisionGuard() { MpReal::precision() = old_; }
  PrecisionGuard(const PrecisionGuard&) = delete;
  PrecisionGuard& operator=(const PrecisionGuard&) = delete;

 private:
  mpfr_prec_t old_;
};

constexpr mpfr_prec_t kMaxBits = mpfr_prec_t(1) << 22;

/**
 * @brief f() at `bits` and `bits + 64`; accepted when both agree to 1e-14 relative,
 * otherwise the precision doubles.
 */
template <class F>
double precise(F&& f, double bits_hint) {
  mpfr_prec_t bits = std::max<mpfr_prec_t>(128, mpfr_prec_t(std::ceil(bits_hint)));
  for (; bits <= kMaxBits; bits *= 2) {
    double a, b;
    {
      PrecisionGuard g(bits);
      a = f().to_double();
    }
    {
      PrecisionGuard g(bits + 64);
      b = f().to_double();
    }
    if (a == b) return b;
    if (std::isfinite(b) && std::abs(a - b) <= 1e-14 * std::max(1.0, std::abs(b))) return b;
  }
  throw ConditionError("apl: value not settled at 2^22 bits");
}

/// cosh(l/2), K and the trace triple of the one-holed torus point (l1, l, tau)
struct MpPoint {
  MpReal x, y, z, minus, K;
};

inline MpReal s11_K(const MpReal& l, double l1) {
  MpReal sh = sinh(l / MpReal(2));
  return sqrt((cosh(l) + cosh(MpReal(l1 / 2))) / (MpReal(2) * sh * sh));
}

inline MpPoint mp_point(double l1, double l, double tau) {
  MpReal L(l), T(tau), two(2);
  MpReal K = s11_K(L, l1);
  return {two * cosh(L / two), two * K * cosh(T / two), two * K * cosh((T + L) / two), two * K * cosh((T - L) / two), K};
}

inline MpReal length_of_trace(const MpReal& t) { return MpReal(2) * acosh_clamped(abs(t) / MpReal(2)); }

inline bool peripheral(const Word& w) {
  Word c = w.cyclically_reduced();
  if (c.empty() || c.size() % 4 != 0) return false;
  std::string p;
  for (std::size_t k = 0; k < c.size() / 4; ++k) p += "abAB";
  return canonical_curve(c) == canonical_curve(Word::from_letters(p));
}

}  // namespace detail

enum class Transform { length, log_sinh };

inline std::string to_string(Transform t) { return t == Transform::length ? "length" : "log_sinh"; }

/**
 * @brief l_gamma on the one-holed torus with boundary length l1 as a function of
 * FN coordinates (l, tau), evaluated in mpfr until two precisions agree.
 */
class LengthFunction {
 public:
  LengthFunction(const CurveOnSurface& c, const SurfacePoint<double>& X0, Transform tr = Transform::length) : l1_(X0.boundary[0]), tr_(tr) {
    if (X0.kind != SurfaceKind::s11) throw PreconditionError("apl: the one-holed torus is the only supported surface");
    if (!(l1_ >= 0) || !std::isfinite(l1_)) throw DomainError("apl: boundary length must be finite and >= 0");
    switch (c.kind) {
      case CurveOnSurface::Kind::boundary:
        if (c.boundary != 0) throw PreconditionError("apl: boundary index out of range");
        constant_ = true;
        name_ = "boundary";
        return;
      case CurveOnSurface::Kind::slope:
        word_ = orbit::slope_word(c.slope);
        break;
      case CurveOnSurface::Kind::word:
        word_ = c.word.cyclically_reduced();
        break;
    }
    if (word_.empty()) throw PreconditionError("apl: empty word");
    if (detail::peripheral(word_)) throw PreconditionError("apl: peripheral word; use the boundary curve");
    name_ = word_.str();
    plan_ = TracePlan::build(word_);
  }

  const std::string& name() const { return name_; }
  double boundary_length() const { return l1_; }
  Transform transform() const { return tr_; }

  double operator()(double l, double tau) const {
    if (!(l > 0) || !std::isfinite(l) || !std::isfinite(tau)) throw DomainError("apl: need l > 0 and finite tau");
    if (constant_) {
      if (tr_ == Transform::length) return l1_;
      return num::log_sinh(l1_);
    }
    double hint = 64 + double(word_.size() + 2) * (l + std::abs(tau) + l1_) / (2 * std::log(2.0));
    return detail::precise([&] { return eval_mp(l, tau); }, hint);
  }

  detail::MpReal eval_mp(double l, double tau) const {
    using detail::MpReal;
    auto p = detail::mp_point(l1_, l, tau);
    MpReal len = detail::length_of_trace(plan_.eval(FrickeTriple<MpReal>{p.x, p.y, p.z}));
    if (tr_ == Transform::length) return len;
    if (mpfr_zero_p(len.get())) throw DomainError("apl: log sinh of a zero length");
    return detail::log(detail::sinh(len));
  }

 private:
  double l1_;
  Transform tr_;
  bool constant_ = false;
  Word word_;
  TracePlan plan_;
  std::string name_;
};

/// FN coordinates (l', tau') of the marking (b, a^-1) as functions of (l, tau)
class MarkingChange {
 public:
  MarkingChange(double l1, int component) : l1_(l1), component_(component) {
    if (component != 0 && component != 1) throw PreconditionError("marking change: component is 0 (length) or 1 (twist)");
  }

  std::string name() const { return component_ == 0 ? "move_length" : "move_twist"; }
  double boundary_length() const { return l1_; }

  double operator()(double l, double tau) const {
    if (!(l > 0) || !std::isfinite(l) || !std::isfinite(tau)) throw DomainError("apl: need l > 0 and finite tau");
    double hint = 64 + 3 * (l + std::abs(tau) + l1_) / (2 * std::log(2.0));
    return detail::precise([&] { return eval_mp(l, tau); }, hint);
  }

  detail::MpReal eval_mp(double l, double tau) const {
    using detail::MpReal;
    auto p = detail::mp_point(l1_, l, tau);
    MpReal two(2);
    MpReal lp = detail::length_of_trace(p.y);
    if (component_ == 0) return lp;
    MpReal Kp = detail::s11_K(lp, l1_);
    return two * detail::asinh((p.minus - p.x * p.y / two) / (two * Kp * detail::sinh(lp / two)));
  }

 private:
  double l1_;
  int component_;
};

// ---------------------------------------------------------------- rationality

struct RationalApprox {
  double value = 0;
  long long p = 0, q = 1;
  double error = 0;
  bool pass = false;
};

/// closest p/q with q <= max_den; pass when within tol
inline RationalApprox nearest_rational(double v, long long max_den = 64, double tol = 1e-4) {
  if (!std::isfinite(v)) return {v, 0, 1, std::numeric_limits<double>::infinity(), false};
  RationalApprox best{v, 0, 1, std::numeric_limits<double>::infinity(), false};
  for (long long q = 1; q <= max_den; ++q) {
    double p = std::round(v * double(q));
    double e = std::abs(v - p / double(q));
    if (e < best.error) best = {v, (long long)p, q, e, false};
  }
  long long g = std::gcd(best.p < 0 ? -best.p : best.p, best.q);
  if (g > 1) best.p /= g, best.q /= g;
  best.pass = best.error <= tol;
  return best;
}

inline nlohmann::ordered_json rational_json(const RationalApprox& r) {
  nlohmann::ordered_json j;
  j["value"] = r.value;
  j["p"] = r.p;
  j["q"] = r.q;
  j["error"] = r.error;
  j["pass"] = r.pass;
  return j;
}

inline RationalApprox rational_from_json(const nlohmann::ordered_json& j) {
  return {j.at("value").get<double>(), j.at("p").get<long long>(), j.at("q").get<long long>(), j.at("error").get<double>(),
          j.at("pass").get<bool>()};
}

// ---------------------------------------------------------------- rays

constexpr double kGradientStep = 0.5;
constexpr double kKinkTol = 1e-6;

struct Gradient {
  std::array<double, 2> central{}, kink{};
};

template <class F>
Gradient gradient_at(const F& f, double l, double tau, double h = kGradientStep) {
  double f0 = f(l, tau);
  double lp = f(l + h, tau), lm = f(l - h, tau), tp = f(l, tau + h), tm = f(l, tau - h);
  Gradient g;
  g.central = {(lp - lm) / (2 * h), (tp - tm) / (2 * h)};
  g.kink = {std::abs((lp - f0) - (f0 - lm)) / h, std::abs((tp - f0) - (f0 - tm)) / h};
  return g;
}

/// n log-spaced radii from lo to hi
inline std::vector<double> log_radii(double lo, double hi, int n = 25) {
  if (!(lo > 0) || !(hi > lo) || n < 2) throw PreconditionError("radii: need 0 < lo < hi and at least 2 points");
  std::vector<double> r(n);
  for (int i = 0; i < n; ++i) r[i] = lo * std::pow(hi / lo, double(i) / (n - 1));
  r.back() = hi;
  return r;
}

/**
 * @brief Fit F(t d) = g . (t d) + c along the ray t -> t d in FN coordinates (l, tau).
 * g is the gradient at the largest radius; c makes the residual vanish there.
 */
struct RayFit {
  std::string curve;
  std::string transform;
  double boundary_length = 0;
  std::array<double, 2> direction{};
  std::vector<double> radii, values, residuals;
  std::array<double, 2> slope_vector{};
  double slope = 0;  // along the ray, g . d
  double offset = 0;
  double residual_sup = 0;
  bool residual_decreasing = false;
  std::array<double, 2> kink{}, drift{};
  bool on_wall = false;
  std::array<RationalApprox, 2> rationality{};
  bool rational = false;

  nlohmann::ordered_json to_json() const {
    nlohmann::ordered_json j;
    j["schema"] = "APL1";
    j["type"] = "ray_fit";
    j["curve"] = curve;
    j["transform"] = transform;
    j["boundary_length"] = boundary_length;
    j["direction"] = direction;
    j["radii"] = radii;
    j["values"] = values;
    j["residuals"] = residuals;
    j["slope_vector"] = slope_vector;
    j["slope"] = slope;
    j["offset"] = offset;
    j["residual_sup"] = residual_sup;
    j["residual_decreasing"] = residual_decreasing;
    j["kink"] = kink;
    j["drift"] = drift;
    j["on_wall"] = on_wall;
    j["rationality"] = {rational_json(rationality[0]), rational_json(rationality[1])};
    j["rational"] = rational;
    return j;
  }

  static RayFit from_json(const nlohmann::ordered_json& j) {
    if (!j.is_object() || j.value("schema", "") != "APL1" || j.value("type", "") != "ray_fit")
      throw SchemaError("ray fit: missing APL1 ray_fit tag");
    try {
      RayFit r;
      r.curve = j.at("curve").get<std::string>();
      r.transform = j.at("transform").get<std::string>();
      r.boundary_length = j.at("boundary_length").get<double>();
      r.direction = j.at("direction").get<std::array<double, 2>>();
      r.radii = j.at("radii").get<std::vector<double>>();
      r.values = j.at("values").get<std::vector<double>>();
      r.residuals = j.at("residuals").get<std::vector<double>>();
      r.slope_vector = j.at("slope_vector").get<std::array<double, 2>>();
      r.slope = j.at("slope").get<double>();
      r.offset = j.at("offset").get<double>();
      r.residual_sup = j.at("residual_sup").get<double>();
      r.residual_decreasing = j.at("residual_decreasing").get<bool>();
      r.kink = j.at("kink").get<std::array<double, 2>>();
      r.drift = j.at("drift").get<std::array<double, 2>>();
      r.on_wall = j.at("on_wall").get<bool>();
      r.rationality = {rational_from_json(j.at("rationality").at(0)), rational_from_json(j.at("rationality").at(1))};
      r.rational = j.at("rational").get<bool>();
      if (r.values.size() != r.radii.size() || r.residuals.size() != r.radii.size()) throw SchemaError("ray fit: sample arrays differ in length");
      return r;
    } catch (const nlohmann::json::exception& e) {
      throw SchemaError(std::string("ray fit: ") + e.what());
    }
  }

  /// t,value,residual
  std::string to_csv() const {
    std::string s = "t,value,residual\r\n";
    for (std::size_t i = 0; i < radii.size(); ++i) s += num::fmt17(radii[i]) + "," + num::fmt17(values[i]) + "," + num::fmt17(residuals[i]) + "\r\n";
    return s;
  }
};

inline void check_ray(const std::array<double, 2>& d, const std::vector<double>& radii) {
  if (!std::isfinite(d[0]) || !std::isfinite(d[1]) || !(d[0] > 0)) throw PreconditionError("ray: the length component of the direction must be positive");
  if (radii.size() < 3) throw PreconditionError("ray: need at least 3 radii");
  for (std::size_t i = 0; i < radii.size(); ++i) {
    if (!(radii[i] > 0) || !std::isfinite(radii[i])) throw PreconditionError("ray: radii must be positive and finite");
    if (i > 0 && !(radii[i] > radii[i - 1])) throw PreconditionError("ray: radii must be strictly increasing");
  }
  if (radii.back() < 100 * radii.front()) throw PreconditionError("ray: radii must span at least two decades");
}

/// fit of any function of (l, tau) along a ray
template <class F>
RayFit fit_along_ray(const F& f, const std::string& name, const std::string& transform, double l1, std::array<double, 2> d,
                     const std::vector<double>& radii) {
  check_ray(d, radii);
  RayFit r;
  r.curve = name;
  r.transform = transform;
  r.boundary_length = l1;
  r.direction = d;
  r.radii = radii;
  for (double t : radii) r.values.push_back(f(t * d[0], t * d[1]));
  const std::size_t n = radii.size();
  double tm = radii[n - 1], tp = radii[n - 2];
  Gradient g = gradient_at(f, tm * d[0], tm * d[1]);
  Gradient gp = gradient_at(f, tp * d[0], tp * d[1]);
  r.slope_vector = g.central;
  r.kink = g.kink;
  r.drift = {std::abs(g.central[0] - gp.central[0]), std::abs(g.central[1] - gp.central[1])};
  r.on_wall = std::max({r.kink[0], r.kink[1], r.drift[0], r.drift[1]}) > kKinkTol;
  r.slope = g.central[0] * d[0] + g.central[1] * d[1];
  r.offset = r.values[n - 1] - r.slope * tm;
  r.residual_decreasing = true;
  for (std::size_t i = 0; i < n; ++i) {
    double res = r.values[i] - r.slope * radii[i] - r.offset;
    r.residuals.push_back(res);
    r.residual_sup = std::max(r.residual_sup, std::abs(res));
    double tol = 1e-10 * std::max(1.0, std::abs(r.values[i]));
    if (i > 0 && std::abs(res) > std::abs(r.residuals[i - 1]) + tol) r.residual_decreasing = false;
  }
  r.rationality = {nearest_rational(g.central[0]), nearest_rational(g.central[1])};
  r.rational = r.rationality[0].pass && r.rationality[1].pass;
  return r;
}

/// l_gamma (or log sinh l_gamma) along (l, tau) = t d on the surface with X0's boundary
inline RayFit ray_fit(const CurveOnSurface& c, const SurfacePoint<double>& X0, std::array<double, 2> d, const std::vector<double>& radii,
                      Transform tr = Transform::length) {
  LengthFunction f(c, X0, tr);
  return fit_along_ray(f, f.name(), to_string(tr), f.boundary_length(), d, radii);
}

/// fits of the new length and twist after the elementary move
inline std::array<RayFit, 2> marking_change_fit(const SurfacePoint<double>& X0, std::array<double, 2> d, const std::vector<double>& radii) {
  if (X0.kind != SurfaceKind::s11) throw PreconditionError("apl: the one-holed torus is the only supported surface");
  MarkingChange f0(X0.boundary[0], 0), f1(X0.boundary[0], 1);
  return {fit_along_ray(f0, f0.name(), "length", X0.boundary[0], d, radii), fit_along_ray(f1, f1.name(), "length", X0.boundary[0], d, radii)};
}

// ---------------------------------------------------------------- walls

/// the (l, tau) half-plane at scale t, directions theta in (theta_min, theta_max) from the l axis
struct Slice {
  double scale = 200;
  double theta_min = -M_PI / 2, theta_max = M_PI / 2;
};

struct ScanCell {
  double theta = 0;
  std::array<double, 2> g_t{}, g_2t{};
  double mismatch = 0;
  bool stable = false;
};

struct Wall {
  double theta_lo = 0, theta_hi = 0;  // bracketing stable cells
  double theta = 0;                   // direction where the adjacent linear forms agree
  bool located = false;               // theta lies in the bracket
  std::array<double, 2> normal{};     // left minus right slope, max-norm 1
  std::array<RationalApprox, 2> normal_rationality{};
  bool rational = false;
};

struct ConeCell {
  double theta_lo = 0, theta_hi = 0;
  std::array<double, 2> slope{};
  std::array<RationalApprox, 2> rationality{};
  bool zero_slope = false;
};

constexpr double kJumpTol = 1e-4;

struct WallScan {
  std::string curve;
  double boundary_length = 0;
  Slice slice;
  int grid_n = 0;
  double baseline = 0, threshold = 0;
  std::vector<ScanCell> grid;
  std::vector<Wall> walls;
  std::vector<ConeCell> cones;

  nlohmann::ordered_json to_json() const {
    nlohmann::ordered_json j;
    j["schema"] = "APL1";
    j["type"] = "wall_scan";
    j["curve"] = curve;
    j["boundary_length"] = boundary_length;
    j["slice"] = {{"scale", slice.scale}, {"theta_min", slice.theta_min}, {"theta_max", slice.theta_max}};
    j["grid_n"] = grid_n;
    j["baseline"] = baseline;
    j["threshold"] = threshold;
    j["wall_count"] = walls.size();
    auto& jw = j["walls"] = nlohmann::ordered_json::array();
    for (auto& w : walls) {
      nlohmann::ordered_json e;
      e["theta_lo"] = w.theta_lo;
      e["theta_hi"] = w.theta_hi;
      e["theta"] = w.theta;
      e["located"] = w.located;
      e["normal"] = w.normal;
      e["normal_rationality"] = {rational_json(w.normal_rationality[0]), rational_json(w.normal_rationality[1])};
      e["rational"] = w.rational;
      jw.push_back(e);
    }
    auto& jc = j["cones"] = nlohmann::ordered_json::array();
    for (auto& c : cones) {
      nlohmann::ordered_json e;
      e["theta_lo"] = c.theta_lo;
      e["theta_hi"] = c.theta_hi;
      e["slope"] = c.slope;
      e["rationality"] = {rational_json(c.rationality[0]), rational_json(c.rationality[1])};
      e["zero_slope"] = c.zero_slope;
      jc.push_back(e);
    }
    auto& jg = j["grid"] = nlohmann::ordered_json::array();
    for (auto& g : grid) jg.push_back({{"theta", g.theta}, {"g_t", g.g_t}, {"g_2t", g.g_2t}, {"mismatch", g.mismatch}, {"stable", g.stable}});
    return j;
  }
};

inline double max_diff(const std::array<double, 2>& a, const std::array<double, 2>& b) {
  return std::max(std::abs(a[0] - b[0]), std::abs(a[1] - b[1]));
}

/**
 * @brief Gradients on a grid of ray directions at scales t and 2t. Cells whose gradient moves
 * by more than 10x the median mismatch (floor 1e-6) are unstable; a wall sits between two
 * consecutive stable cells with different gradients.
 */
template <class F>
WallScan scan_walls(const F& f, const std::string& name, double l1, const Slice& slice, int grid_n, unsigned workers = 1) {
  if (grid_n < 32) throw PreconditionError("wall scan: grid_n must be at least 32");
  if (!(slice.scale > 0) || !std::isfinite(slice.scale)) throw PreconditionError("wall scan: scale must be positive");
  if (!(slice.theta_min >= -M_PI / 2) || !(slice.theta_max <= M_PI / 2) || !(slice.theta_min < slice.theta_max))
    throw PreconditionError("wall scan: theta range must lie in [-pi/2, pi/2]");
  WallScan s;
  s.curve = name;
  s.boundary_length = l1;
  s.slice = slice;
  s.grid_n = grid_n;
  s.grid.resize(grid_n);
  const double dt = (slice.theta_max - slice.theta_min) / grid_n, t = slice.scale;
  std::atomic<int> next{0};
  std::vector<std::exception_ptr> errs(std::max(1u, workers));
  auto work = [&](unsigned id) {
    try {
      for (int j; (j = next.fetch_add(1)) < grid_n;) {
        ScanCell& c = s.grid[j];
        c.theta = slice.theta_min + (j + 0.5) * dt;
        double cl = std::cos(c.theta), sn = std::sin(c.theta);
        c.g_t = gradient_at(f, t * cl, t * sn).central;
        c.g_2t = gradient_at(f, 2 * t * cl, 2 * t * sn).central;
        c.mismatch = max_diff(c.g_t, c.g_2t);
      }
    } catch (...) {
      errs[id] = std::current_exception();
    }
    mpfr_free_cache2(MPFR_FREE_LOCAL_CACHE);
  };
  std::vector<std::thread> pool;
  for (unsigned w = 1; w < std::max(1u, workers); ++w) pool.emplace_back(work, w);
  work(0);
  for (auto& th : pool) th.join();
  for (auto& e : errs)
    if (e) std::rethrow_exception(e);

  std::vector<double> m;
  for (auto& c : s.grid) m.push_back(c.mismatch);
  std::nth_element(m.begin(), m.begin() + m.size() / 2, m.end());
  s.baseline = m[m.size() / 2];
  s.threshold = std::max(10 * s.baseline, 1e-6);
  for (auto& c : s.grid) c.stable = c.mismatch <= s.threshold;

  auto open_cone = [&](const ScanCell& c) {
    ConeCell k;
    k.theta_lo = k.theta_hi = c.theta;
    k.slope = c.g_2t;
    k.rationality = {nearest_rational(c.g_2t[0]), nearest_rational(c.g_2t[1])};
    k.zero_slope = std::abs(c.g_2t[0]) <= kJumpTol && std::abs(c.g_2t[1]) <= kJumpTol;
    return k;
  };
  const ScanCell* prev = nullptr;
  for (auto& c : s.grid) {
    if (!c.stable) continue;
    if (!prev) {
      s.cones.push_back(open_cone(c));
    } else if (max_diff(prev->g_2t, c.g_2t) > kJumpTol) {
      Wall w;
      w.theta_lo = prev->theta;
      w.theta_hi = c.theta;
      std::array<double, 2> n{prev->g_2t[0] - c.g_2t[0], prev->g_2t[1] - c.g_2t[1]};
      double sc = std::max(std::abs(n[0]), std::abs(n[1]));
      w.normal = {n[0] / sc, n[1] / sc};
      // direction orthogonal to the normal with positive length component
      double vl = w.normal[1], vt = -w.normal[0];
      if (vl < 0) vl = -vl, vt = -vt;
      w.theta = std::atan2(vt, vl);
      w.located = w.theta >= w.theta_lo && w.theta <= w.theta_hi;
      w.normal_rationality = {nearest_rational(w.normal[0]), nearest_rational(w.normal[1])};
      w.rational = w.normal_rationality[0].pass && w.normal_rationality[1].pass;
      s.walls.push_back(w);
      s.cones.push_back(open_cone(c));
    } else {
      s.cones.back().theta_hi = c.theta;
    }
    prev = &c;
  }
  return s;
}

inline WallScan wall_scan(const CurveOnSurface& c, const SurfacePoint<double>& X0, const Slice& slice, int grid_n, unsigned workers = 1) {
  LengthFunction f(c, X0);
  return scan_walls(f, f.name(), f.boundary_length(), slice, grid_n, workers);
}

}  // namespace teichlab::apl
