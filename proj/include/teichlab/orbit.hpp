#pragma once

#include <algorithm>
#include <array>
#include <tuple>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <deque>
#include <exception>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <numeric>
#include <optional>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include <boost/math/quadrature/tanh_sinh.hpp>
#include <boost/math/tools/minima.hpp>
#include <boost/math/tools/roots.hpp>

#include "json.hpp"
#include "teichlab/farey.hpp"
#include "teichlab/fn_surface.hpp"
#include "teichlab/fricke.hpp"
#include "teichlab/numeric.hpp"
#include "teichlab/word.hpp"

namespace teichlab::orbit {

using hp100 = boost::multiprecision::number<boost::multiprecision::cpp_bin_float<100>>;
using hp200 = boost::multiprecision::number<boost::multiprecision::cpp_bin_float<200>>;

// ---------------------------------------------------------------- slopes and mapping classes

inline long long det(const Slope& u, const Slope& v) { return u.p * v.q - u.q * v.p; }

inline Slope neg(const Slope& s) { return {-s.p, -s.q}; }

/// the common Farey neighbour of l and r other than o
inline Slope far_neighbor(const Slope& l, const Slope& r, const Slope& o) {
  Slope s = Slope::normalized(l.p + r.p, l.q + r.q);
  Slope d = Slope::normalized(l.p - r.p, l.q - r.q);
  if (s == o) return d;
  if (d == o) return s;
  throw InvariantError("farey tree: vertex (" + std::to_string(o.p) + "," + std::to_string(o.q) + ") is not a common neighbour of the edge");
}

/// Christoffel word with |p| letters a (A when p < 0) and q letters b
inline Word slope_word(Slope s) {
  s = Slope::normalized(s.p, s.q);
  if (s.q == 0) return Word::from_letters("a");
  if (s.p == 0) return Word::from_letters("b");
  const long long P = s.p < 0 ? -s.p : s.p, Q = s.q, n = P + Q;
  std::string w;
  for (long long i = 1; i <= n; ++i) w += (i * Q) / n > ((i - 1) * Q) / n ? 'b' : (s.p < 0 ? 'A' : 'a');
  return Word::from_letters(w);
}

/** @brief An element of SL(2,Z); columns are the images of the slopes (1,0) and (0,1). */
struct SL2Z {
  long long a = 1, b = 0, c = 0, d = 1;
  SL2Z operator*(const SL2Z& o) const { return {a * o.a + b * o.c, a * o.b + b * o.d, c * o.a + d * o.c, c * o.b + d * o.d}; }
  SL2Z inverse() const { return {d, -b, -c, a}; }
  Slope apply(const Slope& s) const { return {a * s.p + b * s.q, c * s.p + d * s.q}; }
  bool operator==(const SL2Z& o) const { return a == o.a && b == o.b && c == o.c && d == o.d; }
};

/// the automorphism of <a,b> realizing M, from S: a -> b, b -> A and T: a -> a, b -> ab
inline Word apply_mapping_class(const SL2Z& M, const Word& w) {
  if (M.a * M.d - M.b * M.c != 1) throw PreconditionError("mapping class: determinant must be 1");
  long long a = M.a, b = M.b, c = M.c, d = M.d;
  std::vector<std::pair<char, long long>> ops;  // M = ops[0] ops[1] ...
  while (c != 0) {
    long long n = a / c;
    if ((a % c != 0) && ((a < 0) != (c < 0))) --n;
    a -= n * c;
    b -= n * d;
    ops.push_back({'T', n});
    long long na = c, nb = d, nc = -a, nd = -b;
    a = na, b = nb, c = nc, d = nd;
    ops.push_back({'S', 0});
  }
  if (a == 1) {
    ops.push_back({'T', b});
  } else {
    ops.push_back({'S', 0});
    ops.push_back({'S', 0});
    ops.push_back({'T', -b});
  }
  Word r = w;
  const Word sa = Word::from_letters("b"), sb = Word::from_letters("A"), ta = Word::from_letters("a");
  for (auto it = ops.rbegin(); it != ops.rend(); ++it) {
    if (it->first == 'S') {
      r = r.substitute(sa, sb);
    } else if (it->second != 0) {
      long long n = it->second;
      r = r.substitute(ta, Word::from_letters(std::string(std::size_t(n < 0 ? -n : n), n > 0 ? 'a' : 'A') + "b"));
    }
  }
  return r;
}

// ---------------------------------------------------------------- the Farey tree from its sink

template <class T>
struct Vtx {
  Slope s;
  T t;
};

template <class T>
struct Sink {
  std::array<Vtx<T>, 3> v;
  long flips = 0;
};

/// positive traces of a hyperbolic one-holed torus; an even number of signs may be flipped
template <class T>
FrickeTriple<T> hyperbolic_triple(const FrickeTriple<T>& X) {
  using std::abs;
  int negs = int(X.x < T(0)) + int(X.y < T(0)) + int(X.z < T(0));
  if (negs % 2) throw PreconditionError("orbit: an odd number of negative traces is not a Fuchsian torus");
  FrickeTriple<T> t{abs(X.x), abs(X.y), abs(X.z)};
  if (!(t.x > T(2) && t.y > T(2) && t.z > T(2))) throw PreconditionError("orbit: basis traces must exceed 2");
  T scale = t.x * t.x + t.y * t.y + t.z * t.z;
  if (t.kappa() > T(-2) + T(1e-9) * scale) throw PreconditionError("orbit: kappa > -2, not a cusped or bordered hyperbolic torus");
  return t;
}

/// boundary length from kappa = -2 cosh(l1/2); 0 at a cusp
inline double boundary_length(const FrickeTriple<double>& X) {
  double k = -hyperbolic_triple(X).kappa() / 2;
  return k <= 1 ? 0.0 : 2 * std::acosh(k);
}

/// flips the largest trace while that lowers it; the result holds the three shortest simple curves
template <class T>
Sink<T> reduce_to_sink(const FrickeTriple<T>& X, long max_flips = 10000000) {
  auto t = hyperbolic_triple(X);
  Sink<T> s{{Vtx<T>{{1, 0}, t.x}, Vtx<T>{{0, 1}, t.y}, Vtx<T>{{1, 1}, t.z}}, 0};
  for (;;) {
    int i = 0;
    for (int k = 1; k < 3; ++k)
      if (s.v[k].t > s.v[i].t) i = k;
    const auto& p = s.v[(i + 1) % 3];
    const auto& q = s.v[(i + 2) % 3];
    if (T(2) * s.v[i].t <= p.t * q.t) break;
    if (++s.flips > max_flips) throw ConditionError("reduce_to_sink: flip budget exhausted");
    s.v[i] = {far_neighbor(p.s, q.s, s.v[i].s), T(p.t * q.t - s.v[i].t)};
  }
  return s;
}

/** @brief A Farey edge {l, r}; o is the common neighbour on the side of the sink. */
template <class T>
struct FEdge {
  Vtx<T> l, r, o;
  int depth = 0;
};

template <class T>
Vtx<T> far_vertex(const FEdge<T>& e) {
  Vtx<T> m{far_neighbor(e.l.s, e.r.s, e.o.s), T(e.l.t * e.r.t - e.o.t)};
  T big = e.l.t > e.r.t ? e.l.t : e.r.t;
  if (m.t < big * (T(1) - T(1e3) * std::numeric_limits<T>::epsilon()))
    throw InvariantError("farey tree: trace decreased away from the sink at slope (" + std::to_string(m.s.p) + "," + std::to_string(m.s.q) + ")");
  return m;
}

template <class T>
std::vector<FEdge<T>> sink_edges(const Sink<T>& s) {
  return {{s.v[0], s.v[1], s.v[2], 0}, {s.v[1], s.v[2], s.v[0], 0}, {s.v[2], s.v[0], s.v[1], 0}};
}

inline constexpr std::size_t kSplitEdges = 64;

/**
 * @brief Visits every Farey edge once, moving away from the sink. f(edge, far vertex, acc)
 * returns whether to continue past the far vertex. Subtrees run on `workers` threads; the
 * split does not depend on the worker count and accumulators merge in a fixed order.
 */
template <class Acc, class T, class F>
Acc traverse_edges(const Sink<T>& sink, F&& f, unsigned workers = 1) {
  Acc top{};
  std::deque<FEdge<T>> q;
  for (auto& e : sink_edges(sink)) q.push_back(e);
  while (!q.empty() && q.size() < kSplitEdges) {
    FEdge<T> e = q.front();
    q.pop_front();
    Vtx<T> m = far_vertex(e);
    if (f(e, m, top)) {
      q.push_back({e.l, m, e.r, e.depth + 1});
      q.push_back({m, e.r, e.l, e.depth + 1});
    }
  }
  std::vector<FEdge<T>> tasks(q.begin(), q.end());
  std::vector<Acc> parts(tasks.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr err;
  std::mutex em;
  auto work = [&] {
    try {
      for (std::size_t i; (i = next.fetch_add(1)) < tasks.size();) {
        std::vector<FEdge<T>> st{tasks[i]};
        while (!st.empty()) {
          FEdge<T> e = std::move(st.back());
          st.pop_back();
          Vtx<T> m = far_vertex(e);
          if (f(e, m, parts[i])) {
            st.push_back({m, e.r, e.l, e.depth + 1});
            st.push_back({e.l, m, e.r, e.depth + 1});
          }
        }
      }
    } catch (...) {
      std::lock_guard<std::mutex> lk(em);
      if (!err) err = std::current_exception();
      next = tasks.size();
    }
  };
  std::vector<std::thread> pool;
  for (unsigned w = 1; w < std::max(1u, workers); ++w) pool.emplace_back(work);
  work();
  for (auto& th : pool) th.join();
  if (err) std::rethrow_exception(err);
  for (auto& p : parts) top.merge(p);
  return top;
}

/** @brief A marking (a, b) -> slopes with det 1, and its trace triple (tr a, tr b, tr ab). */
template <class T>
struct Marking {
  Slope a, b;
  FrickeTriple<T> t;
  SL2Z matrix() const { return {a.p, b.p, a.q, b.q}; }
};

/// the two markings carried by the edge {l, r} with common neighbours n and m
template <class T>
std::array<Marking<T>, 2> edge_markings(const Vtx<T>& l, const Vtx<T>& r, const Vtx<T>& n, const Vtx<T>& m) {
  Slope rr = det(l.s, r.s) == 1 ? r.s : neg(r.s);
  Slope sum = Slope::normalized(l.s.p + rr.p, l.s.q + rr.q);
  const Vtx<T>& n1 = sum == n.s ? n : m;
  const Vtx<T>& n2 = sum == n.s ? m : n;
  if (!(sum == n1.s)) throw InvariantError("edge_markings: neighbours do not match the edge");
  return {Marking<T>{l.s, rr, {l.t, r.t, n1.t}}, Marking<T>{rr, neg(l.s), {r.t, l.t, n2.t}}};
}

/// a marking with first curve v, given a neighbour w of v and a common neighbour c of both
template <class T>
Marking<T> vertex_marking(const Vtx<T>& v, const Vtx<T>& w, const Vtx<T>& c) {
  Vtx<T> other{far_neighbor(v.s, w.s, c.s), T(v.t * w.t - c.t)};
  return edge_markings(v, w, c, other)[0];
}

// ---------------------------------------------------------------- traces of slopes

/// trace of the simple curve of slope s at X; seeds computed in extended precision when large
inline mp_float farey_trace_mp(const FrickeTriple<double>& X, Slope s) {
  auto t = hyperbolic_triple(X).cast<mp_float>();
  FareySeeds<mp_float> sd{t.x, t.y, t.z, mp_float(t.x * t.y - t.z), {0, 0, 0}};
  return farey_trace(sd, s);
}

inline double farey_trace(const FrickeTriple<double>& X, Slope s) {
  auto t = hyperbolic_triple(X);
  if (std::max({t.x, t.y, t.z}) <= 1e3) {
    FareySeeds<double> sd{t.x, t.y, t.z, t.x * t.y - t.z, {0, 0, 0}};
    double v = teichlab::farey_trace(sd, s);
    if (std::isfinite(v) && v < 1e250) return v;
  }
  mp_float v = farey_trace_mp(X, s);
  if (v > mp_float(std::numeric_limits<double>::max())) throw OverflowError("farey_trace: trace exceeds double range; use farey_trace_mp");
  return static_cast<double>(v);
}

// ---------------------------------------------------------------- simple curves

inline double trace_bound(double L) { return 2 * std::cosh(L / 2); }

struct CountAcc {
  std::uint64_t n = 0;
  void merge(const CountAcc& o) { n += o.n; }
};

/// systole of X
inline double systole(const FrickeTriple<double>& X) {
  auto s = reduce_to_sink(X);
  return length_trace(std::min({s.v[0].t, s.v[1].t, s.v[2].t}));
}

/// number of simple closed curves of length <= L
inline std::uint64_t count_simple(const FrickeTriple<double>& X, double L, unsigned workers = 1) {
  auto sink = reduce_to_sink(X);
  double sys = length_trace(std::min({sink.v[0].t, sink.v[1].t, sink.v[2].t}));
  if (!(L >= sys)) throw PreconditionError("count_simple: L is below the systole " + num::fmt17(sys));
  const double B = trace_bound(L);
  std::uint64_t root = 0;
  for (auto& v : sink.v) root += v.t <= B;
  auto acc = traverse_edges<CountAcc>(
      sink,
      [B](const FEdge<double>&, const Vtx<double>& m, CountAcc& a) {
        if (m.t > B) return false;
        ++a.n;
        return true;
      },
      workers);
  return root + acc.n;
}

/// calls f(slope, length, marking with that slope first) for every simple curve of length <= L, serially
template <class F>
void for_each_simple(const FrickeTriple<double>& X, double L, F&& f) {
  auto sink = reduce_to_sink(X);
  const double B = trace_bound(L);
  for (int i = 0; i < 3; ++i) {
    const auto& v = sink.v[i];
    if (v.t <= B) f(v.s, length_trace(v.t), vertex_marking(v, sink.v[(i + 1) % 3], sink.v[(i + 2) % 3]));
  }
  struct None {
    void merge(const None&) {}
  };
  traverse_edges<None>(sink, [&](const FEdge<double>& e, const Vtx<double>& m, None&) {
    if (m.t > B) return false;
    f(m.s, length_trace(m.t), vertex_marking(m, e.l, e.r));
    return true;
  });
}

/// integral multicurves k * gamma with k * l_gamma <= L
inline std::uint64_t count_multicurves(const FrickeTriple<double>& X, double L) {
  std::uint64_t n = 0;
  for_each_simple(X, L, [&](Slope, double l, const Marking<double>&) { n += std::uint64_t(std::floor(L / l)); });
  return n;
}

// ---------------------------------------------------------------- Thurston volume

struct ThurstonBall {
  double B = 0;       // inscribed polygon area
  double error = 0;   // gap to the circumscribed polygon; B <= true value <= B + error
  long long max_denominator = 0;
  std::uint64_t sectors = 0;
};

namespace detail {

struct BallSector {
  double tol_per_area;
  double scale;
  int max_level;
  ThurstonBall* out;
  std::vector<std::array<double, 2>> pts;  // boundary points in angular order

  double sector_area(double lp, double lq) const { return scale * scale / (2 * lp * lq); }

  double run(Slope P, double tP, Slope Q, double tQ, double tD, int level) {
    Slope W{P.p + Q.p, P.q + Q.q};
    double tW = tP * tQ - tD;
    if (tW < std::max(tP, tQ) * (1 - 1e-12)) throw InvariantError("thurston_ball_B: trace decreased inside a sector");
    double lP = length_trace(tP), lQ = length_trace(tQ), lW = length_trace(tW);
    double a0 = sector_area(lP, lQ);
    double a1 = sector_area(lP, lW) + sector_area(lW, lQ);
    double delta = a1 - a0;
    if (delta < -1e-12 * a0) throw InvariantError("thurston_ball_B: unit ball is not convex");
    out->max_denominator = std::max({out->max_denominator, std::abs(W.p), std::abs(W.q)});
    if (level >= 3 && delta <= tol_per_area * a0) {
      ++out->sectors;
      pts.push_back({scale * double(P.p) / lP, scale * double(P.q) / lP});
      pts.push_back({scale * double(W.p) / lW, scale * double(W.q) / lW});
      return a1;
    }
    if (level >= max_level || std::max(std::abs(W.p), std::abs(W.q)) > 1000000000LL)
      throw ConditionError("thurston_ball_B: no convergence within the depth cap; achieved sector change " + num::fmt17(delta));
    return run(P, tP, W, tW, tQ, level + 1) + run(W, tW, Q, tQ, tP, level + 1);
  }
};

}  // namespace detail

/**
 * @brief B(X): area of {l <= 1} in ML = R^2 / +-1, i.e. half the area of the symmetric unit ball.
 * Inscribed polygons through (p,q)/l(p,q) are refined along the Farey tree until every
 * sector changes by less than tol times its share of the area.
 */
inline ThurstonBall thurston_ball_B(const FrickeTriple<double>& X, double tol, double scale = 1.0) {
  if (!(tol > 0)) throw PreconditionError("thurston_ball_B: tol must be positive");
  auto sink = reduce_to_sink(X);
  // the six vectors +-u, +-v, +-w in angular order; three consecutive sectors span a half plane
  std::vector<std::pair<Slope, double>> vecs;
  for (auto& v : sink.v) {
    vecs.push_back({v.s, v.t});
    vecs.push_back({neg(v.s), v.t});
  }
  std::sort(vecs.begin(), vecs.end(), [](const auto& x, const auto& y) {
    return std::atan2(double(x.first.q), double(x.first.p)) < std::atan2(double(y.first.q), double(y.first.p));
  });
  ThurstonBall out;
  double area0 = 0;
  for (int i = 0; i < 3; ++i) area0 += scale * scale / (2 * length_trace(vecs[i].second) * length_trace(vecs[i + 1].second));
  detail::BallSector sec{tol / area0, scale, 200, &out};
  double area = 0;
  for (int i = 0; i < 3; ++i) {
    const auto& P = vecs[i];
    const auto& Q = vecs[i + 1];
    Slope d = Slope::normalized(P.first.p - Q.first.p, P.first.q - Q.first.q);
    double tD = -1;
    for (auto& v : sink.v)
      if (v.s == d) tD = v.t;
    if (tD < 0) throw InvariantError("thurston_ball_B: consecutive sink vectors are not a Farey pair");
    area += sec.run(P.first, P.second, Q.first, Q.second, tD, 0);
  }
  out.B = area;
  // convexity: each arc lies in the triangle cut off by its chord and the two neighbouring chords
  auto& v = sec.pts;
  const std::size_t h = v.size();
  for (std::size_t i = 0; i < h; ++i) v.push_back({-v[i][0], -v[i][1]});
  const std::size_t n = v.size();
  auto cross = [](std::array<double, 2> a, std::array<double, 2> b) { return a[0] * b[1] - a[1] * b[0]; };
  auto sub = [](std::array<double, 2> a, std::array<double, 2> b) { return std::array<double, 2>{a[0] - b[0], a[1] - b[1]}; };
  double gap = 0;
  for (std::size_t i = 0; i < n; ++i) {
    auto a0 = v[(i + n - 1) % n], a1 = v[i], b1 = v[(i + 1) % n], b0 = v[(i + 2) % n];
    auto d1 = sub(a1, a0), d2 = sub(b1, b0), c = sub(b1, a1);
    double den = cross(d1, d2);
    double s = cross(c, d2) / den;
    auto norm = [](std::array<double, 2> a) { return std::hypot(a[0], a[1]); };
    if (!(s >= 0) || !std::isfinite(s)) {
      // rounding on nearly collinear points: the arc is the chord
      if (std::abs(cross(d1, c)) <= 1e-9 * norm(d1) * norm(c) || std::abs(cross(c, d2)) <= 1e-9 * norm(c) * norm(d2)) continue;
      throw ConditionError("thurston_ball_B: polygon too coarse for an outer bound");
    }
    std::array<double, 2> w{a1[0] + s * d1[0], a1[1] + s * d1[1]};
    gap += 0.5 * std::abs(cross(c, sub(w, a1)));
  }
  out.error = gap / 2;
  return out;
}

// ---------------------------------------------------------------- words

/// primitive root of a cyclic word and its exponent
inline std::pair<Word, int> primitive_root(const Word& w) {
  std::string s = w.cyclically_reduced().str();
  const std::size_t n = s.size();
  for (std::size_t d = 1; d <= n; ++d) {
    if (n % d) continue;
    bool ok = true;
    for (std::size_t i = d; i < n && ok; ++i) ok = s[i] == s[i - d];
    if (ok) return {Word::from_letters(s.substr(0, d)), int(n / d)};
  }
  return {Word::from_letters(s), 1};
}

/// l_gamma at the cusped point (l, tau) with a running error check; precision rises until 1e-13 relative
inline double word_length_at(const TracePlan& plan, double l, double tau, double l1 = 0) {
  auto attempt = [&](auto tag) -> std::optional<double> {
    using T = decltype(tag);
    auto X = SurfacePoint<T>::s11(T(l1), T(l), T(tau));
    auto t = fn::fricke_triple(X);
    auto [v, e] = plan.eval_with_error(t, T(16) * std::numeric_limits<T>::epsilon());
    using std::abs;
    T a = abs(v);
    if (!(e <= T(1e-13) * a)) return std::nullopt;
    if (a < T(2)) return a > T(2) - T(1e-9) ? std::optional<double>(0.0) : std::nullopt;
    return num::to_double(length_trace(a));
  };
  if (auto r = attempt(double{})) return *r;
  if (auto r = attempt(mp_float{})) return *r;
  if (auto r = attempt(hp100{})) return *r;
  if (auto r = attempt(hp200{})) return *r;
  throw ConditionError("word_length_at: trace cancellation exceeds 200 digits at l = " + num::fmt17(l) + ", tau = " + num::fmt17(tau));
}

/**
 * @brief Geometric intersection with the curve a, read off the twist asymptotics
 * l_gamma(l, tau) = i |tau| + O(1).
 */
inline int intersection_with_a(const Word& w) {
  auto plan = TracePlan::build(w);
  const double l = 1.0;
  double s1 = (word_length_at(plan, l, 80.0) - word_length_at(plan, l, 40.0)) / 40.0;
  double s2 = (word_length_at(plan, l, -80.0) - word_length_at(plan, l, -40.0)) / 40.0;
  double r = std::round(s1);
  if (std::abs(s1 - r) > 1e-6 || std::abs(s2 - r) > 1e-6)
    throw ConditionError("intersection_with_a: twist asymptotics did not settle for " + w.str());
  return int(r);
}

/// i(gamma, a), i(gamma, b), i(gamma, ab)
inline std::array<int, 3> basis_intersections(const Word& w) {
  // M maps a to the basis curve; i(gamma, M a) = i(M^-1 gamma, a)
  const SL2Z toB{0, -1, 1, 0}, toAB{1, 0, 1, 1};
  return {intersection_with_a(w), intersection_with_a(apply_mapping_class(toB.inverse(), w)),
          intersection_with_a(apply_mapping_class(toAB.inverse(), w))};
}

enum class CurveKind { simple, pants, filling };

inline std::string to_string(CurveKind k) { return k == CurveKind::simple ? "simple" : k == CurveKind::pants ? "pants" : "filling"; }

/** @brief Orbit data of a closed curve on the one-holed torus. */
struct WordInfo {
  CurveKind kind = CurveKind::filling;
  Word root;                      // primitive root
  int power = 1;                  // the curve is root^power
  Slope slope{1, 0};              // simple: its slope; pants: the disjoint simple curve
  SL2Z to_a;                      // pants: maps the disjoint curve to a
  Word in_complement_of_a;        // pants: the root moved off a
  std::array<int, 3> i_basis{};   // i(root, a), i(root, b), i(root, ab)
  int pruning_constant = 0;       // l_beta <= c l_gamma for every basis curve beta
  int stab_sl = 0;                // filling: |Stab(root)| in SL(2,Z)
  int pants_multiplicity = 0;     // pants: orbit curves in the complement of one simple curve
};

namespace detail {

inline bool twist_invariant_about(const Word& w, const Slope& d, SL2Z& to_a, Word& moved) {
  // M sends a to d; then M^-1 w is invariant under the twist about a
  Slope dd = Slope::normalized(d.p, d.q);
  long long x = 0, y = 0;
  // solve dd.p * y - dd.q * x = 1 for the second column
  long long g = 0;
  {
    long long old_r = dd.p, r = dd.q, old_s = 1, s = 0, old_t = 0, t = 1;
    while (r != 0) {
      long long qt = old_r / r;
      long long tmp = old_r - qt * r;
      old_r = r, r = tmp;
      tmp = old_s - qt * s, old_s = s, s = tmp;
      tmp = old_t - qt * t, old_t = t, t = tmp;
    }
    g = old_r;
    // old_s * p + old_t * q = g = +-1
    x = -old_t * g;
    y = old_s * g;
  }
  if (g != 1 && g != -1) return false;
  SL2Z M{dd.p, x, dd.q, y};
  if (M.a * M.d - M.b * M.c != 1) return false;
  Word v = apply_mapping_class(M.inverse(), w);
  Word tv = apply_mapping_class(SL2Z{1, 1, 0, 1}, v);
  if (canonical_curve(tv) != canonical_curve(v)) return false;
  to_a = M.inverse();
  moved = v.cyclically_reduced();
  return true;
}

}  // namespace detail

inline std::uint64_t count_filling_markings_plain(const FrickeTriple<double>& X, const WordInfo& info, double L, std::vector<SL2Z>* hits);

/// classifies a word and computes its orbit constants
inline WordInfo classify_word(const Word& w) {
  if (w.cyclically_reduced().empty()) throw PreconditionError("orbit: empty word");
  WordInfo info;
  std::tie(info.root, info.power) = primitive_root(w);
  if (canonical_curve(info.root) == canonical_curve(Word::from_letters("abAB")))
    throw PreconditionError("orbit: the word is peripheral (a power of the commutator)");
  auto [p, q] = info.root.homology();
  if (std::gcd(p < 0 ? -p : p, q < 0 ? -q : q) == 1) {
    Slope s = Slope::normalized(p, q);
    if (canonical_curve(slope_word(s)) == canonical_curve(info.root)) {
      info.kind = CurveKind::simple;
      info.slope = s;
      return info;
    }
  }
  // a non-simple curve missing a simple curve d has homology in the span of d
  std::vector<Slope> cand;
  if (p != 0 || q != 0) {
    long long g = std::gcd(p < 0 ? -p : p, q < 0 ? -q : q);
    cand.push_back(Slope::normalized(p / g, q / g));
  } else {
    long long n = (long long)info.root.size();
    for (long long qq = 0; qq <= n; ++qq)
      for (long long pp = -n; pp <= n; ++pp)
        if ((qq > 0 || pp > 0) && std::gcd(pp < 0 ? -pp : pp, qq) == 1) cand.push_back(Slope::normalized(pp, qq));
  }
  for (const auto& d : cand) {
    SL2Z M;
    Word moved;
    if (detail::twist_invariant_about(info.root, d, M, moved)) {
      info.kind = CurveKind::pants;
      info.slope = d;
      info.to_a = M;
      info.in_complement_of_a = moved;
      Word iota = apply_mapping_class(SL2Z{-1, 0, 0, -1}, info.root);
      info.pants_multiplicity = canonical_curve(iota) == canonical_curve(info.root) ? 1 : 2;
      return info;
    }
  }
  info.kind = CurveKind::filling;
  info.i_basis = basis_intersections(info.root);
  info.pruning_constant = 2 * std::max({info.i_basis[0], info.i_basis[1], info.i_basis[2]});
  if (info.pruning_constant <= 0) throw ConditionError("classify_word: a filling curve must meet the basis");
  // stabilizer: at a generic point, markings with the same gamma-length contain the stabilizer
  FrickeTriple<double> G = fn::fricke_triple(SurfacePoint<double>::s11(0.0, 1.1, 0.37));
  double lg = word_length_at(TracePlan::build(info.root), 1.1, 0.37);
  std::vector<SL2Z> hits;
  count_filling_markings_plain(G, info, lg * (1 + 1e-9) + 1e-9, &hits);
  const std::string me = canonical_curve(info.root);
  for (const auto& M : hits)
    for (const SL2Z& s : {M, SL2Z{-M.a, -M.b, -M.c, -M.d}})
      if (canonical_curve(apply_mapping_class(s, info.root)) == me) ++info.stab_sl;
  if (info.stab_sl < 1) throw InvariantError("classify_word: the identity is missing from the stabilizer candidates");
  return info;
}

// ---------------------------------------------------------------- orbit counting

struct OrbitOptions {
  unsigned workers = 1;
  bool debug_expand = false;              // evaluate one level past every pruned vertex
  bool collect_twist_ranges = false;      // per-first-curve counts for the twist-range measurement
  int min_precision = 0;                  // first rung of the precision ladder (0 = double)
  std::uint64_t max_edges = 50000000;     // safety cap; exceeding it means the curve is not filling
};

inline constexpr const char* kPrecisionNames[] = {"double", "50 digits", "100 digits", "200 digits", "400 digits", "800 digits"};

struct WordCount {
  std::uint64_t psl = 0;                 // markings (orbit points) with l_gamma <= L
  std::uint64_t escalated = 0;           // comparisons settled above double precision
  std::uint64_t violations = 0;          // debug expansions that found a counted marking past the cut
  std::uint64_t debug_checked = 0;
  std::uint64_t evaluated = 0;
  std::uint64_t edges = 0;
  int precision = 0;                     // highest ladder rung used
  std::map<Slope, std::uint64_t> per_first;  // markings counted, by first basis curve
  std::vector<SL2Z> hits;
  void merge(const WordCount& o) {
    psl += o.psl;
    escalated += o.escalated;
    violations += o.violations;
    debug_checked += o.debug_checked;
    evaluated += o.evaluated;
    edges += o.edges;
    precision = std::max(precision, o.precision);
    for (auto& [k, v] : o.per_first) per_first[k] += v;
    hits.insert(hits.end(), o.hits.begin(), o.hits.end());
  }
};

namespace detail {

using hp400 = boost::multiprecision::number<boost::multiprecision::cpp_bin_float<400>>;
using hp800 = boost::multiprecision::number<boost::multiprecision::cpp_bin_float<800>>;

/// sink triangle as a basis (u, v), det(u, v) = 1, with seeds for the Farey recursion in that basis
template <class T>
struct SinkBasis {
  Slope u, v;
  T tu, tv, tplus, tminus;

  static SinkBasis make(const FrickeTriple<double>& X) {
    auto s = reduce_to_sink(X.cast<T>());
    SinkBasis b{s.v[0].s, s.v[1].s, s.v[0].t, s.v[1].t, T(0), T(0)};
    if (det(b.u, b.v) != 1) b.v = neg(b.v);
    T other = s.v[0].t * s.v[1].t - s.v[2].t;
    bool plus_is_w = Slope::normalized(b.u.p + b.v.p, b.u.q + b.v.q) == s.v[2].s;
    b.tplus = plus_is_w ? s.v[2].t : other;
    b.tminus = plus_is_w ? other : s.v[2].t;
    return b;
  }

  /// trace of a slope and the number of recursion steps
  std::pair<T, long long> trace(const Slope& s) const {
    long long al = s.p * v.q - s.q * v.p, be = u.p * s.q - u.q * s.p;
    FareySeeds<T> sd{tu, tv, tplus, tminus, {}};
    return {teichlab::farey_trace(sd, Slope{al, be}), std::abs(al) + std::abs(be)};
  }
};

enum class Verdict { in, out, undecided };

template <class T>
Verdict compare(const TracePlan& plan, const FrickeTriple<T>& t, long long depth, double L) {
  using std::abs;
  auto [v, e] = plan.eval_with_error(t, T(32) * std::numeric_limits<T>::epsilon() * T(depth + 4));
  T a = abs(v), B = T(2) * cosh(T(L) / 2);
  if (a + e <= B) return Verdict::in;
  if (a - e > B) return Verdict::out;
  return Verdict::undecided;
}

/**
 * @brief Decides l_gamma <= L at markings. Double evaluation on the tree triple first; undecided
 * markings are recomputed from the sink basis in 50 to 800 digits.
 */
class MarkingJudge {
 public:
  MarkingJudge(const FrickeTriple<double>& X, const TracePlan& plan, double L, int min_precision)
      : X_(X), plan_(plan), L_(L), min_(min_precision) {}

  /// verdict and the ladder rung that settled it
  std::pair<bool, int> decide(const Marking<double>& mk, int depth) {
    if (min_ == 0) {
      Verdict v = compare(plan_, mk.t, depth, L_);
      if (v != Verdict::undecided) return {v == Verdict::in, 0};
    }
    for (int k = std::max(1, min_); k <= 5; ++k) {
      Verdict v = k == 1 ? at<mp_float>(mk, 0) : k == 2 ? at<hp100>(mk, 1) : k == 3 ? at<hp200>(mk, 2) : k == 4 ? at<hp400>(mk, 3) : at<hp800>(mk, 4);
      if (v != Verdict::undecided) return {v == Verdict::in, k};
    }
    throw ConditionError("count_orbit_word: comparison undecided at 800 digits for the marking (" + std::to_string(mk.a.p) + "," +
                         std::to_string(mk.a.q) + "), (" + std::to_string(mk.b.p) + "," + std::to_string(mk.b.q) + ")");
  }

 private:
  template <class T>
  Verdict at(const Marking<double>& mk, int slot) {
    std::call_once(once_[slot], [&] { std::get<std::optional<SinkBasis<T>>>(bases_) = SinkBasis<T>::make(X_); });
    const auto& sb = *std::get<std::optional<SinkBasis<T>>>(bases_);
    auto [x, dx] = sb.trace(mk.a);
    auto [y, dy] = sb.trace(mk.b);
    auto [z, dz] = sb.trace(Slope{mk.a.p + mk.b.p, mk.a.q + mk.b.q});
    return compare(plan_, FrickeTriple<T>{x, y, z}, std::max({dx, dy, dz}), L_);
  }

  FrickeTriple<double> X_;
  const TracePlan& plan_;
  double L_;
  int min_;
  std::array<std::once_flag, 5> once_;
  std::tuple<std::optional<SinkBasis<mp_float>>, std::optional<SinkBasis<hp100>>, std::optional<SinkBasis<hp200>>,
             std::optional<SinkBasis<hp400>>, std::optional<SinkBasis<hp800>>>
      bases_;
};

/**
 * @brief Marking search for a filling curve. A marking (a', b') is evaluated only when
 * l(a') <= 2 i(gamma,a) L, l(b') <= 2 i(gamma,b) L and l(a'b') <= 2 i(gamma,ab) L; subtrees past
 * a vertex longer than c L are cut.
 */
inline WordCount count_filling(const FrickeTriple<double>& X, const WordInfo& info, double L, const OrbitOptions& opt, bool keep_hits) {
  auto sink = reduce_to_sink(X);
  const auto plan = TracePlan::build(info.root);
  MarkingJudge judge(X, plan, L, opt.min_precision);
  const double cut = trace_bound(info.pruning_constant * L);
  const std::array<double, 3> role_cut{trace_bound(2.0 * info.i_basis[0] * L), trace_bound(2.0 * info.i_basis[1] * L),
                                       trace_bound(2.0 * info.i_basis[2] * L)};
  auto within = [&](const Marking<double>& mk) { return mk.t.x <= role_cut[0] && mk.t.y <= role_cut[1] && mk.t.z <= role_cut[2]; };
  auto f = [&](const FEdge<double>& e, const Vtx<double>& m, WordCount& a) {
    if (++a.edges > opt.max_edges) throw ConditionError("count_orbit_word: edge cap reached; the curve does not look filling");
    for (const auto& mk : edge_markings(e.l, e.r, e.o, m)) {
      if (!within(mk)) continue;
      ++a.evaluated;
      auto [in, rung] = judge.decide(mk, e.depth);
      a.precision = std::max(a.precision, rung);
      a.escalated += rung > 0;
      if (!in) continue;
      ++a.psl;
      if (opt.collect_twist_ranges) ++a.per_first[Slope::normalized(mk.a.p, mk.a.q)];
      if (keep_hits) a.hits.push_back(mk.matrix());
    }
    if (m.t <= cut) return true;
    if (opt.debug_expand) {
      for (const FEdge<double>& c : {FEdge<double>{e.l, m, e.r, e.depth + 1}, FEdge<double>{m, e.r, e.l, e.depth + 1}}) {
        Vtx<double> mm = far_vertex(c);
        for (const auto& mk : edge_markings(c.l, c.r, c.o, mm)) {
          ++a.debug_checked;
          auto [in, rung] = judge.decide(mk, c.depth);
          a.precision = std::max(a.precision, rung);
          a.violations += in;
        }
      }
    }
    return false;
  };
  return traverse_edges<WordCount>(sink, f, keep_hits ? 1u : opt.workers);
}

}  // namespace detail

inline std::uint64_t count_filling_markings_plain(const FrickeTriple<double>& X, const WordInfo& info, double L, std::vector<SL2Z>* hits) {
  auto r = detail::count_filling(X, info, L, OrbitOptions{}, hits != nullptr);
  if (hits) *hits = r.hits;
  return r.psl;
}

/** @brief Orbit count of one word at one length, with the bookkeeping of both conventions. */
struct OrbitCount {
  double L = 0;
  std::uint64_t a1 = 0;                 // distinct curves in the orbit
  std::optional<std::uint64_t> a3;      // mapping classes g with l(g gamma) <= L; infinite unless filling
  std::uint64_t psl_markings = 0;
  std::uint64_t violations = 0;
  std::uint64_t debug_checked = 0;
  std::uint64_t evaluated = 0;
  std::uint64_t escalated = 0;
  std::string precision = "double";
  std::map<Slope, std::uint64_t> per_first;
};

namespace detail {

/// l_gamma as a function of the length of the disjoint simple curve; the largest length with l_gamma <= L
inline double pants_cut(const WordInfo& info, double L, double l1) {
  auto plan = TracePlan::build(info.in_complement_of_a);
  auto f = [&](double lam) { return word_length_at(plan, lam, 0.0, l1); };
  const double h = 0.02;
  double last_in = -1, lam = h;
  double prev = f(lam);
  double end = std::max(4 * L, 40.0);
  for (; lam <= end; lam += h) {
    double v = f(lam);
    if (v <= L) last_in = lam;
    if (lam > last_in + 1 && v > L && v < prev) throw ConditionError("count_orbit_word: curve length is not increasing in the disjoint curve length");
    prev = v;
  }
  if (f(end) <= L) throw ConditionError("count_orbit_word: curve length does not exceed L on the scanned range");
  return std::max(last_in, 0.0) + 2 * h;
}

}  // namespace detail

/**
 * @brief s_X(L, gamma). Simple curves are counted on the Farey tree; curves missing a simple
 * curve are counted through that curve; filling curves by the marking search with the cut
 * l_basis <= c L, c = 2 max i(gamma, basis).
 */
inline OrbitCount count_orbit_word(const FrickeTriple<double>& X, const Word& w, double L, const OrbitOptions& opt = {},
                                   const WordInfo* known = nullptr) {
  if (!(L > 0) || !std::isfinite(L)) throw PreconditionError("count_orbit_word: L must be positive and finite");
  WordInfo info = known ? *known : classify_word(w);
  OrbitCount out;
  out.L = L;
  const double Lr = L / info.power;
  if (info.kind == CurveKind::simple) {
    out.a1 = Lr >= systole(X) ? count_simple(X, Lr, opt.workers) : 0;
    return out;
  }
  if (info.kind == CurveKind::pants) {
    const double l1 = boundary_length(X);
    const double cut = trace_bound(detail::pants_cut(info, Lr, l1));
    const double B = trace_bound(Lr);
    auto plan = TracePlan::build(info.in_complement_of_a);
    auto sink = reduce_to_sink(X);
    std::uint64_t n = 0, undecided = 0;
    auto eval = [&](const Marking<double>& mk) {
      auto [v, e] = plan.eval_with_error(mk.t, 1e-13);
      if (std::abs(v) + e <= B) ++n;
      else if (!(std::abs(v) - e > B)) ++undecided;
    };
    for (int i = 0; i < 3; ++i)
      if (sink.v[i].t <= cut) eval(vertex_marking(sink.v[i], sink.v[(i + 1) % 3], sink.v[(i + 2) % 3]));
    struct None {
      void merge(const None&) {}
    };
    traverse_edges<None>(sink, [&](const FEdge<double>& e, const Vtx<double>& m, None&) {
      if (m.t > cut) return false;
      eval(vertex_marking(m, e.l, e.r));
      return true;
    });
    if (undecided) throw ConditionError("count_orbit_word: undecided comparisons on the disjoint-curve path");
    out.a1 = n * std::uint64_t(info.pants_multiplicity);
    return out;
  }
  WordCount r = detail::count_filling(X, info, Lr, opt, false);
  out.precision = kPrecisionNames[r.precision];
  out.escalated = r.escalated;
  if (r.violations) throw InvariantError("count_orbit_word: " + std::to_string(r.violations) + " pruning violations in debug expansion");
  out.psl_markings = r.psl;
  out.a3 = 2 * r.psl;
  if (*out.a3 % std::uint64_t(info.stab_sl)) throw InvariantError("count_orbit_word: A3 is not a multiple of |Stab|");
  out.a1 = *out.a3 / std::uint64_t(info.stab_sl);
  out.violations = r.violations;
  out.debug_checked = r.debug_checked;
  out.evaluated = r.evaluated;
  out.per_first = std::move(r.per_first);
  return out;
}

/** @brief An experiment record: counts on an L grid with normalizations and provenance. */
struct CountReport {
  FrickeTriple<double> X{};
  std::string word;
  std::string kind;
  std::vector<double> L;
  std::vector<std::uint64_t> a1;
  std::vector<std::optional<std::uint64_t>> a3;
  std::vector<double> normalized;  // a1 / L^2
  double B = 0, B_error = 0;
  double fitted_constant = 0;      // least squares a1 = C L^2
  int stab_sl = 0;
  int pruning_constant = 0;
  std::uint64_t pruning_violations = 0;
  std::uint64_t debug_checked = 0;
  double ball_tol = 0;

  nlohmann::ordered_json to_json() const {
    nlohmann::ordered_json j;
    j["schema"] = "ORB1";
    j["X"] = {X.x, X.y, X.z};
    j["word"] = word;
    j["kind"] = kind;
    j["L"] = L;
    j["a1"] = a1;
    nlohmann::ordered_json a3j = nlohmann::ordered_json::array();
    for (auto& v : a3) a3j.push_back(v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json(nullptr));
    j["a3"] = a3j;
    j["a1_over_L2"] = normalized;
    j["B"] = B;
    j["B_error"] = B_error;
    j["fitted_constant"] = fitted_constant;
    j["stab_sl"] = stab_sl;
    j["pruning_constant"] = pruning_constant;
    j["pruning_violations"] = pruning_violations;
    j["debug_checked"] = debug_checked;
    j["ball_tol"] = ball_tol;
    return j;
  }

  static CountReport from_json(const nlohmann::ordered_json& j) {
    if (!j.is_object() || j.value("schema", "") != "ORB1") throw SchemaError("count report: missing ORB1 schema tag");
    try {
      CountReport r;
      auto x = j.at("X");
      r.X = {x.at(0).get<double>(), x.at(1).get<double>(), x.at(2).get<double>()};
      r.word = j.at("word").get<std::string>();
      r.kind = j.at("kind").get<std::string>();
      r.L = j.at("L").get<std::vector<double>>();
      r.a1 = j.at("a1").get<std::vector<std::uint64_t>>();
      for (auto& v : j.at("a3")) r.a3.push_back(v.is_null() ? std::nullopt : std::optional<std::uint64_t>(v.get<std::uint64_t>()));
      r.normalized = j.at("a1_over_L2").get<std::vector<double>>();
      r.B = j.at("B").get<double>();
      r.B_error = j.at("B_error").get<double>();
      r.fitted_constant = j.at("fitted_constant").get<double>();
      r.stab_sl = j.at("stab_sl").get<int>();
      r.pruning_constant = j.at("pruning_constant").get<int>();
      r.pruning_violations = j.at("pruning_violations").get<std::uint64_t>();
      r.debug_checked = j.at("debug_checked").get<std::uint64_t>();
      r.ball_tol = j.at("ball_tol").get<double>();
      if (r.a1.size() != r.L.size() || r.a3.size() != r.L.size() || r.normalized.size() != r.L.size())
        throw SchemaError("count report: grid arrays differ in length");
      return r;
    } catch (const nlohmann::json::exception& e) {
      throw SchemaError(std::string("count report: ") + e.what());
    }
  }
};

/// counts on an L grid plus B(X)
inline CountReport count_report(const FrickeTriple<double>& X, const Word& w, const std::vector<double>& Ls, const OrbitOptions& opt = {},
                                double ball_tol = 1e-9) {
  WordInfo info = classify_word(w);
  CountReport r;
  r.X = X;
  r.word = w.str();
  r.kind = to_string(info.kind);
  r.stab_sl = info.stab_sl;
  r.pruning_constant = info.pruning_constant;
  r.ball_tol = ball_tol;
  auto ball = thurston_ball_B(X, ball_tol);
  r.B = ball.B;
  r.B_error = ball.error;
  double num = 0, den = 0;
  std::uint64_t prev = 0;
  for (double L : Ls) {
    auto c = count_orbit_word(X, w, L, opt, &info);
    if (!r.a1.empty() && L >= r.L.back() && c.a1 < prev) throw InvariantError("count_report: counts decreased in L");
    prev = c.a1;
    r.L.push_back(L);
    r.a1.push_back(c.a1);
    r.a3.push_back(c.a3);
    r.normalized.push_back(double(c.a1) / (L * L));
    r.pruning_violations += c.violations;
    r.debug_checked += c.debug_checked;
    num += double(c.a1) * L * L;
    den += L * L * L * L;
  }
  r.fitted_constant = den > 0 ? num / den : 0;
  return r;
}

// ---------------------------------------------------------------- cones

/**
 * @brief Orbit points g X with l_alpha(g X) <= L and twist in [m l, (m+1) l); FN coordinates of
 * each marking are recovered with the inverse of the transversal relation.
 */
inline std::uint64_t cone_count(const FrickeTriple<double>& X, long long m, double L) {
  const double l1 = boundary_length(X);
  std::uint64_t n = 0;
  if (L < systole(X)) return 0;
  for_each_simple(X, L, [&](Slope, double l, const Marking<double>& mk) {
    double tau0 = fn::s11_from_fricke(mk.t, l1).twist;
    double k = std::ceil(double(m) - tau0 / l);
    double tau = tau0 + k * l;
    if (tau < double(m) * l) tau += l, k += 1;  // rounding at the cone wall
    if (tau >= double(m + 1) * l) tau -= l, k -= 1;
    if (std::abs(k) <= 8) {
      // the marking (a, b a^k) has twist tau0 + k l
      double tx = mk.t.x, ty = mk.t.y, tz = mk.t.z;
      for (long long j = 0; j < (long long)std::abs(k); ++j) {
        double ny = k > 0 ? tz : tx * ty - tz;
        double nz = k > 0 ? tx * tz - ty : ty;
        ty = ny, tz = nz;
      }
      double tk = fn::s11_from_fricke(FrickeTriple<double>{tx, ty, tz}, l1).twist;
      if (std::abs(tk - tau) > 1e-6 * (1 + std::abs(tau))) throw InvariantError("cone_count: twist shift does not match the Dehn twist");
    }
    if (tau >= double(m) * l && tau < double(m + 1) * l) ++n;
  });
  return n;
}

// ---------------------------------------------------------------- volumes

struct BallVolume {
  double area = 0;      // FN area of {l_gamma <= L} in Teichmueller space
  double vol = 0;       // area / |Stab(gamma)|
  double l_lo = 0, l_hi = 0;
  int stab_sl = 0;
};

namespace detail {

struct TwistInterval {
  double lo = 0, hi = 0, min_value = 0;
  bool empty = true;
};

inline TwistInterval twist_interval(const TracePlan& plan, double l, double L, int i_a) {
  auto g = [&](double tau) { return word_length_at(plan, l, tau); };
  double R = std::max(2.0 * L / std::max(i_a, 1) + 10.0, 10.0);
  while (g(R) <= L || g(-R) <= L) R *= 2;
  auto [tmin, gmin] = boost::math::tools::brent_find_minima(g, -R, R, 52);
  TwistInterval ti;
  ti.min_value = gmin;
  if (gmin > L) return ti;
  ti.empty = false;
  boost::uintmax_t it = 200;
  auto tol = boost::math::tools::eps_tolerance<double>(48);
  auto h = [&](double t) { return g(t) - L; };
  auto lo = boost::math::tools::toms748_solve(h, -R, tmin, h(-R), gmin - L, tol, it);
  it = 200;
  auto hi = boost::math::tools::toms748_solve(h, tmin, R, gmin - L, h(R), tol, it);
  ti.lo = (lo.first + lo.second) / 2;
  ti.hi = (hi.first + hi.second) / 2;
  return ti;
}

}  // namespace detail

/// FN area of the length ball of a filling curve on the cusped torus
inline BallVolume ball_volume(const Word& w, double L, const WordInfo* known = nullptr) {
  WordInfo info = known ? *known : classify_word(w);
  if (info.kind != CurveKind::filling) throw PreconditionError("ball_volume: the curve is not filling, so its length ball has infinite volume");
  if (!(L > 0) || !std::isfinite(L)) throw PreconditionError("ball_volume: L must be positive and finite");
  const double Lr = L / info.power;
  auto plan = TracePlan::build(info.root);
  const int ia = info.i_basis[0];
  auto hmin = [&](double s) { return detail::twist_interval(plan, std::exp(s), Lr, ia).min_value; };
  // the sublevel set is connected, so {l : min_tau l_gamma <= L} is an interval
  const double s_lo = -Lr / (2.0 * std::max(ia, 1)) - 3, s_hi = std::log(info.pruning_constant * Lr + 10);
  const int N = 160;
  double best_s = s_lo, best = INFINITY;
  std::vector<double> ss(N + 1), hv(N + 1);
  for (int k = 0; k <= N; ++k) {
    ss[k] = s_lo + (s_hi - s_lo) * k / N;
    hv[k] = hmin(ss[k]);
    if (hv[k] < best) best = hv[k], best_s = ss[k];
  }
  BallVolume out;
  out.stab_sl = info.stab_sl;
  if (best > Lr) {
    auto r = boost::math::tools::brent_find_minima(hmin, std::max(s_lo, best_s - (s_hi - s_lo) / N), std::min(s_hi, best_s + (s_hi - s_lo) / N), 40);
    if (r.second > Lr) return out;
    best_s = r.first;
  }
  if (hv.front() <= Lr || hv.back() <= Lr) throw ConditionError("ball_volume: the ball reaches the edge of the length scan");
  auto edge = [&](double a, double b) {
    boost::uintmax_t it = 200;
    auto f = [&](double s) { return hmin(s) - Lr; };
    auto r = boost::math::tools::toms748_solve(f, a, b, boost::math::tools::eps_tolerance<double>(40), it);
    return (r.first + r.second) / 2;
  };
  int kb = int(std::lround((best_s - s_lo) / (s_hi - s_lo) * N));
  int a = kb, b = kb;
  while (a > 0 && hv[a] <= Lr) --a;
  while (b < N && hv[b] <= Lr) ++b;
  double s_a = edge(ss[a], std::max(best_s, ss[std::min(a + 1, N)]));
  double s_b = edge(std::min(best_s, ss[std::max(b - 1, 0)]), ss[b]);
  if (hv[a] <= Lr || hv[b] <= Lr) throw ConditionError("ball_volume: could not bracket the length range of the ball");
  auto width = [&](double s) {
    auto ti = detail::twist_interval(plan, std::exp(s), Lr, ia);
    return ti.empty ? 0.0 : (ti.hi - ti.lo) * std::exp(s);
  };
  boost::math::quadrature::tanh_sinh<double> ts;
  double area = ts.integrate(width, s_a, s_b, 1e-9);
  out.area = area;
  out.vol = area / info.stab_sl;
  out.l_lo = std::exp(s_a);
  out.l_hi = std::exp(s_b);
  return out;
}

/// maximal systole of a cusped torus, reached at the modular torus
inline double max_cusped_systole() { return 2 * std::acosh(1.5); }

/// whether the curve a is a systole of the cusped point (l, tau)
inline bool a_is_systole(double l, double tau) {
  auto t = fn::fricke_triple(SurfacePoint<double>::s11(0.0, l, tau));
  auto s = reduce_to_sink(t);
  double m = std::min({s.v[0].t, s.v[1].t, s.v[2].t});
  return t.x <= m * (1 + 1e-12);
}

struct WpAverage {
  double avg = 0, stderr_ = 0;
  double acceptance = 0;
  std::uint64_t samples = 0;
};

/**
 * @brief Monte Carlo estimate of the orbifold integral of s_X(L, gamma) over M11, sampling the
 * region where a is a systole and 0 <= tau < l. Streams are keyed by (seed, block).
 */
inline WpAverage wp_average(const Word& w, double L, std::uint64_t samples, std::uint64_t seed, unsigned workers = 1,
                            const WordInfo* known = nullptr) {
  if (samples < 1000) throw PreconditionError("wp_average: need at least 1000 samples");
  WordInfo info = known ? *known : classify_word(w);
  constexpr std::uint64_t kBlock = 64;
  const std::uint64_t nblocks = (samples + kBlock - 1) / kBlock;
  struct Part {
    double sum = 0, sum2 = 0;
    std::uint64_t accepted = 0, n = 0;
  };
  std::vector<Part> parts(nblocks);
  const double lm = max_cusped_systole();
  std::atomic<std::uint64_t> next{0};
  std::exception_ptr err;
  std::mutex em;
  auto work = [&] {
    try {
      for (std::uint64_t b; (b = next.fetch_add(1)) < nblocks;) {
        std::seed_seq sq{std::uint32_t(seed), std::uint32_t(seed >> 32), std::uint32_t(b), std::uint32_t(b >> 32)};
        std::mt19937_64 rng(sq);
        std::uniform_real_distribution<double> U(0.0, 1.0);
        Part& p = parts[b];
        std::uint64_t n = std::min(kBlock, samples - b * kBlock);
        for (std::uint64_t i = 0; i < n; ++i) {
          double l = lm * std::sqrt(U(rng));
          double tau = U(rng) * l;
          ++p.n;
          if (!(l > 0) || !a_is_systole(l, tau)) continue;
          ++p.accepted;
          auto X = fn::fricke_triple(SurfacePoint<double>::s11(0.0, l, tau));
          OrbitOptions opt;
          double s = double(count_orbit_word(X, w, L, opt, &info).a1);
          p.sum += s;
          p.sum2 += s * s;
        }
      }
    } catch (...) {
      std::lock_guard<std::mutex> lk(em);
      if (!err) err = std::current_exception();
      next = nblocks;
    }
  };
  std::vector<std::thread> pool;
  for (unsigned k = 1; k < std::max(1u, workers); ++k) pool.emplace_back(work);
  work();
  for (auto& th : pool) th.join();
  if (err) std::rethrow_exception(err);
  Part tot;
  for (auto& p : parts) {
    tot.sum += p.sum;
    tot.sum2 += p.sum2;
    tot.accepted += p.accepted;
    tot.n += p.n;
  }
  WpAverage out;
  out.samples = tot.n;
  out.acceptance = double(tot.accepted) / double(tot.n);
  if (out.acceptance < 0.01) throw ConditionError("wp_average: sampler rejection rate above 99%");
  // orbifold measure: half the area of the sampled triangle
  const double w_area = 0.5 * (lm * lm / 2);
  double mean = tot.sum / double(tot.n);
  double var = std::max(0.0, tot.sum2 / double(tot.n) - mean * mean);
  out.avg = w_area * mean;
  out.stderr_ = w_area * std::sqrt(var / double(tot.n - 1));
  return out;
}

struct VolumeAndAverage {
  double vol = 0, avg = 0, stderr_ = 0;
};

inline VolumeAndAverage ball_volume_and_average(const Word& w, double L, std::uint64_t mc_samples, std::uint64_t seed, unsigned workers = 1) {
  WordInfo info = classify_word(w);
  if (info.kind != CurveKind::filling) throw PreconditionError("ball_volume_and_average: the curve is not filling");
  auto v = ball_volume(w, L, &info);
  auto a = wp_average(w, L, mc_samples, seed, workers, &info);
  return {v.vol, a.avg, a.stderr_};
}

// ---------------------------------------------------------------- measured constants

/// max over first basis curves alpha of (number of twists kept) * l_alpha / L
inline double twist_range_constant(const FrickeTriple<double>& X, const Word& w, double L) {
  OrbitOptions opt;
  opt.collect_twist_ranges = true;
  auto info = classify_word(w);
  if (info.kind != CurveKind::filling) throw PreconditionError("twist_range_constant: filling curves only");
  auto c = count_orbit_word(X, w, L, opt, &info);
  double best = 0;
  for (auto& [s, n] : c.per_first) best = std::max(best, double(n) * length_trace(farey_trace_mp(X, s).convert_to<double>()) / L);
  return best;
}

/// product of reciprocal lengths of simple curves shorter than eps0 (1 when there are none)
inline double short_curve_factor(const FrickeTriple<double>& X, double eps0 = 2 * std::asinh(1.0)) {
  double g = 1;
  if (systole(X) > eps0) return g;
  for_each_simple(X, eps0, [&](Slope, double l, const Marking<double>&) { g /= l; });
  return g;
}

// ---------------------------------------------------------------- orbit nodes

/** @brief A point g^-1 X of the orbit, reached from X by the moves in `moves`. */
struct OrbitNode {
  FrickeTriple<double> t;
  std::string moves;  // T: twist, t: inverse twist, S: elementary move
  std::array<double, 3> lengths{};
};

/// orbit nodes within `depth` moves; kappa is tracked exactly for integer triples and drift-checked otherwise
inline std::vector<OrbitNode> orbit_nodes(const FrickeTriple<double>& X, int depth, double drift_cap = 1e-7) {
  auto t0 = hyperbolic_triple(X);
  const bool integral = std::floor(t0.x) == t0.x && std::floor(t0.y) == t0.y && std::floor(t0.z) == t0.z;
  const double k0 = t0.kappa();
  auto make = [](const FrickeTriple<double>& t, std::string mv) {
    return OrbitNode{t, std::move(mv), {length_trace(t.x), length_trace(t.y), length_trace(t.z)}};
  };
  struct Exact {
    big_int x, y, z;
  };
  std::vector<OrbitNode> out{make(t0, "")};
  std::vector<Exact> ex{{big_int(t0.x), big_int(t0.y), big_int(t0.z)}};
  std::size_t begin = 0;
  for (int d = 0; d < depth; ++d) {
    std::size_t end = out.size();
    for (std::size_t i = begin; i < end; ++i) {
      for (char m : {'T', 't', 'S'}) {
        if (!out[i].moves.empty()) {
          char last = out[i].moves.back();
          if ((m == 'T' && last == 't') || (m == 't' && last == 'T') || (m == 'S' && last == 'S')) continue;
        }
        const auto& t = out[i].t;
        FrickeTriple<double> n = m == 'T' ? FrickeTriple<double>{t.x, t.z, t.x * t.z - t.y}
                                 : m == 't' ? FrickeTriple<double>{t.x, t.x * t.y - t.z, t.y}
                                            : FrickeTriple<double>{t.y, t.x, t.x * t.y - t.z};
        if (integral) {
          const auto& e = ex[i];
          Exact ne = m == 'T' ? Exact{e.x, e.z, e.x * e.z - e.y} : m == 't' ? Exact{e.x, e.x * e.y - e.z, e.y} : Exact{e.y, e.x, e.x * e.y - e.z};
          n = {ne.x.convert_to<double>(), ne.y.convert_to<double>(), ne.z.convert_to<double>()};
          ex.push_back(ne);
        } else {
          // allowance: the cap plus the rounding of kappa itself
          double noise = 64 * std::numeric_limits<double>::epsilon() * (n.x * n.x + n.y * n.y + n.z * n.z + std::abs(n.x * n.y * n.z));
          if (std::abs(n.kappa() - k0) > drift_cap * std::max(std::abs(k0), 1.0) + noise)
            throw InvariantError("orbit_nodes: kappa drifted along " + out[i].moves + m);
        }
        out.push_back(make(n, out[i].moves + m));
      }
    }
    begin = end;
  }
  return out;
}

// ---------------------------------------------------------------- resumable reports

/// count_report that stores the finished grid points in `path` after each one and resumes from it
inline CountReport count_report_resumable(const FrickeTriple<double>& X, const Word& w, const std::vector<double>& Ls,
                                          const std::filesystem::path& path, const OrbitOptions& opt = {}, double ball_tol = 1e-9) {
  CountReport r;
  std::size_t done = 0;
  if (std::filesystem::exists(path)) {
    std::ifstream in(path);
    nlohmann::ordered_json j;
    try {
      in >> j;
    } catch (const nlohmann::json::exception& e) {
      throw SchemaError(std::string("count report checkpoint: ") + e.what());
    }
    r = CountReport::from_json(j);
    if (!(r.X.x == X.x && r.X.y == X.y && r.X.z == X.z) || r.word != w.str() || r.L.size() > Ls.size() ||
        !std::equal(r.L.begin(), r.L.end(), Ls.begin()))
      throw SchemaError("count report checkpoint: stored run does not match the request");
    done = r.L.size();
  } else {
    r = count_report(X, w, {}, opt, ball_tol);
  }
  WordInfo info = classify_word(w);
  for (std::size_t k = done; k < Ls.size(); ++k) {
    auto c = count_orbit_word(X, w, Ls[k], opt, &info);
    if (!r.a1.empty() && c.a1 < r.a1.back() && Ls[k] >= r.L.back()) throw InvariantError("count_report: counts decreased in L");
    r.L.push_back(Ls[k]);
    r.a1.push_back(c.a1);
    r.a3.push_back(c.a3);
    r.normalized.push_back(double(c.a1) / (Ls[k] * Ls[k]));
    r.pruning_violations += c.violations;
    r.debug_checked += c.debug_checked;
    double num = 0, den = 0;
    for (std::size_t i = 0; i < r.L.size(); ++i) num += double(r.a1[i]) * r.L[i] * r.L[i], den += std::pow(r.L[i], 4);
    r.fitted_constant = num / den;
    auto tmp = path;
    tmp += ".tmp";
    {
      std::ofstream out(tmp);
      out << r.to_json().dump(2) << "\n";
      if (!out) throw ConfigError("count report checkpoint: cannot write " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
  }
  return r;
}

}  // namespace teichlab::orbit
