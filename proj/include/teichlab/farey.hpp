#pragma once

#include <array>
#include <cstdlib>
#include <numeric>
#include <utility>
#include <vector>

#include "teichlab/errors.hpp"

namespace teichlab {

/// primitive slope p/q; (p,q) and (-p,-q) are the same curve
struct Slope {
  long long p = 1, q = 0;

  static Slope normalized(long long p, long long q) {
    if (p == 0 && q == 0) throw PreconditionError("slope (0,0) is not a curve");
    long long g = std::gcd(p < 0 ? -p : p, q < 0 ? -q : q);
    if (g != 1) throw PreconditionError("slope must be primitive (coprime entries)");
    if (q < 0 || (q == 0 && p < 0)) return {-p, -q};
    return {p, q};
  }

  bool operator==(const Slope& o) const { return p == o.p && q == o.q; }
  bool operator<(const Slope& o) const { return p != o.p ? p < o.p : q < o.q; }
};

/// 0: (odd, even) like (1,0); 1: (even, odd) like (0,1); 2: (odd, odd) like (1,1)
inline int slope_type(const Slope& s) {
  bool po = (s.p % 2) != 0, qo = (s.q % 2) != 0;
  if (po && !qo) return 0;
  if (!po && qo) return 1;
  return 2;
}

/**
 * @brief Seed traces for the Farey recursion t(u+v) = t(u) t(v) - t(u-v) - coef[type(u+v)].
 * minus is the trace of (-1,1); coef is zero on the one-holed torus.
 */
template <class T>
struct FareySeeds {
  T alpha{}, eta0{}, plus{}, minus{};
  std::array<T, 3> coef{};
};

/// trace of the slope by Stern-Brocot descent; |p| + q steps
template <class T>
T farey_trace(const FareySeeds<T>& s, Slope target) {
  target = Slope::normalized(target.p, target.q);
  if (target.q == 0) return s.alpha;
  if (target.p == 0) return s.eta0;
  const bool neg = target.p < 0;
  const long long P = neg ? -target.p : target.p, Q = target.q;
  // interval between left (0,1) and right (1,0), mirrored for negative slopes
  long long lp = 0, lq = 1, rp = 1, rq = 0;
  T tl = s.eta0, tr = s.alpha, to = neg ? s.plus : s.minus;
  for (;;) {
    long long mp = lp + rp, mq = lq + rq;
    Slope m{neg ? -mp : mp, mq};
    T tm = tl * tr - to - s.coef[slope_type(m)];
    if (mp == P && mq == Q) return tm;
    if (P * mq > mp * Q) {
      to = tl;
      lp = mp;
      lq = mq;
      tl = tm;
    } else {
      to = tr;
      rp = mp;
      rq = mq;
      tr = tm;
    }
  }
}

namespace detail {

template <class T, class F>
void farey_walk(const FareySeeds<T>& s, long long lp, long long lq, const T& tl, long long rp, long long rq, const T& tr, const T& to, int level,
                int depth, F& f) {
  Slope m{lp + rp, lq + rq};
  T tm = tl * tr - to - s.coef[slope_type(m)];
  f(m, tm, level);
  if (level >= depth) return;
  farey_walk(s, lp, lq, tl, m.p, m.q, tm, tr, level + 1, depth, f);
  farey_walk(s, m.p, m.q, tm, rp, rq, tr, tl, level + 1, depth, f);
}

}  // namespace detail

/// calls f(slope, trace, level) for every slope of Farey depth <= depth, one product per slope
template <class T, class F>
void farey_traverse(const FareySeeds<T>& s, int depth, F f) {
  f(Slope{1, 0}, s.alpha, 0);
  f(Slope{0, 1}, s.eta0, 0);
  if (depth < 1) return;
  detail::farey_walk(s, 0, 1, s.eta0, 1, 0, s.alpha, s.minus, 1, depth, f);
  detail::farey_walk(s, -1, 0, s.alpha, 0, 1, s.eta0, s.plus, 1, depth, f);
}

/// all slopes up to Farey depth d, starting from (1,0) and (0,1) at depth 0
inline std::vector<Slope> farey_slopes(int depth) {
  std::vector<std::pair<long long, long long>> ring{{1, 0}, {0, 1}, {-1, 0}};
  for (int d = 0; d < depth; ++d) {
    std::vector<std::pair<long long, long long>> next;
    for (std::size_t i = 0; i + 1 < ring.size(); ++i) {
      next.push_back(ring[i]);
      next.push_back({ring[i].first + ring[i + 1].first, ring[i].second + ring[i + 1].second});
    }
    next.push_back(ring.back());
    ring = std::move(next);
  }
  std::vector<Slope> out;
  for (std::size_t i = 0; i + 1 < ring.size(); ++i) out.push_back(Slope::normalized(ring[i].first, ring[i].second));
  return out;
}

}  // namespace teichlab
