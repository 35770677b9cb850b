#pragma once

#include <cctype>
#include <cmath>
#include <cstdint>
#include <map>
#include <mutex>
#include <random>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "teichlab/numeric.hpp"
#include "teichlab/word.hpp"

namespace teichlab {

template <class T = double>
struct Mat2 {
  T a{1}, b{0}, c{0}, d{1};

  static Mat2 identity() { return {T(1), T(0), T(0), T(1)}; }

  Mat2 operator*(const Mat2& o) const {
    return {a * o.a + b * o.c, a * o.b + b * o.d, c * o.a + d * o.c, c * o.b + d * o.d};
  }
  T trace() const { return a + d; }
  T det() const { return a * d - b * c; }
  /// inverse of a unimodular matrix
  Mat2 inv() const { return {d, -b, -c, a}; }
};

/** @brief Trace coordinates (tr A, tr B, tr AB) of a pair in SL(2,R). */
template <class T = double>
struct FrickeTriple {
  T x{}, y{}, z{};

  /// x^2 + y^2 + z^2 - xyz - 2, the trace of the commutator
  T kappa() const { return x * x + y * y + z * z - x * y * z - T(2); }

  template <class U>
  FrickeTriple<U> cast() const {
    return {U(x), U(y), U(z)};
  }
};

/// trace of the matrix product spelled by w
template <class T>
T trace_word_numeric(const Mat2<T>& A, const Mat2<T>& B, const Word& w) {
  Mat2<T> Ai = A.inv(), Bi = B.inv();
  Mat2<T> M = Mat2<T>::identity();
  for (char ch : w.str()) {
    const Mat2<T>& G = ch == 'a' ? A : ch == 'A' ? Ai : ch == 'b' ? B : Bi;
    M = M * G;
  }
  T t = M.trace();
  if (!num::is_finite(t)) throw OverflowError("trace_word_numeric overflowed; use a multiprecision scalar");
  return t;
}

/**
 * @brief Straight-line program for the trace polynomial of a word.
 * Built once by trace-identity reduction, evaluated at any triple in any ring.
 */
class TracePlan {
 public:
  enum class Op : std::uint8_t { two, x, y, z, mul_sub };
  struct Node {
    Op op;
    int p, q, r;  // value = v[p] * v[q] - v[r]
  };

  std::size_t size() const { return nodes_.size(); }

  template <class T>
  T eval(const FrickeTriple<T>& t) const {
    std::vector<T> v(nodes_.size());
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
      const Node& n = nodes_[i];
      switch (n.op) {
        case Op::two: v[i] = T(2); break;
        case Op::x: v[i] = t.x; break;
        case Op::y: v[i] = t.y; break;
        case Op::z: v[i] = t.z; break;
        case Op::mul_sub: v[i] = v[n.p] * v[n.q] - v[n.r]; break;
      }
    }
    return v[root_];
  }

  /// value with a running bound on its rounding error; inputs carry relative error rel_in
  template <class T>
  std::pair<T, T> eval_with_error(const FrickeTriple<T>& t, const T& rel_in) const {
    using std::abs;
    const T u = std::numeric_limits<T>::epsilon();
    std::vector<T> v(nodes_.size()), e(nodes_.size());
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
      const Node& n = nodes_[i];
      switch (n.op) {
        case Op::two: v[i] = T(2); e[i] = T(0); break;
        case Op::x: v[i] = t.x; e[i] = abs(t.x) * rel_in; break;
        case Op::y: v[i] = t.y; e[i] = abs(t.y) * rel_in; break;
        case Op::z: v[i] = t.z; e[i] = abs(t.z) * rel_in; break;
        case Op::mul_sub: {
          T prod = v[n.p] * v[n.q];
          v[i] = prod - v[n.r];
          e[i] = abs(v[n.p]) * e[n.q] + abs(v[n.q]) * e[n.p] + e[n.p] * e[n.q] + e[n.r] + T(2) * u * (abs(prod) + abs(v[n.r]));
          break;
        }
      }
    }
    return {v[root_], e[root_]};
  }

  static TracePlan build(const Word& w, std::size_t max_length = 10000) {
    if (w.size() > max_length) throw PreconditionError("trace plan: word longer than the configured cap");
    TracePlan plan;
    Builder b{plan, {}, 0, max_length};
    plan.root_ = b.node_for(w.cyclically_reduced().str());
    return plan;
  }

 private:
  struct Builder {
    TracePlan& plan;
    std::unordered_map<std::string, int> memo;
    std::size_t depth;
    std::size_t max_depth;

    int leaf(Op op, const std::string& key) {
      auto it = memo.find(key);
      if (it != memo.end()) return it->second;
      plan.nodes_.push_back({op, 0, 0, 0});
      return memo[key] = int(plan.nodes_.size() - 1);
    }

    static std::string cyc(const std::string& s) { return Word::from_letters(s).cyclically_reduced().str(); }

    int node_for(const std::string& wc) {
      if (wc.empty()) return leaf(Op::two, "#2");
      std::string key = canonical_curve(Word::from_letters(wc));
      auto it = memo.find(key);
      if (it != memo.end()) return it->second;
      if (++depth > max_depth) throw PreconditionError("trace plan: recursion depth exhausted");
      int id = reduce(wc, key);
      --depth;
      memo[key] = id;
      return id;
    }

    int reduce(const std::string& w, const std::string& key) {
      const std::size_t n = w.size();
      if (n == 1) return (w[0] == 'a' || w[0] == 'A') ? leaf(Op::x, "#x") : leaf(Op::y, "#y");
      // a repeated letter splits w cyclically as (gP)(gQ)
      std::size_t best_i = n, best_k = 0;
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t k = 1; k < n; ++k) {
          if (w[(i + k) % n] != w[i]) continue;
          std::size_t bal = k > n - k ? k - (n - k) : (n - k) - k;
          std::size_t cur = best_i == n ? n + 1 : (best_k > n - best_k ? best_k - (n - best_k) : (n - best_k) - best_k);
          if (bal < cur) {
            best_i = i;
            best_k = k;
          }
          if (bal <= 1) goto chosen;
        }
    chosen:
      if (best_i == n) {
        if (n == 2) {
          bool mixed = (std::isupper(static_cast<unsigned char>(w[0])) != 0) != (std::isupper(static_cast<unsigned char>(w[1])) != 0);
          int z = leaf(Op::z, "#z");
          if (!mixed) return z;
          int x = leaf(Op::x, "#x"), y = leaf(Op::y, "#y");
          return push(x, y, z);
        }
        // n == 4 with four distinct letters: a commutator; split into halves
        std::string X = w.substr(0, 2), Y = w.substr(2);
        return split(X, Y);
      }
      std::string rot = w.substr(best_i) + w.substr(0, best_i);
      return split(rot.substr(0, best_k), rot.substr(best_k));
    }

    // tr(XY) = tr X tr Y - tr(X Y^-1)
    int split(const std::string& X, const std::string& Y) {
      std::string yinv = Word::from_letters(Y).inverse().str();
      std::string w3 = cyc(X + yinv);
      int nx = node_for(cyc(X));
      int ny = node_for(cyc(Y));
      int n3 = node_for(w3);
      return push(nx, ny, n3);
    }

    int push(int p, int q, int r) {
      plan.nodes_.push_back({Op::mul_sub, p, q, r});
      return int(plan.nodes_.size() - 1);
    }
  };

  std::vector<Node> nodes_;
  int root_ = 0;
};

/// trace polynomial of w evaluated at t; per-call memo on canonical subwords
template <class T>
T trace_word_fricke(const FrickeTriple<T>& t, const Word& w, std::size_t max_length = 10000) {
  return TracePlan::build(w, max_length).eval(t);
}

/// l = 2 arccosh(|tr|/2)
template <class T>
T length_trace(T tr) {
  using std::abs;
  T a = abs(tr) / 2;
  if (a < T(1)) throw DomainError("length_trace: |tr| < 2 has no geodesic length");
  return T(2) * num::acosh(a);
}

template <class T>
T trace_of_length(T l) {
  using std::cosh;
  if (l < T(0)) throw DomainError("trace_of_length: negative length");
  return T(2) * cosh(l / 2);
}

/// 2 arccosh(2 cosh(l1/2) cosh(l2/2) + eps cosh(l3/2))
template <class T>
T resolve_intersection(T l1, T l2, T l3, int eps) {
  using std::cosh;
  if (l1 < T(0) || l2 < T(0) || l3 < T(0)) throw DomainError("resolve_intersection: negative length");
  if (eps != 1 && eps != -1) throw PreconditionError("resolve_intersection: eps must be +1 or -1");
  T arg = T(2) * cosh(l1 / 2) * cosh(l2 / 2) + T(eps) * cosh(l3 / 2);
  if (arg < T(1)) throw DomainError("resolve_intersection: arccosh argument below 1 (wrong eps for this configuration)");
  return T(2) * num::acosh(arg);
}

/**
 * @brief Realizing pair for a triple. A is diagonal when |x| > 2; otherwise the roles
 * of A and B are exchanged when |y| > 2. The parabolic flag allows |x| = 2 with A upper triangular.
 */
template <class T>
std::pair<Mat2<T>, Mat2<T>> rep_from_fricke(const FrickeTriple<T>& t, bool allow_parabolic = false) {
  using std::abs;
  using std::sqrt;
  const T x = t.x, y = t.y, z = t.z;
  if (abs(x) > T(2)) {
    T s = sqrt(x * x - T(4));
    T lam = x > T(0) ? T((x + s) / 2) : T((x - s) / 2);
    T li = T(1) / lam;
    T b11 = (z - y * li) / (lam - li);
    T b22 = y - b11;
    T b21 = b11 * b22 - T(1);
    T scale = T(1) + abs(b11 * b22);
    if (abs(b21) <= T(64) * std::numeric_limits<double>::epsilon() * scale)
      throw DomainError("rep_from_fricke: reducible triple (discriminant kappa - 2 = " + std::to_string(num::to_double(t.kappa() - T(2))) + ")");
    return {Mat2<T>{lam, T(0), T(0), li}, Mat2<T>{b11, T(1), b21, b22}};
  }
  if (abs(y) > T(2)) {
    auto [P, Q] = rep_from_fricke(FrickeTriple<T>{y, x, z}, allow_parabolic);
    return {Q, P};
  }
  if (allow_parabolic && abs(abs(x) - T(2)) == T(0)) {
    T e = x / 2;
    T r = z - e * y;
    T p = y / 2;
    if (r != T(0)) return {Mat2<T>{e, T(1), T(0), e}, Mat2<T>{p, (p * p - T(1)) / r, r, p}};
    if (abs(p * p - T(1)) == T(0)) return {Mat2<T>{e, T(1), T(0), e}, Mat2<T>{p, T(1), T(0), p}};
    throw DomainError("rep_from_fricke: parabolic normal form has no real solution (z - x y / 2 = 0, y^2 != 4)");
  }
  throw DomainError("rep_from_fricke: no hyperbolic generator (x^2 - 4 <= 0 and y^2 - 4 <= 0); reducible or non-real-realizable");
}

/** @brief A split of a closed curve at a self-intersection: w = U V, resolved into U, V and U V^-1. */
struct Resolution {
  Word u, v, w3;
  int eps = 0;
};

/**
 * @brief Fixes the sign in the self-intersection resolution by comparing both choices
 * with the numeric trace at a hyperbolic point; one answer per (word, cut), cached.
 */
class ResolutionCache {
 public:
  Resolution resolve(const Word& w, std::size_t cut) {
    std::string key = w.str() + "|" + std::to_string(cut);
    {
      std::lock_guard<std::mutex> lk(mu_);
      auto it = cache_.find(key);
      if (it != cache_.end()) return it->second;
    }
    if (cut == 0 || cut >= w.size()) throw PreconditionError("resolution cut must split the word into two non-empty parts");
    Resolution r;
    r.u = Word::from_letters(w.str().substr(0, cut));
    r.v = Word::from_letters(w.str().substr(cut));
    r.w3 = (r.u * r.v.inverse()).cyclically_reduced();
    // a fixed cusped hyperbolic point; the sign is constant on Teichmueller space
    FrickeTriple<double> X = sample_point();
    auto [A, B] = rep_from_fricke(X);
    double lw = length_trace(trace_word_numeric(A, B, w));
    double l1 = length_trace(trace_word_numeric(A, B, r.u));
    double l2 = length_trace(trace_word_numeric(A, B, r.v));
    double t3 = std::abs(trace_word_numeric(A, B, r.w3));
    double l3 = t3 >= 2 ? length_trace(t3) : (t3 > 2 - 1e-9 ? 0.0 : -1);
    int found = 0;
    for (int e : {1, -1}) {
      if (l3 < 0) break;
      double lc;
      try {
        lc = resolve_intersection(l1, l2, l3, e);
      } catch (const DomainError&) {
        continue;
      }
      if (std::abs(lc - lw) <= 1e-9 * std::max(1.0, lw)) {
        r.eps = e;
        ++found;
      }
    }
    if (found != 1) throw DomainError("resolve: the cut does not give a valid single-intersection resolution for " + w.str());
    std::lock_guard<std::mutex> lk(mu_);
    cache_[key] = r;
    return r;
  }

  static FrickeTriple<double> sample_point() {
    // l = 1.3, twist 0.4 on the cusped torus
    const double l = 1.3, tau = 0.4;
    const double K = std::cosh(l / 2) / std::sinh(l / 2);
    return {2 * std::cosh(l / 2), 2 * K * std::cosh(tau / 2), 2 * K * std::cosh((tau + l) / 2)};
  }

 private:
  std::mutex mu_;
  std::map<std::string, Resolution> cache_;
};

}  // namespace teichlab
