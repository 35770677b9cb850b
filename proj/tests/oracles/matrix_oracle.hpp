#pragma once
// Random SL(2,R) pairs built from explicit factors, and traces by plain multiplication.

#include <array>
#include <random>
#include <string>

namespace oracle {

using M2 = std::array<long double, 4>;

inline M2 mul(const M2& p, const M2& q) {
  return {p[0] * q[0] + p[1] * q[2], p[0] * q[1] + p[1] * q[3], p[2] * q[0] + p[3] * q[2], p[2] * q[1] + p[3] * q[3]};
}

inline M2 inv(const M2& p) { return {p[3], -p[1], -p[2], p[0]}; }

inline long double tr(const M2& p) { return p[0] + p[3]; }

// product of a shear, a diagonal and a rotation; determinant one by construction
inline M2 random_sl2(std::mt19937_64& rng, double spread = 1.2) {
  std::uniform_real_distribution<double> U(-spread, spread), Th(0, 6.283185307179586);
  long double s = U(rng), t = U(rng), th = Th(rng);
  M2 shear{1, s, 0, 1};
  M2 diag{std::exp(t), 0, 0, std::exp(-t)};
  M2 rot{std::cos(th), -std::sin(th), std::sin(th), std::cos(th)};
  return mul(mul(shear, diag), rot);
}

inline long double trace_of(const M2& A, const M2& B, const std::string& w) {
  M2 m{1, 0, 0, 1};
  for (char c : w) m = mul(m, c == 'a' ? A : c == 'A' ? inv(A) : c == 'b' ? B : inv(B));
  return tr(m);
}

inline std::string random_word(std::mt19937_64& rng, int len) {
  static const char L[] = "aAbB";
  std::uniform_int_distribution<int> D(0, 3);
  std::string s;
  while (int(s.size()) < len) {
    char c = L[D(rng)];
    if (!s.empty() && ((s.back() ^ c) == ('a' ^ 'A'))) continue;
    s.push_back(c);
  }
  return s;
}

}  // namespace oracle
