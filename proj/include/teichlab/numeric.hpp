#pragma once

#include <cmath>
#include <cstdio>
#include <initializer_list>
#include <limits>
#include <string>

#include <boost/math/constants/constants.hpp>
#include <boost/math/special_functions/acosh.hpp>
#include <boost/math/special_functions/asinh.hpp>
#include <boost/math/special_functions/log1p.hpp>
#include <boost/multiprecision/cpp_bin_float.hpp>
#include <boost/multiprecision/cpp_int.hpp>

#include "teichlab/errors.hpp"

namespace teichlab {

using mp_float = boost::multiprecision::cpp_bin_float_50;
using big_int = boost::multiprecision::cpp_int;

namespace num {

template <class T>
T ln2() {
  return boost::math::constants::ln_two<T>();
}

template <class T>
T pi() {
  return boost::math::constants::pi<T>();
}

template <class T>
T neg_inf() {
  return -std::numeric_limits<T>::infinity();
}

template <class T>
bool is_finite(const T& v) {
  using std::isfinite;
  using boost::multiprecision::isfinite;
  return isfinite(v);
}

template <class T>
T log1p(const T& v) {
  return boost::math::log1p(v);
}

template <class T>
T acosh(const T& v) {
  using std::acosh;
  using boost::multiprecision::acosh;
  return acosh(v);
}

template <class T>
T asinh(const T& v) {
  using std::asinh;
  using boost::multiprecision::asinh;
  return asinh(v);
}

/// log(cosh t), exact for all finite t
template <class T>
T log_cosh(const T& t) {
  using std::abs;
  using std::cosh;
  using std::exp;
  using std::log;
  T a = abs(t);
  if (a > T(20)) return a - ln2<T>() + log1p(T(exp(T(-2) * a)));
  return log(cosh(a));
}

/// log(sinh t) for t >= 0; -inf at 0
template <class T>
T log_sinh(const T& t) {
  using std::exp;
  using std::log;
  using std::sinh;
  if (t < T(0)) throw DomainError("log_sinh of a negative argument");
  if (t == T(0)) return neg_inf<T>();
  if (t > T(20)) return t - ln2<T>() + log1p(T(-exp(T(-2) * t)));
  return log(sinh(t));
}

template <class T>
T logsumexp(std::initializer_list<T> terms) {
  using std::exp;
  using std::log;
  T m = neg_inf<T>();
  for (const T& v : terms)
    if (v > m) m = v;
  if (m == neg_inf<T>()) return m;
  T s = 0;
  for (const T& v : terms)
    if (v != neg_inf<T>()) s += exp(T(v - m));
  return m + log(s);
}

/// arccosh(1 + R) for R >= 0 without cancellation
template <class T>
T acosh1p(const T& R) {
  using std::sqrt;
  using std::log;
  if (R < T(0)) throw DomainError("arccosh argument below 1");
  if (R > T(1e100)) return log(R) + log(T(T(1) + T(1) / R + sqrt(T(T(1) + T(2) / R))));
  return log1p(T(R + sqrt(T(R * (T(2) + R)))));
}

/// arccosh(1 + e^logR)
template <class T>
T acosh1p_from_log(const T& logR) {
  using std::exp;
  using std::log;
  using std::sqrt;
  if (logR == neg_inf<T>()) return T(0);
  if (logR < T(600)) return acosh1p(T(exp(logR)));
  T e = exp(-logR);
  return logR + log(T(T(1) + e + sqrt(T(T(1) + T(2) * e))));
}

/// arccosh(v) for v = e^logv >= 1
template <class T>
T acosh_from_log(const T& logv) {
  using std::exp;
  using std::log;
  using std::sqrt;
  if (logv < T(0)) throw DomainError("arccosh argument below 1");
  if (logv < T(600)) return acosh(T(exp(logv)));
  T e2 = exp(T(-2) * logv);
  return logv + log(T(T(1) + sqrt(T(T(1) - e2))));
}

template <class T>
double to_double(const T& v) {
  return static_cast<double>(v);
}

inline std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace num
}  // namespace teichlab
