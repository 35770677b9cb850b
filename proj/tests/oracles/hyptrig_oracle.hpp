#pragma once
// Literal hexagon and pants formulas evaluated with 200-digit floats.

#include <boost/multiprecision/cpp_bin_float.hpp>

namespace oracle {

using hp = boost::multiprecision::number<boost::multiprecision::cpp_bin_float<200>>;

inline hp convex_c(hp ta, hp tb, hp tc) { return acosh((cosh(tc) + cosh(ta) * cosh(tb)) / (sinh(ta) * sinh(tb))); }

inline hp crossed_tc(hp ta, hp tb, hp c) { return acosh(sinh(ta) * sinh(tb) * cosh(c) + cosh(ta) * cosh(tb)); }

inline hp F1(hp x, hp y, hp z) { return convex_c(x, y, z); }

inline hp log_sinh_F1(hp x, hp y, hp z) { return log(sinh(F1(x, y, z))); }

}  // namespace oracle
