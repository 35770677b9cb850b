// Right-angled hexagons: the regular one, a pants decomposition of alternate sides,
// and how closely the piecewise linear estimate tracks log sinh of the third side.
#include <cmath>
#include <cstdio>

#include "teichlab/checks.hpp"
#include "teichlab/hyptrig.hpp"

using namespace teichlab;

int main() {
  double s = checks::regular_hexagon_side();
  std::printf("regular hexagon side %.15f (acosh 2 = %.15f)\n", s, std::acosh(2.0));

  auto h = hyptrig::hexagon_from_alternate(1.0, 1.5, 2.0);
  std::printf("alternate sides 1, 1.5, 2 -> opposite sides %.12f %.12f %.12f\n", h.a, h.b, h.c);

  std::printf("\n%8s %8s %8s %14s %14s %10s\n", "x", "y", "z", "log sinh F1", "E", "diff");
  for (double t : {5.0, 20.0, 80.0})
    for (auto [a, b, c] : {std::array<double, 3>{1, 1, 1}, {1, 2, 3}, {1, 1, 3}}) {
      double x = a * t, y = b * t, z = c * t;
      double f = hyptrig::log_sinh_F1(x, y, z), e = hyptrig::E_approx(x, y, z).value;
      std::printf("%8.1f %8.1f %8.1f %14.6f %14.6f %10.2e\n", x, y, z, f, e, f - e);
    }
}
