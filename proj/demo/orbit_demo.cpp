// Orbit counts on the modular torus and a generic cusped torus, normalized by L^2 B(X).
#include <cstdio>

#include "teichlab/fn_surface.hpp"
#include "teichlab/orbit.hpp"

using namespace teichlab;

int main() {
  FrickeTriple<double> modular{3, 3, 3};
  auto generic = fn::fricke_triple(SurfacePoint<double>::s11(0.0, 0.7, 0.23));
  for (auto [name, X] : {std::pair{"modular", modular}, std::pair{"generic", generic}}) {
    auto B = orbit::thurston_ball_B(X, 1e-10);
    std::printf("%s torus: systole %.6f, B(X) = %.8f (+%.1e)\n", name, orbit::systole(X), B.B, B.error);
    std::printf("  %6s %10s %12s\n", "L", "simple", "s/(L^2 B)");
    for (double L : {10.0, 20.0, 40.0, 80.0}) {
      auto n = orbit::count_simple(X, L);
      std::printf("  %6.0f %10llu %12.6f\n", L, (unsigned long long)n, double(n) / (L * L * B.B));
    }
    for (const char* w : {"abAbaB", "aabb"}) {
      auto info = orbit::classify_word(Word::parse(w));
      std::printf("  %s (%s):", w, orbit::to_string(info.kind).c_str());
      for (double L : {10.0, 12.0, 14.0}) {
        auto c = orbit::count_orbit_word(X, Word::parse(w), L);
        std::printf(" L=%.0f: %llu", L, (unsigned long long)c.a1);
      }
      std::printf("\n");
    }
  }
}
