// Markoff triples: the first few, then counts up to 10^30 against the (log x)^2 law.
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "teichlab/markoff.hpp"

using namespace teichlab;

int main() {
  std::printf("triples with max <= 1000:\n");
  markoff::enumerate_count(big_int(1000), markoff::Norm::max, markoff::Ordering::unordered,
                           [](const markoff::TreeNode& n) { std::printf("  %s\n", markoff::csv_row(n).c_str()); });

  std::vector<std::pair<double, double>> samples;
  std::printf("\n%6s %12s %12s %14s\n", "x", "unordered", "ordered", "count/ln^2 x");
  big_int x = 1;
  for (int e = 1; e <= 30; ++e) {
    x *= 10;
    if (e % 3) continue;
    auto r = markoff::enumerate_parallel(x, markoff::Norm::max, 1);
    double c = r.unordered.convert_to<double>(), l = e * std::log(10.0);
    samples.push_back({std::pow(10.0, e), c});
    std::printf("  1e%-3d %12s %12s %14.5f\n", e, r.unordered.str().c_str(), r.ordered.str().c_str(), c / (l * l));
  }
  auto fit = markoff::fit_growth(samples);
  std::printf("\nfit count = C ln^2 x + D ln x ln ln x: C = %.5f, D = %.5f, worst relative residual %.2e\n", fit.C, fit.D,
              fit.max_abs_relative_residual);
}
