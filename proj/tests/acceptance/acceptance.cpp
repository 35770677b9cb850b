#include <cstdio>
#include <cstdlib>
#include <string>
#include <thread>

#include "acceptance/criteria.hpp"

int main(int argc, char** argv) {
  acceptance::Options o;
  o.workers = std::max(1u, std::thread::hardware_concurrency());
  if (const char* w = std::getenv("TEICHLAB_WORKERS")) o.workers = unsigned(std::max(1, std::atoi(w)));
  std::vector<int> only;
  for (int i = 1; i < argc; ++i) only.push_back(std::atoi(argv[i]));
  int failed = 0;
  try {
    acceptance::run(o, only, [&](const acceptance::Result& r) {
      failed += !r.pass;
      std::printf("%s (%.1f s)\n", acceptance::line(r).c_str(), r.seconds);
      std::fflush(stdout);
    });
  } catch (const std::exception& e) {
    std::fprintf(stderr, "acceptance: %s\n", e.what());
    return 2;
  }
  std::printf("%d criteria failed\n", failed);
  return 0;
}
