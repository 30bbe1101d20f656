#include "kinokit/parallel.hpp"

#include <cstdlib>
#include <string>

namespace kinokit {

namespace {
int initial_workers() {
  if (const char* env = std::getenv("KINOKIT_WORKERS")) {
    try {
      const int n = std::stoi(env);
      if (n >= 1) return n;
    } catch (...) {
    }
  }
  return 1;
}
std::atomic<int> g_workers{initial_workers()};
}  // namespace

int default_workers() { return g_workers.load(); }
void set_default_workers(int n) { g_workers.store(n < 1 ? 1 : n); }

}  // namespace kinokit
