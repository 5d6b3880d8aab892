#include "neutral_gate/parallel.hpp"

#include <charconv>
#include <cstdlib>
#include <cstring>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace ngate {

namespace {
#ifdef _OPENMP
const int kDefaultThreads = omp_get_max_threads();
#endif
}  // namespace

int thread_count() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

void set_thread_limit(int threads) {
#ifdef _OPENMP
  omp_set_num_threads(threads > 0 ? threads : kDefaultThreads);
#else
  (void)threads;
#endif
}

bool apply_thread_env() {
  const char* raw = std::getenv("NEUTRAL_GATE_THREADS");
  if (raw == nullptr || *raw == '\0') return true;
  int value = 0;
  const char* end = raw + std::strlen(raw);
  const auto [ptr, ec] = std::from_chars(raw, end, value);
  if (ec != std::errc() || ptr != end || value < 0) return false;
  set_thread_limit(value);
  return true;
}

}  // namespace ngate
