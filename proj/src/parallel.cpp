#include "qrul/parallel.hpp"

#include <thread>

namespace qrul {

namespace {
int g_max_threads = 0;
}

void set_max_threads(int n) {
  g_max_threads = n > 0 ? n : 0;
#ifdef _OPENMP
  if (n > 0) {
    omp_set_num_threads(n);
  } else {
    omp_set_num_threads(omp_get_num_procs());
  }
#endif
}

int max_threads() {
  if (g_max_threads > 0) return g_max_threads;
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  const unsigned hc = std::thread::hardware_concurrency();
  return hc > 0 ? static_cast<int>(hc) : 1;
#endif
}

}  // namespace qrul
