#pragma once

#include <cstdint>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace qrul {

// Worker cap for all parallel loops. 0 restores the hardware default.
void set_max_threads(int n);
int max_threads();

// Parallel loop over [0, n). Bodies must be independent per index; callers
// that need deterministic aggregation write into per-index slots and reduce
// in index order afterwards, so results do not depend on the thread count.
template <typename F>
void parallel_for(std::int64_t n, F&& body) {
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < n; ++i) body(i);
#else
  for (std::int64_t i = 0; i < n; ++i) body(i);
#endif
}

// Serial reference path, kept separate so tests and the benchmark can compare
// against the OpenMP kernels.
template <typename F>
void serial_for(std::int64_t n, F&& body) {
  for (std::int64_t i = 0; i < n; ++i) body(i);
}

}  // namespace qrul
