#pragma once

#ifdef _OPENMP
#include <omp.h>
#endif

namespace ims {

// Global worker count for the data-parallel loops below. 0 = all cores.
inline void setThreadCount(int n) {
#ifdef _OPENMP
  if (n <= 0) n = omp_get_num_procs();
  omp_set_num_threads(n);
#else
  (void)n;
#endif
}

inline int threadCount() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

// Parallel loop with static partitioning. Bodies must write to disjoint
// locations; results are then independent of the thread count, which keeps
// solver output bit-reproducible.
template <typename F>
void parallelFor(int n, F&& body) {
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
  for (int i = 0; i < n; ++i) body(i);
#else
  for (int i = 0; i < n; ++i) body(i);
#endif
}

} // namespace ims
