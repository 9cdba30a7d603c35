#pragma once

#include <cstddef>

#ifdef DETONA_HAVE_OPENMP
#include <omp.h>
#endif

namespace detona {

inline int hardware_threads() {
#ifdef DETONA_HAVE_OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

// Data-parallel loop over [0, n). threads <= 1 runs the serial reference path; each index
// writes only its own slot, so serial and parallel runs produce identical output.
template <class F>
void parallel_for(std::size_t n, F&& f, int threads = 0) {
#ifdef DETONA_HAVE_OPENMP
  if (threads != 1 && n > 1) {
    int nt = threads > 0 ? threads : hardware_threads();
#pragma omp parallel for schedule(dynamic) num_threads(nt)
    for (long long i = 0; i < (long long)n; ++i) f((std::size_t)i);
    return;
  }
#endif
  for (std::size_t i = 0; i < n; ++i) f(i);
}

}  // namespace detona
