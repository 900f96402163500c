#pragma once

#include <cstddef>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace longmatch {

inline int hardware_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

// Maps fn over [0, n). threads <= 1 takes the serial reference path.
// Callers must write results by index only, so both paths produce
// identical output; tests assert the equality on every kernel using this.
template <typename Fn>
void parallel_for(std::size_t n, int threads, Fn&& fn) {
  if (threads <= 1 || n < 2) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
#ifdef _OPENMP
#pragma omp parallel for schedule(guided) num_threads(threads)
  for (long long i = 0; i < static_cast<long long>(n); ++i) {
    fn(static_cast<std::size_t>(i));
  }
#else
  for (std::size_t i = 0; i < n; ++i) fn(i);
#endif
}

}  // namespace longmatch
