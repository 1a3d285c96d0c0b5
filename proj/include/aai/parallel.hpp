#pragma once

#include <cstddef>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace aai {

// Execution policy for the data-parallel kernels. Every kernel writes into
// index-addressed slots and reduces serially afterwards, so both policies
// produce bit-identical results; tests rely on that.
enum class Exec { serial, parallel };

inline int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

template <typename Fn>
void parallel_for(std::size_t n, Exec exec, Fn&& fn) {
  if (exec == Exec::parallel) {
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
    for (long long i = 0; i < static_cast<long long>(n); ++i) {
      fn(static_cast<std::size_t>(i));
    }
    return;
#endif
  }
  for (std::size_t i = 0; i < n; ++i) fn(i);
}

}  // namespace aai
