#pragma once

#ifdef _OPENMP
#include <omp.h>
#endif

namespace vafuse {

// Resolves a requested thread count: 0 means "library default" (all hardware
// threads when built with OpenMP, otherwise 1). Always returns >= 1.
inline int resolve_threads(int requested) {
#ifdef _OPENMP
  if (requested <= 0) return omp_get_max_threads();
  return requested;
#else
  (void)requested;
  return 1;
#endif
}

}  // namespace vafuse
