#pragma once

#ifdef _OPENMP
#include <omp.h>
#endif

namespace protofold {

/// Thread count for parallel phases; 0 keeps the runtime default.
struct Exec {
  int threads = 0;

  int resolved() const {
#ifdef _OPENMP
    return threads > 0 ? threads : omp_get_max_threads();
#else
    return 1;
#endif
  }
};

inline bool openmp_enabled() {
#ifdef _OPENMP
  return true;
#else
  return false;
#endif
}

}  // namespace protofold
