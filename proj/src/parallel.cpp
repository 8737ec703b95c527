#include "glstm/parallel.hpp"

#include <cstdlib>
#include <string>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace glstm {

int worker_count() {
#ifdef _OPENMP
  if (const char* env = std::getenv("GLSTM_THREADS")) {
    try {
      const int n = std::stoi(env);
      if (n > 0) return n;
    } catch (const std::exception&) {
    }
  }
  return omp_get_max_threads();
#else
  return 1;
#endif
}

}  // namespace glstm
