#include "diolab/parallel.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace diolab {

int worker_count() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

void set_worker_count(int workers) {
  if (workers < 1) workers = 1;
#ifdef _OPENMP
  omp_set_num_threads(workers);
#else
  (void)workers;
#endif
}

}  // namespace diolab
