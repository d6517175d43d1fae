#include "bbmlab/parallel.hpp"

namespace bbmlab {

int effective_jobs(int jobs) {
  if (jobs > 0) return jobs;
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

}  // namespace bbmlab
