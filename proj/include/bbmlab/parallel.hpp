#pragma once

// Replica maps. Work is partitioned by replica index and every replica derives
// its randomness from (seed, index), so the parallel and serial versions
// return identical vectors.

#include <cstddef>
#include <exception>
#include <optional>
#include <type_traits>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace bbmlab {

// 0 means "use the OpenMP default".
int effective_jobs(int jobs);

template <class F>
auto map_replicas_serial(std::size_t count, F&& f) {
  using R = std::invoke_result_t<F&, std::size_t>;
  std::vector<R> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) out.push_back(f(i));
  return out;
}

template <class F>
auto map_replicas(std::size_t count, F&& f, int jobs = 0) {
  using R = std::invoke_result_t<F&, std::size_t>;
  const int threads = effective_jobs(jobs);
  if (threads <= 1 || count <= 1) return map_replicas_serial(count, f);

  std::vector<std::optional<R>> slots(count);
  std::exception_ptr failure;
  const auto n = static_cast<long long>(count);
#pragma omp parallel for schedule(dynamic) num_threads(threads)
  for (long long i = 0; i < n; ++i) {
    try {
      slots[static_cast<std::size_t>(i)].emplace(f(static_cast<std::size_t>(i)));
    } catch (...) {
#pragma omp critical(bbmlab_replica_failure)
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
  std::vector<R> out;
  out.reserve(count);
  for (auto& s : slots) out.push_back(std::move(*s));
  return out;
}

}  // namespace bbmlab
