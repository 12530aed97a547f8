#pragma once

#include <cstddef>
#include <exception>
#include <mutex>

#include <omp.h>

namespace tcprobe {

/// Worker cap for data-parallel loops. jobs <= 0 means all available cores.
struct Exec {
  int jobs = 0;

  int threads() const { return jobs > 0 ? jobs : omp_get_max_threads(); }
  static Exec serial() { return Exec{1}; }
};

/// Runs body(k) for k in [0, n) on up to exec.threads() OpenMP threads.
/// Every body writes only to its own slot, so results do not depend on the
/// schedule. The first exception thrown by any iteration is rethrown.
template <class Body>
void parallel_for(std::size_t n, const Exec& exec, Body&& body) {
  const int threads = exec.threads();
  if (threads <= 1 || n <= 1 || omp_in_parallel()) {
    for (std::size_t k = 0; k < n; ++k) body(k);
    return;
  }
  std::exception_ptr failure;
  std::mutex failure_mutex;
  const auto count = static_cast<long long>(n);
#pragma omp parallel for schedule(dynamic, 1) num_threads(threads)
  for (long long k = 0; k < count; ++k) {
    try {
      body(static_cast<std::size_t>(k));
    } catch (...) {
      std::lock_guard lock(failure_mutex);
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
}

}  // namespace tcprobe
