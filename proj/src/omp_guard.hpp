#pragma once

#include <exception>
#include <mutex>

namespace pdmc::detail {

// Runs body(i) for i in [0, n) in an OpenMP loop and rethrows the first
// exception after the loop, since exceptions must not leave a parallel region.
template <typename Body>
void parallel_for(long long n, Body&& body) {
  std::exception_ptr error;
  std::mutex mu;
#pragma omp parallel for schedule(dynamic, 1)
  for (long long i = 0; i < n; ++i) {
    try {
      body(i);
    } catch (...) {
      const std::lock_guard<std::mutex> lock(mu);
      if (!error) error = std::current_exception();
    }
  }
  if (error) std::rethrow_exception(error);
}

}  // namespace pdmc::detail
