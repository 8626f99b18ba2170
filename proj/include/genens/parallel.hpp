#pragma once

#include <cstddef>
#include <exception>
#include <mutex>
#include <span>
#include <vector>

#include <omp.h>

namespace genens {

// Execution policy for the data-parallel kernels. `serial` is the reference
// path; `parallel` fans out with OpenMP. Both produce bit-identical results
// because every task derives its own seed and reductions are order-fixed.
enum class Exec { serial, parallel };

void set_num_threads(int n);
int max_threads();

// Calls fn(i) for i in [0, n). Exceptions thrown inside the parallel region
// are captured and the first one is rethrown on the calling thread.
template <class Fn>
void for_each_index(Exec exec, std::size_t n, Fn&& fn) {
  if (exec == Exec::serial || n < 2) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::exception_ptr failure;
  std::mutex failure_mutex;
  const auto count = static_cast<long long>(n);
#pragma omp parallel for schedule(dynamic, 1)
  for (long long i = 0; i < count; ++i) {
    try {
      fn(static_cast<std::size_t>(i));
    } catch (...) {
      std::lock_guard<std::mutex> lock(failure_mutex);
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
}

// Pairwise (cascade) summation: deterministic and with O(log n) error growth.
double pairwise_sum(std::span<const double> values) noexcept;

inline double pairwise_mean(std::span<const double> values) noexcept {
  return values.empty() ? 0.0 : pairwise_sum(values) / static_cast<double>(values.size());
}

// Unbiased (n-1) sample variance; zero for fewer than two values.
double sample_variance(std::span<const double> values);

// Unbiased sample covariance of two equally sized sequences.
double sample_covariance(std::span<const double> a, std::span<const double> b);

}  // namespace genens
