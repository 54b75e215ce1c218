#pragma once

#include <cstddef>
#include <exception>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace percol {

/// Serial is the reference path; Parallel must reproduce it bitwise.
enum class Execution { Serial, Parallel };

inline int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

/// Runs body(scratch, i) for i in [0, n). Each thread owns one scratch object
/// from make(); every index writes only its own output slots, so the result
/// does not depend on the schedule. The exception of the lowest failing index
/// is rethrown.
template <class MakeScratch, class Body>
void for_each_index(std::size_t n, Execution execution, MakeScratch&& make, Body&& body) {
  std::vector<std::exception_ptr> errors(n);
  auto guarded = [&](auto& scratch, std::size_t i) {
    try {
      body(scratch, i);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  };
#ifdef _OPENMP
  if (execution == Execution::Parallel && n > 1 && omp_get_max_threads() > 1) {
    const auto count = static_cast<long long>(n);
#pragma omp parallel
    {
      auto scratch = make();
#pragma omp for schedule(static)
      for (long long i = 0; i < count; ++i) guarded(scratch, static_cast<std::size_t>(i));
    }
  } else
#endif
  {
    (void)execution;
    auto scratch = make();
    for (std::size_t i = 0; i < n; ++i) guarded(scratch, i);
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace percol
