#pragma once

#include <cstdlib>
#include <exception>
#include <limits>
#include <string>

#include <Eigen/Core>

namespace cghs {

/// Environment variable read when a thread count of 0 is requested.
inline constexpr const char* kThreadsEnv = "CGHS_THREADS";

inline int resolve_threads(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv(kThreadsEnv)) {
    try {
      const int v = std::stoi(env);
      if (v > 0) return v;
    } catch (const std::exception&) {
    }
  }
  return 1;
}

/// Runs body(i) for i in [0, count). Iterations must write disjoint state.
/// If several iterations throw, the exception from the lowest index wins so
/// error reporting does not depend on the schedule.
template <typename Body>
void parallel_for(Eigen::Index count, int threads, Body&& body) {
  if (threads <= 1 || count < 2) {
    for (Eigen::Index i = 0; i < count; ++i) body(i);
    return;
  }
  std::exception_ptr error;
  Eigen::Index error_index = std::numeric_limits<Eigen::Index>::max();
#pragma omp parallel for num_threads(threads) schedule(static)
  for (Eigen::Index i = 0; i < count; ++i) {
    try {
      body(i);
    } catch (...) {
#pragma omp critical(cghs_parallel_for_error)
      {
        if (i < error_index) {
          error_index = i;
          error = std::current_exception();
        }
      }
    }
  }
  if (error) std::rethrow_exception(error);
}

}  // namespace cghs
