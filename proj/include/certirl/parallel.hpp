#pragma once

#include <atomic>
#include <cstdint>
#include <cstdlib>

#ifdef CERTIRL_HAVE_OPENMP
#include <omp.h>
#endif

namespace certirl {

// Runtime kill switch for the threaded kernels (the build-time switch is the
// CERTIRL_OPENMP cmake option). Starts enabled unless CERTIRL_SERIAL is set;
// the kernel benchmark and the parity tests flip it to compare paths.
inline std::atomic<bool>& parallel_flag() {
  static std::atomic<bool> f{std::getenv("CERTIRL_SERIAL") == nullptr};
  return f;
}
inline bool parallel_enabled() { return parallel_flag().load(std::memory_order_relaxed); }
inline void set_parallel(bool on) { parallel_flag().store(on, std::memory_order_relaxed); }

inline int worker_count() {
#ifdef CERTIRL_HAVE_OPENMP
  return parallel_enabled() ? omp_get_max_threads() : 1;
#else
  return 1;
#endif
}

// Static-schedule parallel for. Bodies must depend on nothing but their own
// index (every sampling site seeds a per-index rng stream), which makes the
// serial and threaded paths bit-identical by construction.
template <typename F>
void par_for(std::int64_t n, F&& body) {
#ifdef CERTIRL_HAVE_OPENMP
  if (parallel_enabled() && n > 1) {
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < n; ++i) body(i);
    return;
  }
#endif
  for (std::int64_t i = 0; i < n; ++i) body(i);
}

}  // namespace certirl
