#pragma once

#include <cstddef>
#include <functional>

namespace percoldp {

/// Worker cap used by parallel loops. Defaults to PERCOLDP_THREADS when set,
/// otherwise the hardware concurrency.
std::size_t thread_count();
void set_thread_count(std::size_t n);

/// Runs body(i) for i in [0, n). Work is split into contiguous chunks, one
/// per worker; callers write results by index so output order never depends
/// on scheduling.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace percoldp
