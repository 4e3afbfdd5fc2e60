#pragma once

#include <cstddef>
#include <functional>

namespace ltprune {

// Process-wide cap on worker threads. Every parallel loop in the library
// writes into preallocated, index-addressed output, so results never depend
// on this value.
void set_max_threads(std::size_t n);
std::size_t max_threads();

// Reads LTPRUNE_THREADS; returns `fallback` when unset or malformed.
std::size_t threads_from_env(std::size_t fallback = 1);

// Calls body(i) for i in [0, n), split into contiguous chunks.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace ltprune
