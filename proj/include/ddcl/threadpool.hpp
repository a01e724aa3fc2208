#pragma once

#include <cstddef>
#include <functional>

namespace ddcl {

// Deterministic parallel-for over [0, n). Work item i always computes the same
// result into its own slot, so outputs are independent of worker count and
// scheduling. Worker count is capped by the DDCL_THREADS environment variable.
std::size_t worker_count();                 // resolved cap (>= 1)
void set_worker_count(std::size_t n);       // 0 = re-read environment/default
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

} // namespace ddcl
